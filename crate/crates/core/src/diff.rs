//! Finite differences in `theta` that refuse to straddle the regime boundary.

use crate::equilibrium::theta0;
use crate::error::{Error, Result};
use crate::model::EconomyParams;

/// Default step for comparative statics.
pub const STEP: f64 = 1e-5;
/// Derivatives smaller than this in magnitude carry no sign.
pub const DEAD_BAND: f64 = 1e-8;

/// `+1`, `-1`, or `0` inside the dead-band.
pub fn sign(d: f64, band: f64) -> i8 {
    if d > band {
        1
    } else if d < -band {
        -1
    } else {
        0
    }
}

/// Derivative of `f` in `theta` at `params.theta`.
///
/// Central difference when `theta + step <= 1`, otherwise the second-order
/// backward stencil. Every stencil point must lie on the same side of
/// `theta0` as `theta`.
pub fn theta_derivative<F>(params: &EconomyParams, step: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let theta = params.theta;
    let t0 = theta0(params.pi, params.phi)?;
    let straddle = Error::RegimeStraddle {
        theta,
        step,
        theta0: t0,
    };
    let same_side = |x: f64| (x <= t0) == (theta <= t0) && x > 0.0;
    if theta + step <= 1.0 {
        let (lo, hi) = (theta - step, theta + step);
        if !same_side(lo) || !same_side(hi) {
            return Err(straddle);
        }
        Ok((f(hi)? - f(lo)?) / (2.0 * step))
    } else {
        let (m1, m2) = (theta - step, theta - 2.0 * step);
        if !same_side(m1) || !same_side(m2) {
            return Err(straddle);
        }
        Ok((3.0 * f(theta)? - 4.0 * f(m1)? + f(m2)?) / (2.0 * step))
    }
}

/// One Richardson step on [`theta_derivative`]: `(4 D(h/2) - D(h)) / 3`.
pub fn theta_derivative_richardson<F>(params: &EconomyParams, step: f64, mut f: F) -> Result<f64>
where
    F: FnMut(f64) -> Result<f64>,
{
    let coarse = theta_derivative(params, step, &mut f)?;
    let fine = theta_derivative(params, step / 2.0, &mut f)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn central_difference_of_cubic() {
        let p = EconomyParams::new(0.3, 0.5, 0.5);
        let d = theta_derivative(&p, 1e-5, |t| Ok(t * t * t)).unwrap();
        assert!((d - 0.75).abs() < 1e-9);
    }

    #[test]
    fn one_sided_at_full_security() {
        let p = EconomyParams::new(0.3, 0.5, 1.0);
        let d = theta_derivative(&p, 1e-4, |t| Ok(t * t)).unwrap();
        assert!((d - 2.0).abs() < 1e-10);
    }

    #[test]
    fn richardson_improves_accuracy() {
        let p = EconomyParams::new(0.3, 0.5, 0.5);
        let exact = 0.5f64.exp();
        let d = theta_derivative_richardson(&p, 1e-2, |t| Ok(t.exp())).unwrap();
        let plain = theta_derivative(&p, 1e-2, |t| Ok(t.exp())).unwrap();
        assert!((d - exact).abs() < (plain - exact).abs());
    }

    #[test]
    fn straddle_is_an_error() {
        let t0 = theta0(0.3, 0.5).unwrap();
        let p = EconomyParams::new(0.3, 0.5, t0 + 1e-6);
        let r = theta_derivative(&p, 1e-5, Ok);
        assert!(matches!(r, Err(Error::RegimeStraddle { .. })));
    }

    #[test]
    fn dead_band_sign() {
        assert_eq!(sign(1e-9, DEAD_BAND), 0);
        assert_eq!(sign(-1e-3, DEAD_BAND), -1);
        assert_eq!(sign(2e-8, DEAD_BAND), 1);
    }
}
