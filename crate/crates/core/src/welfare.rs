//! Buyer and seller welfare, platform fees and the seller price elasticity.

use serde::{Deserialize, Serialize};

use crate::diff::{theta_derivative_richardson, STEP};
use crate::equilibrium::{solve_benchmark, theta0, Equilibrium};
use crate::error::{Error, Result};
use crate::model::{uniform_cdf as f, EconomyParams, Regime, Tolerances};

/// Largest accepted gap between closed-form and integrated buyer welfare.
pub const WELFARE_AGREEMENT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuyerWelfare {
    pub v_b: f64,
    pub v_0: f64,
    pub f_b: f64,
    /// `v_B` integrated directly over the buyer cutoffs.
    pub v_b_direct: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellerWelfare {
    pub v_s_h: f64,
    pub v_s_l: f64,
    pub dv_s_h: f64,
    pub dv_s_l: f64,
    pub f_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Elasticity {
    /// `-(dP_B/dg) g / P_B`.
    pub epsilon_p: f64,
    /// `[2 - pi(1-phi)] P_B (1 - 2 eps) - phi`; its sign is minus that of
    /// `d dv_{S,L} / d theta`.
    pub bracket: f64,
    /// The same expression with `(1 - eps)`.
    pub bracket_uncorrected: f64,
    /// Predicted sign of `d dv_{S,L} / d theta`.
    pub predicted_sign: i8,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WelfareReport {
    pub v_b: f64,
    pub v_0: f64,
    pub f_b: f64,
    pub v_s_h: f64,
    pub v_s_l: f64,
    pub dv_s_h: f64,
    pub dv_s_l: f64,
    pub f_s: f64,
    pub elasticity_p: Option<f64>,
}

fn require_benchmark(eq: &Equilibrium, what: &str) -> Result<()> {
    if eq.params.is_benchmark() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "{what} is defined only for lambda = 1 (got {})",
            eq.params.lambda
        )))
    }
}

/// `int_a^b (s x - c) dx`.
fn linear_integral(a: f64, b: f64, slope: f64, c: f64) -> f64 {
    slope * (b * b - a * a) / 2.0 - c * (b - a)
}

/// Buyer welfare, reservation welfare and the buyer-side fee.
pub fn buyer_welfare(eq: &Equilibrium) -> Result<BuyerWelfare> {
    require_benchmark(eq, "buyer welfare")?;
    let EconomyParams { pi, phi, .. } = eq.params;
    let v_0 = (phi - eq.p_c).powi(2) / (2.0 * phi);
    let f_b = pi * (1.0 - phi) * eq.p_b * eq.k_b / 2.0;
    let v_b = v_0 + f_b;

    let a_star = f(eq.alpha_star);
    let c_cut = f(eq.p_c / phi).min(a_star);
    let v_b_direct = linear_integral(a_star, 1.0, eq.pitilde_b(), eq.p_b)
        + linear_integral(c_cut, a_star, phi, eq.p_c);
    if !((v_b - v_b_direct).abs() <= WELFARE_AGREEMENT) {
        return Err(Error::WelfareMismatch {
            closed_form: v_b,
            direct: v_b_direct,
        });
    }
    Ok(BuyerWelfare {
        v_b,
        v_0,
        f_b,
        v_b_direct,
    })
}

/// `v_0` in the coexistence form `phi (1 - pi + pi P_B)^2 / (2 (2 - pi)^2)`.
pub fn reservation_welfare_coexistence(pi: f64, phi: f64, p_b: f64) -> f64 {
    phi * (1.0 - pi + pi * p_b).powi(2) / (2.0 * (2.0 - pi).powi(2))
}

/// Welfare of a seller holding an asset worth `value * alpha` who can only
/// sell at `p_c`.
fn reservation_seller(p_c: f64, value: f64) -> f64 {
    let c = f(p_c / value);
    p_c * c + value * (1.0 - c * c) / 2.0
}

/// H- and L-type seller welfare, gains from the B-market and the seller fee.
pub fn seller_welfare(eq: &Equilibrium) -> Result<SellerWelfare> {
    require_benchmark(eq, "seller welfare")?;
    let EconomyParams { pi, phi, theta, .. } = eq.params;
    let (p_b, p_c) = (eq.p_b, eq.p_c);

    let u = f(p_b);
    let v_s_h = (1.0 - u * u) / 2.0 + p_b * u;

    let u = f(p_b / phi);
    let a = f(eq.alpha_i).min(u);
    let v_s_l = phi * (1.0 - u * u) / 2.0
        + (1.0 - theta) * p_b * (u - a)
        + theta * phi * (u * u - a * a) / 2.0
        + p_c * a;

    let dv_s_h = (p_b * p_b - p_c * p_c) / 2.0;
    let dv_s_l = match eq.regime {
        Regime::Coexistence => (1.0 - theta) * (p_b - p_c).powi(2) / (2.0 * phi * theta),
        Regime::NoCMarket => v_s_l - reservation_seller(p_c, phi),
    };
    Ok(SellerWelfare {
        v_s_h,
        v_s_l,
        dv_s_h,
        dv_s_l,
        f_s: pi * dv_s_h + (1.0 - pi) * dv_s_l,
    })
}

/// Price elasticity of `P_B` with respect to `g = (1 - theta)/theta`,
/// Richardson-extrapolated from central differences of step `step`.
pub fn seller_elasticity(
    params: &EconomyParams,
    step: f64,
    tol: &Tolerances,
) -> Result<Elasticity> {
    let EconomyParams { pi, phi, theta, .. } = *params;
    if !params.is_benchmark() {
        return Err(Error::Unsupported(
            "elasticity is defined only for lambda = 1".into(),
        ));
    }
    let t0 = theta0(pi, phi)?;
    if theta - 2.0 * step <= t0 {
        return Err(Error::RegimeMismatch {
            theta,
            theta0: t0,
            expected: Regime::Coexistence,
        });
    }
    let p_b = solve_benchmark(params, tol)?.p_b;
    let d = theta_derivative_richardson(params, step, |t| {
        Ok(solve_benchmark(&params.with_theta(t), tol)?.p_b)
    })?;
    let epsilon_p = d * theta * (1.0 - theta) / p_b;
    let lead = (2.0 - pi * (1.0 - phi)) * p_b;
    let bracket = lead * (1.0 - 2.0 * epsilon_p) - phi;
    Ok(Elasticity {
        epsilon_p,
        bracket,
        bracket_uncorrected: lead * (1.0 - epsilon_p) - phi,
        predicted_sign: -(bracket.signum() as i8),
    })
}

/// All welfare quantities for a benchmark equilibrium. The elasticity is
/// present when the stencil fits inside the coexistence regime.
pub fn welfare_report(eq: &Equilibrium, tol: &Tolerances) -> Result<WelfareReport> {
    let b = buyer_welfare(eq)?;
    let s = seller_welfare(eq)?;
    let elasticity_p = match eq.regime {
        Regime::Coexistence => seller_elasticity(&eq.params, STEP, tol)
            .ok()
            .map(|e| e.epsilon_p),
        Regime::NoCMarket => None,
    };
    Ok(WelfareReport {
        v_b: b.v_b,
        v_0: b.v_0,
        f_b: b.f_b,
        v_s_h: s.v_s_h,
        v_s_l: s.v_s_l,
        dv_s_h: s.dv_s_h,
        dv_s_l: s.dv_s_l,
        f_s: s.f_s,
        elasticity_p,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_no_c;

    fn eq(pi: f64, phi: f64, theta: f64) -> Equilibrium {
        solve_benchmark(&EconomyParams::new(pi, phi, theta), &Tolerances::default()).unwrap()
    }

    #[test]
    fn buyer_example() {
        let w = buyer_welfare(&eq(0.3, 0.5, 0.5)).unwrap();
        assert!((w.f_b - 0.009_020_468_485_606_885).abs() < 1e-14);
        assert!((w.v_0 - 0.057_887_407_144_079_236).abs() < 1e-14);
        assert!((w.v_b - 0.066_907_875_629_686_12).abs() < 1e-13);
    }

    #[test]
    fn reservation_forms_agree_in_coexistence() {
        let e = eq(0.3, 0.5, 0.5);
        let w = buyer_welfare(&e).unwrap();
        assert!((w.v_0 - reservation_welfare_coexistence(0.3, 0.5, e.p_b)).abs() < 1e-14);
    }

    #[test]
    fn fee_is_proportional_to_crypto_price() {
        let e = eq(0.4, 0.6, 0.8);
        let w = buyer_welfare(&e).unwrap();
        assert_eq!(w.f_b, 0.4 * (1.0 - 0.6) * e.p_b * e.k_b / 2.0);
        assert!((w.f_b - 0.4 * 0.4 / 2.0 * e.q_crypto).abs() < 1e-16);
    }

    #[test]
    fn no_c_direct_integral_agrees() {
        let e = solve_no_c(&EconomyParams::new(0.3, 0.5, 0.1)).unwrap();
        let w = buyer_welfare(&e).unwrap();
        assert!((w.v_b - w.v_b_direct).abs() < 1e-12);
    }

    #[test]
    fn seller_example() {
        let s = seller_welfare(&eq(0.3, 0.5, 0.5)).unwrap();
        assert!((s.dv_s_h - 0.043_754_485_312_588_944).abs() < 1e-14);
        let e = eq(0.3, 0.5, 0.5);
        assert!((s.v_s_h - (1.0 + e.p_b * e.p_b) / 2.0).abs() < 1e-15);
        assert!(s.dv_s_l > 0.0);
    }

    #[test]
    fn full_security_gives_no_lemon_gain() {
        let s = seller_welfare(&eq(0.3, 0.5, 1.0)).unwrap();
        assert_eq!(s.dv_s_l, 0.0);
    }

    #[test]
    fn lemon_gain_matches_direct_difference() {
        let e = eq(0.3, 0.6, 0.6);
        let s = seller_welfare(&e).unwrap();
        let direct = s.v_s_l - reservation_seller(e.p_c, 0.6);
        assert!((s.dv_s_l - direct).abs() < 1e-12);
    }

    #[test]
    fn elasticity_positive_and_sign_prediction() {
        let tol = Tolerances::default();
        let p = EconomyParams::new(0.3, 0.5, 0.6);
        let e = seller_elasticity(&p, STEP, &tol).unwrap();
        assert!(e.epsilon_p > 0.0);
        assert!(matches!(
            seller_elasticity(&p.with_theta(0.17031), STEP, &tol),
            Err(Error::RegimeMismatch { .. })
        ));
    }

    #[test]
    fn general_equilibrium_rejected() {
        let mut e = eq(0.3, 0.5, 0.5);
        e.params.lambda = 0.5;
        assert!(matches!(seller_welfare(&e), Err(Error::Unsupported(_))));
    }
}
