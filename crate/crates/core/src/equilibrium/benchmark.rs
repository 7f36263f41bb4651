//! Benchmark economy (every seller informed).

use crate::error::{Error, Result};
use crate::model::{validate, EconomyParams, Regime, Tolerances};
use crate::roots::{bisect, newton_polish, positive_quadratic_root};

use super::{non_interior_warnings, Equilibrium, SolverDiagnostics};

/// Cash-market breakdown threshold: the smaller root of
/// `(1 - pi) t^2 - t + pi (1 - phi) = 0`.
pub fn theta0(pi: f64, phi: f64) -> Result<f64> {
    let d = 1.0 - 4.0 * (1.0 - pi) * pi * (1.0 - phi);
    if !(d > 0.0) {
        return Err(Error::DiscriminantNegative { discriminant: d });
    }
    // Rationalized so the pi -> 0 limit does not cancel.
    Ok(2.0 * pi * (1.0 - phi) / (1.0 + d.sqrt()))
}

/// Prices and volume from one coexistence path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathSolution {
    pub p_b: f64,
    pub p_c: f64,
    pub k_b: f64,
    pub spread: f64,
    pub iterations: usize,
}

fn require_benchmark(params: &EconomyParams) -> Result<()> {
    validate(params).map_err(Error::InvalidParams)?;
    if !params.is_benchmark() {
        return Err(Error::Unsupported(format!(
            "benchmark solver called with lambda = {}",
            params.lambda
        )));
    }
    Ok(())
}

/// Clearing residuals `(K_B^S - K_B^D, K_C^S - K_C^D)` of the linear
/// benchmark system at prices `(p_b, p_c)`.
pub fn benchmark_residuals(params: &EconomyParams, p_b: f64, p_c: f64) -> (f64, f64) {
    let EconomyParams { pi, phi, theta, .. } = *params;
    let alpha_i = ((p_c - (1.0 - theta) * p_b) / (phi * theta)).max(0.0);
    let kb_s = pi * p_b + (1.0 - pi) * (1.0 - theta) * (p_b / phi - alpha_i);
    let kc_s = (1.0 - pi) * alpha_i;
    let pi_b = pi * p_b / kb_s;
    let tb = pi_b + (1.0 - pi_b) * phi;
    let alpha_star = (p_b - p_c) / (tb - phi);
    let kb_d = 1.0 - alpha_star;
    let kc_d = alpha_star - p_c / phi;
    (kb_s - kb_d, kc_s - kc_d)
}

/// Closed-form equilibrium when the cash market is shut (`theta <= theta0`).
pub fn solve_no_c(params: &EconomyParams) -> Result<Equilibrium> {
    require_benchmark(params)?;
    let EconomyParams { pi, phi, theta, .. } = *params;
    let t0 = theta0(pi, phi)?;
    if theta > t0 {
        return Err(Error::RegimeMismatch {
            theta,
            theta0: t0,
            expected: Regime::NoCMarket,
        });
    }
    let s = (1.0 - pi) * (1.0 - theta);
    let denom = 2.0 - theta * (1.0 - pi);
    let p_b = phi * (pi + s) / (denom * (phi * pi + s));
    let k_b = (pi + s) / denom;
    let spread = pi * (1.0 - phi) / (pi + s);
    let p_c = (1.0 - spread) * p_b;
    let pi_b = phi * pi / (phi * pi + s);
    let mut eq = assemble(params, p_b, p_c, k_b, pi_b, 0.0, Regime::NoCMarket);
    eq.alpha_star = 1.0 - k_b;
    eq.spread_s = spread;
    let (rb, rc) = benchmark_residuals(params, p_b, p_c);
    eq.diagnostics.residual_b = rb;
    eq.diagnostics.residual_c = rc;
    if p_c > (1.0 - theta) * p_b * (1.0 + 1e-12) {
        eq.diagnostics
            .warnings
            .push("P_C exceeds (1-theta) P_B: informed lemons would enter C".into());
    }
    eq.diagnostics.warnings.extend(non_interior_warnings(&eq));
    Ok(eq)
}

/// Coexistence via the quadratic in the normalized spread `S`.
pub fn coexistence_path1(params: &EconomyParams) -> PathSolution {
    let EconomyParams { pi, phi, theta, .. } = *params;
    let a = (1.0 - pi) * (1.0 - theta);
    let b = pi * theta + pi * (1.0 - pi) * (1.0 - phi);
    let c = -pi * theta * (1.0 - phi) * (2.0 - pi);
    let s = positive_quadratic_root(a, b, c);
    let k_b = pi * (1.0 - phi) / (pi * (1.0 - phi) + s);
    let p_b = k_b / (pi + (1.0 - pi) * (1.0 - theta) * s / (phi * theta));
    PathSolution {
        p_b,
        p_c: (1.0 - s) * p_b,
        k_b,
        spread: s,
        iterations: 0,
    }
}

/// `H(y, g)` in `y = 1/P_B`; its root on [`ImplicitH::bracket`] is the
/// coexistence price.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImplicitH {
    pi: f64,
    phi: f64,
    g: f64,
    k: f64,
    b0: f64,
    c0: f64,
}

impl ImplicitH {
    pub fn new(params: &EconomyParams) -> Self {
        let EconomyParams { pi, phi, .. } = *params;
        let g = params.g();
        let eta = params.eta();
        Self {
            pi,
            phi,
            g,
            k: phi / (2.0 - pi),
            b0: (1.0 - phi) * pi + eta,
            c0: pi + (1.0 - pi) * g * eta / phi,
        }
    }

    pub fn value(&self, y: f64) -> f64 {
        let Self {
            pi,
            phi,
            g,
            k,
            b0,
            c0,
        } = *self;
        c0 - pi * (1.0 - phi) * y / (b0 - k * y) - (1.0 - pi) * g * y / (2.0 - pi)
    }

    pub fn slope(&self, y: f64) -> f64 {
        let Self {
            pi, phi, g, k, b0, ..
        } = *self;
        let d = b0 - k * y;
        -pi * (1.0 - phi) * b0 / (d * d) - (1.0 - pi) * g / (2.0 - pi)
    }

    /// `(eps, 1/p* - eps)` with `p* = phi / (2 - pi(1 - phi))`.
    pub fn bracket(&self) -> (f64, f64) {
        let p_star = self.phi / (2.0 - self.pi * (1.0 - self.phi));
        let eps = 1e-9;
        (eps, 1.0 / p_star - eps)
    }
}

/// Coexistence via the root of `H(y, g)` in `y = 1/P_B`.
pub fn coexistence_path2(params: &EconomyParams, tol: &Tolerances) -> Result<PathSolution> {
    let EconomyParams { pi, phi, .. } = *params;
    let hf = ImplicitH::new(params);
    let (k, b0) = (hf.k, hf.b0);
    let h = |y: f64| hf.value(y);
    let dh = |y: f64| hf.slope(y);
    let (lo, hi) = hf.bracket();
    let root = bisect(h, lo, hi, tol.bracket, tol.max_iter).map_err(|e| match e {
        Error::RootNotBracketed { f_lo, f_hi, .. } => Error::ConvergenceFailure {
            what: format!("H(y) bracket [{lo}, {hi}] with H = ({f_lo}, {f_hi})"),
            iterations: 0,
            residual: f_lo.abs().min(f_hi.abs()),
        },
        other => other,
    })?;
    let polished = newton_polish(h, dh, root.x, lo, hi, 8);
    let y = polished.x;
    let p_b = 1.0 / y;
    let p_c = phi * (1.0 - pi * p_b) / (2.0 - pi);
    let k_b = (1.0 - phi) * pi * p_b / (b0 * p_b - k);
    Ok(PathSolution {
        p_b,
        p_c,
        k_b,
        spread: 1.0 - p_c / p_b,
        iterations: root.iterations + polished.iterations,
    })
}

/// Coexistence equilibrium (`theta0 < theta <= 1`), cross-checked by both paths.
pub fn solve_coexistence(params: &EconomyParams, tol: &Tolerances) -> Result<Equilibrium> {
    require_benchmark(params)?;
    let EconomyParams { pi, phi, theta, .. } = *params;
    let t0 = theta0(pi, phi)?;
    if theta <= t0 {
        return Err(Error::RegimeMismatch {
            theta,
            theta0: t0,
            expected: Regime::Coexistence,
        });
    }
    let p1 = coexistence_path1(params);
    let p2 = coexistence_path2(params, tol)?;
    let disagreement = (p1.p_b - p2.p_b)
        .abs()
        .max((p1.p_c - p2.p_c).abs())
        .max((p1.k_b - p2.k_b).abs());
    if !(disagreement <= tol.path_agreement) {
        return Err(Error::PathDisagreement {
            path1: p1.p_b,
            path2: p2.p_b,
        });
    }
    let pi_b = pi * p1.p_b / p1.k_b;
    let alpha_i = (p1.p_c - (1.0 - theta) * p1.p_b) / (phi * theta);
    let k_c = (1.0 - pi) * alpha_i;
    let mut eq = assemble(
        params,
        p1.p_b,
        p1.p_c,
        p1.k_b,
        pi_b,
        k_c,
        Regime::Coexistence,
    );
    eq.spread_s = p1.spread;
    let (rb, rc) = benchmark_residuals(params, p1.p_b, p1.p_c);
    let d = &mut eq.diagnostics;
    d.residual_b = rb;
    d.residual_c = rc;
    d.path_disagreement = disagreement;
    d.iterations = p2.iterations;
    if !(rb.abs().max(rc.abs()) < tol.residual) {
        return Err(Error::ConvergenceFailure {
            what: "coexistence clearing".into(),
            iterations: p2.iterations,
            residual: rb.abs().max(rc.abs()),
        });
    }
    eq.diagnostics.warnings = non_interior_warnings(&eq);
    Ok(eq)
}

fn assemble(
    params: &EconomyParams,
    p_b: f64,
    p_c: f64,
    k_b: f64,
    pi_b: f64,
    k_c: f64,
    regime: Regime,
) -> Equilibrium {
    let phi = params.phi;
    let theta = params.theta;
    let alpha_i = ((p_c - (1.0 - theta) * p_b) / (phi * theta)).max(0.0);
    let tb = pi_b + (1.0 - pi_b) * phi;
    Equilibrium {
        params: *params,
        p_b,
        p_c,
        pi_b,
        pi_c: 0.0,
        k_b,
        k_c,
        alpha_star: (p_b - p_c) / (tb - phi),
        alpha_i: if regime == Regime::NoCMarket {
            0.0
        } else {
            alpha_i
        },
        alpha0_u: None,
        alpha1_u: None,
        q_crypto: p_b * k_b,
        spread_s: 1.0 - p_c / p_b,
        regime,
        diagnostics: SolverDiagnostics {
            g: params.g(),
            eta: params.eta(),
            h: params.h(),
            y: 1.0 / p_b,
            ..Default::default()
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    #[test]
    fn theta0_examples() {
        let t = theta0(0.3, 0.5).unwrap();
        assert!((t - 0.170_301_921_009_720_8).abs() < 1e-15);
        assert!((0.7 * t * t - t + 0.15).abs() < 1e-15);
        let t = theta0(0.3, 0.9).unwrap();
        assert!((t - 0.030_657_936_342_548_62).abs() < 1e-15);
        assert!(theta0(1e-12, 0.5).unwrap() < 1e-11);
    }

    #[test]
    fn theta0_rejects_violated_condition() {
        assert!(matches!(
            theta0(0.5, 0.0),
            Err(Error::DiscriminantNegative { .. })
        ));
    }

    #[test]
    fn no_c_example() {
        let eq = solve_no_c(&EconomyParams::new(0.3, 0.5, 0.1)).unwrap();
        assert!((eq.p_b - 0.308_888_003_188_521_3).abs() < 1e-12);
        assert!((eq.p_c - 0.259_067_357_512_953_3).abs() < 1e-12);
        assert!((eq.k_b - 0.481_865_284_974_093_3).abs() < 1e-12);
        assert!((eq.pi_b - 0.192_307_692_307_692_3).abs() < 1e-12);
        assert!((eq.q_crypto - 0.148_842_405_681_515_4).abs() < 1e-12);
        assert_eq!(eq.k_c, 0.0);
        assert_eq!(eq.regime, Regime::NoCMarket);
        assert!(eq.diagnostics.residual_b.abs() < 1e-14);
        assert!(eq.diagnostics.residual_c.abs() < 1e-14);
    }

    #[test]
    fn coexistence_example() {
        let eq = solve_coexistence(&EconomyParams::new(0.3, 0.5, 0.5), &tol()).unwrap();
        assert!((eq.spread_s - 0.340_689_317_838_379_7).abs() < 1e-12);
        assert!((eq.p_b - 0.393_444_224_692_003_96).abs() < 1e-12);
        assert!((eq.p_c - 0.259_401_980_174_235).abs() < 1e-12);
        assert!((eq.k_b - 0.305_692_409_732_477_8).abs() < 1e-12);
        assert!((eq.pi_b - 0.386_117_756_443_139_2).abs() < 1e-12);
        assert!((eq.q_crypto - 0.120_272_913_141_425_13).abs() < 1e-12);
        assert!((eq.k_c - 0.175_503_629_919_052_4).abs() < 1e-12);
        assert!(eq.diagnostics.path_disagreement < 1e-12);
    }

    #[test]
    fn full_security_rejects_every_lemon() {
        let p = EconomyParams::new(0.3, 0.5, 1.0);
        let eq = solve_coexistence(&p, &tol()).unwrap();
        assert!((eq.pi_b - 1.0).abs() < 1e-14);
        assert!((eq.alpha_i - eq.p_c / 0.5).abs() < 1e-14);
    }

    #[test]
    fn regime_routing_errors() {
        let p = EconomyParams::new(0.3, 0.5, 0.5);
        assert!(matches!(solve_no_c(&p), Err(Error::RegimeMismatch { .. })));
        let t0 = theta0(0.3, 0.5).unwrap();
        let at = p.with_theta(t0);
        assert!(matches!(
            solve_coexistence(&at, &tol()),
            Err(Error::RegimeMismatch { .. })
        ));
        assert!(solve_no_c(&at).is_ok());
    }

    #[test]
    fn general_params_rejected() {
        let p = EconomyParams::new(0.3, 0.5, 0.5).with_lambda(0.5);
        assert!(matches!(
            solve_coexistence(&p, &tol()),
            Err(Error::Unsupported(_))
        ));
    }
}
