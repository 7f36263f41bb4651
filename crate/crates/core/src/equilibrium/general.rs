//! Economy with a fraction `1 - lambda` of uninformed sellers.
//!
//! The uninformed participation indicator `chi` makes the system
//! discontinuous, so each branch is solved on its own and kept only if the
//! solution reproduces its own `chi`.

use crate::error::{Error, Result};
use crate::model::{uniform_cdf as f, validate, EconomyParams, Regime, Tolerances};

use super::{non_interior_warnings, solve_benchmark, Equilibrium, SolverDiagnostics};

/// Supply, demand and quality of the 2-D system at given prices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralPoint {
    pub residual_b: f64,
    pub residual_c: f64,
    pub k_b: f64,
    pub k_c: f64,
    pub pi_b: f64,
    pub pi_c: f64,
    pub alpha_i: f64,
    pub alpha_star: f64,
    pub alpha0_u: f64,
    pub alpha1_u: f64,
    pub xi: f64,
    pub pi0: f64,
    pub pitilde: f64,
    /// Whether `1{xi P_B > P_C}` equals the branch that was assumed.
    pub chi_consistent: bool,
}

impl GeneralPoint {
    pub fn residual(&self) -> f64 {
        let r = self.residual_b.abs().max(self.residual_c.abs());
        if r.is_nan() {
            f64::INFINITY
        } else {
            r
        }
    }
}

/// Evaluates the uninformed-seller system on branch `chi`.
pub fn general_system(params: &EconomyParams, p_b: f64, p_c: f64, chi: bool) -> GeneralPoint {
    let EconomyParams {
        pi,
        phi,
        theta,
        lambda,
    } = *params;
    let alpha_i = ((p_c - (1.0 - theta) * p_b) / (phi * theta)).max(0.0);
    let pitilde = pi + phi * (1.0 - pi);
    let pi0 = pi + (1.0 - pi) * (1.0 - theta);
    let denom1 = pi + phi * (1.0 - pi) * (1.0 - theta);
    let alpha0_u = (p_c - pi0 * p_b) / (phi * theta * (1.0 - pi));
    let alpha1_u = pi0 * p_b / denom1;
    let xi = pi0 * pitilde / denom1;

    let (unc_c, unc_b) = if chi {
        (f(alpha0_u), f(alpha1_u) - f(alpha0_u))
    } else {
        (f(p_c / pitilde), 0.0)
    };
    let k_c = lambda * (1.0 - pi) * f(alpha_i) + (1.0 - lambda) * unc_c;
    let informed_h = lambda * pi * f(p_b);
    let k_b = lambda * (pi * f(p_b) + (1.0 - pi) * (1.0 - theta) * (f(p_b / phi) - f(alpha_i)))
        + (1.0 - lambda) * pi0 * unc_b;
    let pi_b = (informed_h + (1.0 - lambda) * pi * unc_b) / k_b;
    let pi_c = if k_c > 0.0 {
        (1.0 - lambda) * pi * unc_c / k_c
    } else {
        0.0
    };
    let tb = pi_b + (1.0 - pi_b) * phi;
    let tc = pi_c + (1.0 - pi_c) * phi;
    let alpha_star = (p_b - p_c) / (tb - tc);
    GeneralPoint {
        residual_b: k_b - (1.0 - alpha_star),
        residual_c: k_c - (alpha_star - p_c / tc),
        k_b,
        k_c,
        pi_b,
        pi_c,
        alpha_i,
        alpha_star,
        alpha0_u,
        alpha1_u,
        xi,
        pi0,
        pitilde,
        chi_consistent: (xi * p_b > p_c) == chi,
    }
}

struct NewtonOutcome {
    x: [f64; 2],
    point: GeneralPoint,
    iterations: usize,
}

/// Damped Newton on `(P_B, P_C)` with a central-difference Jacobian and
/// step halving.
fn newton(params: &EconomyParams, x0: [f64; 2], chi: bool, max_iter: usize) -> NewtonOutcome {
    let eval = |x: [f64; 2]| general_system(params, x[0], x[1], chi);
    let mut x = x0;
    let mut pt = eval(x);
    let mut it = 0;
    let h = 1e-7;
    while it < max_iter && pt.residual() > 1e-14 {
        it += 1;
        let r = [pt.residual_b, pt.residual_c];
        let mut j = [[0.0; 2]; 2];
        for (col, _) in x.iter().enumerate() {
            let mut xp = x;
            let mut xm = x;
            xp[col] += h;
            xm[col] -= h;
            let (a, b) = (eval(xp), eval(xm));
            j[0][col] = (a.residual_b - b.residual_b) / (2.0 * h);
            j[1][col] = (a.residual_c - b.residual_c) / (2.0 * h);
        }
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dx = [
            -(j[1][1] * r[0] - j[0][1] * r[1]) / det,
            -(-j[1][0] * r[0] + j[0][0] * r[1]) / det,
        ];
        let mut t = 1.0;
        let mut accepted = false;
        while t > 1e-6 {
            let xn = [x[0] + t * dx[0], x[1] + t * dx[1]];
            let pn = eval(xn);
            if pn.residual() < pt.residual() {
                x = xn;
                pt = pn;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    NewtonOutcome {
        x,
        point: pt,
        iterations: it,
    }
}

fn rejection_reason(x: [f64; 2], p: &GeneralPoint, tol: &Tolerances, phi: f64) -> Option<String> {
    if !(p.residual() < tol.residual) {
        return Some(format!("residual {:e}", p.residual()));
    }
    if !p.chi_consistent {
        return Some(format!(
            "chi not self-consistent (xi P_B = {}, P_C = {})",
            p.xi * x[0],
            x[1]
        ));
    }
    if !(p.k_b > 0.0 && p.k_b < 1.0 && p.k_c >= 0.0) {
        return Some(format!("volumes k_b {} k_c {}", p.k_b, p.k_c));
    }
    if !(x[0] > x[1] && x[1] > 0.0) {
        return Some(format!("prices p_b {} p_c {}", x[0], x[1]));
    }
    let tb = p.pi_b + (1.0 - p.pi_b) * phi;
    let tc = p.pi_c + (1.0 - p.pi_c) * phi;
    if !(x[0] / tb > x[1] / tc && p.pi_b > p.pi_c) {
        return Some("venue ordering guess fails".into());
    }
    None
}

struct Candidate {
    chi: bool,
    x: [f64; 2],
    point: GeneralPoint,
    iterations: usize,
}

/// Solves the uninformed-seller economy (`0 < lambda < 1`).
///
/// Each `chi` branch is continued in `lambda` from the benchmark solution;
/// a multi-start search runs only if neither continuation yields a valid
/// equilibrium. Several distinct valid solutions are reported as
/// [`Error::MultipleEquilibria`].
pub fn solve_general(params: &EconomyParams, tol: &Tolerances) -> Result<Equilibrium> {
    validate(params).map_err(Error::InvalidParams)?;
    if params.is_benchmark() {
        return Err(Error::Unsupported(
            "solve_general requires lambda < 1".into(),
        ));
    }
    let start = solve_benchmark(&params.with_lambda(1.0), tol)?;
    let steps = 10;
    let mut valid: Vec<Candidate> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut any_converged = false;

    for chi in [true, false] {
        let mut x = [start.p_b, start.p_c];
        let mut iterations = 0;
        let mut out = None;
        for k in 1..=steps {
            let lam = 1.0 + (params.lambda - 1.0) * k as f64 / steps as f64;
            let o = newton(&params.with_lambda(lam), x, chi, tol.max_iter);
            iterations += o.iterations;
            x = o.x;
            out = Some(o);
        }
        let o = out.expect("at least one continuation step");
        any_converged |= o.point.residual() < tol.residual;
        match rejection_reason(o.x, &o.point, tol, params.phi) {
            None => valid.push(Candidate {
                chi,
                x: o.x,
                point: o.point,
                iterations,
            }),
            Some(r) => notes.push(format!("chi={}: {r}", chi as u8)),
        }
    }

    if valid.is_empty() {
        for chi in [true, false] {
            for i in 0..12 {
                for j in 0..12 {
                    let pb = 0.05 + 0.95 * i as f64 / 11.0;
                    let pc = 0.02 + 0.88 * j as f64 / 11.0;
                    if pc >= pb {
                        continue;
                    }
                    let o = newton(params, [pb, pc], chi, tol.max_iter);
                    any_converged |= o.point.residual() < tol.residual;
                    if rejection_reason(o.x, &o.point, tol, params.phi).is_none() {
                        valid.push(Candidate {
                            chi,
                            x: o.x,
                            point: o.point,
                            iterations: o.iterations,
                        });
                    }
                }
            }
        }
    }

    let mut distinct: Vec<Candidate> = Vec::new();
    for c in valid {
        if !distinct
            .iter()
            .any(|d| (d.x[0] - c.x[0]).abs() < 1e-8 && (d.x[1] - c.x[1]).abs() < 1e-8)
        {
            distinct.push(c);
        }
    }

    match distinct.len() {
        1 => Ok(build(params, distinct.pop().expect("one candidate"))),
        0 if any_converged => Err(Error::NoBranchConsistent {
            details: notes.join("; "),
        }),
        0 => Err(Error::ConvergenceFailure {
            what: format!("uninformed-seller system ({})", notes.join("; ")),
            iterations: tol.max_iter,
            residual: f64::NAN,
        }),
        _ => Err(Error::MultipleEquilibria(
            distinct.into_iter().map(|c| build(params, c)).collect(),
        )),
    }
}

fn build(params: &EconomyParams, c: Candidate) -> Equilibrium {
    let [p_b, p_c] = c.x;
    let p = c.point;
    let mut eq = Equilibrium {
        params: *params,
        p_b,
        p_c,
        pi_b: p.pi_b,
        pi_c: p.pi_c,
        k_b: p.k_b,
        k_c: p.k_c,
        alpha_star: p.alpha_star,
        alpha_i: p.alpha_i,
        alpha0_u: Some(p.alpha0_u),
        alpha1_u: Some(p.alpha1_u),
        q_crypto: p_b * p.k_b,
        spread_s: 1.0 - p_c / p_b,
        regime: if p.k_c > 0.0 {
            Regime::Coexistence
        } else {
            Regime::NoCMarket
        },
        diagnostics: SolverDiagnostics {
            g: params.g(),
            eta: params.eta(),
            h: params.h(),
            y: 1.0 / p_b,
            residual_b: p.residual_b,
            residual_c: p.residual_c,
            path_disagreement: 0.0,
            iterations: c.iterations,
            xi: Some(p.xi),
            chi: Some(c.chi),
            pi0: Some(p.pi0),
            pitilde: Some(p.pitilde),
            warnings: Vec::new(),
        },
    };
    eq.diagnostics.warnings = non_interior_warnings(&eq);
    eq
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibrium::solve_coexistence;

    #[test]
    fn near_benchmark_matches_benchmark() {
        let tol = Tolerances::default();
        let p = EconomyParams::new(0.3, 0.7, 0.6);
        let bench = solve_coexistence(&p, &tol).unwrap();
        let eq = solve_general(&p.with_lambda(0.999), &tol).unwrap();
        assert!((eq.p_b - bench.p_b).abs() < 1e-2);
        assert!((eq.pi_b - bench.pi_b).abs() < 1e-2);
        assert!(eq.diagnostics.chi.is_some());
    }

    #[test]
    fn system_reduces_to_benchmark_at_lambda_one() {
        let tol = Tolerances::default();
        let p = EconomyParams::new(0.3, 0.5, 0.5);
        let eq = solve_coexistence(&p, &tol).unwrap();
        for chi in [true, false] {
            let pt = general_system(&p, eq.p_b, eq.p_c, chi);
            assert!(pt.residual() < 1e-12, "chi={chi}: {}", pt.residual());
            assert_eq!(pt.pi_c, 0.0);
        }
    }

    #[test]
    fn returned_branch_is_self_consistent() {
        let tol = Tolerances::default();
        let eq = solve_general(&EconomyParams::new(0.3, 0.7, 0.6).with_lambda(0.5), &tol).unwrap();
        let chi = eq.diagnostics.chi.unwrap();
        assert_eq!(eq.diagnostics.xi.unwrap() * eq.p_b > eq.p_c, chi);
        assert!(eq.diagnostics.residual_b.abs() < 1e-10);
        assert!(eq.diagnostics.residual_c.abs() < 1e-10);
    }

    #[test]
    fn benchmark_lambda_is_rejected() {
        let r = solve_general(&EconomyParams::new(0.3, 0.7, 0.6), &Tolerances::default());
        assert!(matches!(r, Err(Error::Unsupported(_))));
    }
}
