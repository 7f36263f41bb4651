//! Equilibrium computation for the benchmark economy (closed forms plus two
//! independent coexistence paths) and for the economy with uninformed sellers.

mod benchmark;
mod general;

pub use benchmark::{
    benchmark_residuals, coexistence_path1, coexistence_path2, solve_coexistence, solve_no_c,
    theta0, ImplicitH, PathSolution,
};
pub use general::{general_system, solve_general, GeneralPoint};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate, EconomyParams, Regime, Tolerances};

/// Solver internals recorded alongside each equilibrium.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub g: f64,
    pub eta: f64,
    pub h: f64,
    pub y: f64,
    pub residual_b: f64,
    pub residual_c: f64,
    pub path_disagreement: f64,
    pub iterations: usize,
    pub xi: Option<f64>,
    pub chi: Option<bool>,
    pub pi0: Option<f64>,
    pub pitilde: Option<f64>,
    /// Non-interior cutoffs and similar soft issues.
    pub warnings: Vec<String>,
}

/// Full equilibrium state. `q_crypto` is the cryptocurrency price with the
/// coin supply normalized to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Equilibrium {
    pub params: EconomyParams,
    pub p_b: f64,
    pub p_c: f64,
    pub pi_b: f64,
    pub pi_c: f64,
    pub k_b: f64,
    pub k_c: f64,
    pub alpha_star: f64,
    pub alpha_i: f64,
    pub alpha0_u: Option<f64>,
    pub alpha1_u: Option<f64>,
    pub q_crypto: f64,
    pub spread_s: f64,
    pub regime: Regime,
    pub diagnostics: SolverDiagnostics,
}

impl Equilibrium {
    /// Expected-return multiplier `pi_B + (1 - pi_B) phi`.
    pub fn pitilde_b(&self) -> f64 {
        self.pi_b + (1.0 - self.pi_b) * self.params.phi
    }

    pub fn pitilde_c(&self) -> f64 {
        self.pi_c + (1.0 - self.pi_c) * self.params.phi
    }

    /// Lists every violated equilibrium invariant. `residual_tol` bounds the
    /// clearing residuals.
    pub fn invariant_violations(&self, residual_tol: f64) -> Vec<String> {
        let mut v = Vec::new();
        let p = &self.params;
        let rel = 1e-12;
        if !(self.p_b > self.p_c && self.p_c >= 0.0) {
            v.push(format!("price order: p_b {} p_c {}", self.p_b, self.p_c));
        }
        if !(self.pi_b <= 1.0 + rel && self.pi_b > self.pi_c && self.pi_c >= 0.0) {
            v.push(format!(
                "quality order: pi_b {} pi_c {}",
                self.pi_b, self.pi_c
            ));
        }
        if !(self.k_b > 0.0 && self.k_b < 1.0) {
            v.push(format!("k_b {} not in (0,1)", self.k_b));
        }
        if self.k_c < 0.0 {
            v.push(format!("k_c {} negative", self.k_c));
        }
        if (self.regime == Regime::NoCMarket) != (self.k_c == 0.0) {
            v.push(format!("regime {} with k_c {}", self.regime, self.k_c));
        }
        if (self.q_crypto - self.p_b * self.k_b).abs() > rel {
            v.push("q_crypto != p_b k_b".into());
        }
        let ai = ((self.p_c - (1.0 - p.theta) * self.p_b) / (p.phi * p.theta)).max(0.0);
        if (self.alpha_i - ai).abs() > 1e-9 {
            v.push(format!("alpha_i {} vs cutoff formula {}", self.alpha_i, ai));
        }
        if (self.spread_s - (1.0 - self.p_c / self.p_b)).abs() > rel {
            v.push("spread_s != 1 - p_c/p_b".into());
        }
        if p.is_benchmark() {
            let slack = 1e-9;
            match self.regime {
                Regime::Coexistence => {
                    if !(self.spread_s > 0.0 && self.spread_s < p.theta + slack) {
                        v.push(format!("spread {} not in (0, theta)", self.spread_s));
                    }
                }
                Regime::NoCMarket => {
                    if self.spread_s < p.theta - slack {
                        v.push(format!("spread {} below theta", self.spread_s));
                    }
                }
            }
        }
        let r = self
            .diagnostics
            .residual_b
            .abs()
            .max(self.diagnostics.residual_c.abs());
        if !(r < residual_tol) {
            v.push(format!("clearing residual {r:e}"));
        }
        v
    }
}

/// Solves any valid parameter point: closed forms for `lambda = 1`, the 2-D
/// system otherwise.
pub fn solve(params: &EconomyParams, tol: &Tolerances) -> Result<Equilibrium> {
    validate(params).map_err(Error::InvalidParams)?;
    if params.is_benchmark() {
        solve_benchmark(params, tol)
    } else {
        solve_general(params, tol)
    }
}

/// Benchmark dispatcher: `theta <= theta0` goes to the no-C closed form.
pub fn solve_benchmark(params: &EconomyParams, tol: &Tolerances) -> Result<Equilibrium> {
    let t0 = theta0(params.pi, params.phi)?;
    if params.theta <= t0 {
        solve_no_c(params)
    } else {
        solve_coexistence(params, tol)
    }
}

pub(crate) fn non_interior_warnings(eq: &Equilibrium) -> Vec<String> {
    let phi = eq.params.phi;
    let mut w = Vec::new();
    let mut check = |name: &str, x: f64| {
        if !(0.0..=1.0).contains(&x) {
            w.push(format!("non-interior cutoff {name} = {x}"));
        }
    };
    check("P_B", eq.p_b);
    check("P_B/phi", eq.p_b / phi);
    check("P_C/phi", eq.p_c / phi);
    check("alpha_I", eq.alpha_i);
    check("alpha*", eq.alpha_star);
    w
}
