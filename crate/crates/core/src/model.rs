//! Primitive parameters, their validity predicates and the uniform
//! distribution shared by every solver.

use std::fmt;

use serde::{Deserialize, Serialize};

/// Primitive parameters of the two-platform economy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EconomyParams {
    /// Probability that an asset is of high quality.
    pub pi: f64,
    /// Payoff fraction of a low-quality asset.
    pub phi: f64,
    /// Security level: probability a lemon offered on the B-market is rejected.
    pub theta: f64,
    /// Fraction of informed sellers.
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

impl EconomyParams {
    /// Benchmark economy with fully informed sellers.
    pub fn new(pi: f64, phi: f64, theta: f64) -> Self {
        Self {
            pi,
            phi,
            theta,
            lambda: 1.0,
        }
    }

    pub fn with_lambda(self, lambda: f64) -> Self {
        Self { lambda, ..self }
    }

    pub fn with_theta(self, theta: f64) -> Self {
        Self { theta, ..self }
    }

    pub fn validate(&self) -> Result<(), Vec<Violation>> {
        validate(self)
    }

    pub fn is_benchmark(&self) -> bool {
        self.lambda == 1.0
    }

    /// `g = (1 - theta) / theta`.
    pub fn g(&self) -> f64 {
        (1.0 - self.theta) / self.theta
    }

    /// `eta = 1 + phi pi / (2 - pi)`.
    pub fn eta(&self) -> f64 {
        eta(self.pi, self.phi)
    }

    /// `h = eta + pi (1 - phi)`.
    pub fn h(&self) -> f64 {
        h(self.pi, self.phi)
    }
}

pub(crate) fn eta(pi: f64, phi: f64) -> f64 {
    1.0 + phi * pi / (2.0 - pi)
}

pub(crate) fn h(pi: f64, phi: f64) -> f64 {
    eta(pi, phi) + pi * (1.0 - phi)
}

/// `pi (1 - pi) (1 - phi)`; must stay below 1/4.
pub fn technical_condition(pi: f64, phi: f64) -> f64 {
    pi * (1.0 - pi) * (1.0 - phi)
}

/// A violated parameter predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "predicate", content = "value")]
pub enum Violation {
    PiOutOfRange(f64),
    PhiOutOfRange(f64),
    ThetaOutOfRange(f64),
    LambdaOutOfRange(f64),
    TechnicalCondition(f64),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::PiOutOfRange(v) => write!(f, "pi out of (0,1): {v}"),
            Violation::PhiOutOfRange(v) => write!(f, "phi out of (0,1): {v}"),
            Violation::ThetaOutOfRange(v) => write!(f, "theta out of (0,1]: {v}"),
            Violation::LambdaOutOfRange(v) => write!(f, "lambda out of (0,1]: {v}"),
            Violation::TechnicalCondition(v) => {
                write!(f, "pi(1-pi)(1-phi) = {v} is not < 1/4")
            }
        }
    }
}

fn open_unit(x: f64) -> bool {
    x > 0.0 && x < 1.0
}

fn half_open_unit(x: f64) -> bool {
    x > 0.0 && x <= 1.0
}

/// Checks every parameter invariant. Total: never panics, reports all
/// violated predicates at once.
pub fn validate(params: &EconomyParams) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    if !open_unit(params.pi) {
        out.push(Violation::PiOutOfRange(params.pi));
    }
    if !open_unit(params.phi) {
        out.push(Violation::PhiOutOfRange(params.phi));
    }
    if !half_open_unit(params.theta) {
        out.push(Violation::ThetaOutOfRange(params.theta));
    }
    if !half_open_unit(params.lambda) {
        out.push(Violation::LambdaOutOfRange(params.lambda));
    }
    let tc = technical_condition(params.pi, params.phi);
    if !(tc < 0.25) {
        out.push(Violation::TechnicalCondition(tc));
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// CDF of the uniform distribution on [0, 1].
pub fn uniform_cdf(x: f64) -> f64 {
    x.clamp(0.0, 1.0)
}

/// Which markets are active in an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    NoCMarket,
    Coexistence,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::NoCMarket => f.write_str("NoCMarket"),
            Regime::Coexistence => f.write_str("Coexistence"),
        }
    }
}

/// Numeric tolerances used across the solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Market-clearing residual accepted on success.
    pub residual: f64,
    /// Width at which root brackets stop shrinking.
    pub bracket: f64,
    /// Largest tolerated |P_B(path 1) - P_B(path 2)|.
    pub path_agreement: f64,
    pub max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            bracket: 1e-12,
            path_agreement: 1e-6,
            max_iter: 200,
        }
    }
}

impl Tolerances {
    pub fn with_residual(self, residual: f64) -> Self {
        Self { residual, ..self }
    }
}
