use thiserror::Error;

use crate::equilibrium::Equilibrium;
use crate::model::{Regime, Violation};

/// Errors raised by the solvers and the analysis routines built on them.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {}", join_violations(.0))]
    InvalidParams(Vec<Violation>),

    #[error("technical condition violated: discriminant {discriminant} is not positive")]
    DiscriminantNegative { discriminant: f64 },

    #[error("theta = {theta} is outside the {expected:?} regime (theta0 = {theta0})")]
    RegimeMismatch {
        theta: f64,
        theta0: f64,
        expected: Regime,
    },

    #[error("stencil around theta = {theta} (step {step}) crosses theta0 = {theta0}")]
    RegimeStraddle { theta: f64, step: f64, theta0: f64 },

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    ConvergenceFailure {
        what: String,
        iterations: usize,
        residual: f64,
    },

    #[error("solution paths disagree: P_B = {path1} vs {path2}")]
    PathDisagreement { path1: f64, path2: f64 },

    #[error("no chi-branch is self-consistent: {details}")]
    NoBranchConsistent { details: String },

    #[error("{} distinct equilibria found", .0.len())]
    MultipleEquilibria(Vec<Equilibrium>),

    #[error("root not bracketed on [{lo}, {hi}]: f(lo) = {f_lo}, f(hi) = {f_hi}")]
    RootNotBracketed {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    #[error("welfare routes disagree: closed form {closed_form} vs direct integral {direct}")]
    WelfareMismatch { closed_form: f64, direct: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

pub type Result<T> = std::result::Result<T, Error>;
