//! Equilibrium of a two-platform asset market: a blockchain market whose
//! smart contract rejects lemons with probability `theta`, and a cash market.
//!
//! The crate solves the equilibrium, computes welfare and platform fees,
//! classifies comparative statics, and simulates the intermediation chain
//! that generates `theta`.

pub mod diff;
pub mod equilibrium;
pub mod error;
pub mod microfoundation;
pub mod model;
pub mod roots;
pub mod statics;
pub mod welfare;

pub use equilibrium::{
    solve, solve_benchmark, solve_coexistence, solve_general, solve_no_c, theta0, Equilibrium,
    SolverDiagnostics,
};
pub use error::{Error, Result};
pub use microfoundation::{
    quality_of_adoption, simulate_chain, theta_of_adoption, ChainEstimate, ChainSpec,
};
pub use model::{uniform_cdf, validate, EconomyParams, Regime, Tolerances, Violation};
pub use statics::{
    classify_q_shape, classify_vb_shape, derivative, optimal_theta, thresholds,
    verify_propositions, Field, OptimalTheta, Shape, ThresholdSet, VerifyGrid, VerifyReport,
};
pub use welfare::{
    buyer_welfare, seller_elasticity, seller_welfare, welfare_report, WelfareReport,
};
