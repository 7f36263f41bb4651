//! Intermediation-chain origin of the security level.
//!
//! A good passes through `n` intermediaries; at each step its state is high
//! with probability `p`. The first `M = round(n theta_hat)` steps run on the
//! blockchain, where a low state is observed and the good is rejected.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Name of the generator used by [`simulate_chain`].
pub const RNG_ALGORITHM: &str = "ChaCha8 (rand_chacha), one stream per chunk";

/// Trials per independently seeded chunk.
const CHUNK: u64 = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainSpec {
    pub p: f64,
    pub n: u32,
    pub theta_hat: f64,
}

impl ChainSpec {
    pub fn new(p: f64, n: u32, theta_hat: f64) -> Self {
        Self { p, n, theta_hat }
    }

    pub fn validate(&self) -> Result<(), String> {
        let mut errs = Vec::new();
        if !(self.p > 0.0 && self.p < 1.0) {
            errs.push(format!("p out of (0,1): {}", self.p));
        }
        if self.n == 0 {
            errs.push("n must be at least 1".to_string());
        }
        if !(0.0..=1.0).contains(&self.theta_hat) {
            errs.push(format!("theta_hat out of [0,1]: {}", self.theta_hat));
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs.join("; "))
        }
    }

    /// Number of blockchain steps.
    pub fn m(&self) -> u32 {
        ((self.n as f64 * self.theta_hat).round() as u32).min(self.n)
    }

    /// Unconditional probability of a high-quality good, `p^n`.
    pub fn pi(&self) -> f64 {
        self.p.powi(self.n as i32)
    }
}

/// `(1 - p^(n theta_hat)) / (1 - p^n)`.
pub fn theta_of_adoption(spec: &ChainSpec) -> f64 {
    let n = spec.n as f64;
    (1.0 - spec.p.powf(n * spec.theta_hat)) / (1.0 - spec.p.powf(n))
}

/// Share of high-quality goods among those that survive the chain,
/// `p^(n - M)`.
pub fn quality_of_adoption(spec: &ChainSpec) -> f64 {
    spec.p.powi((spec.n - spec.m()) as i32)
}

/// Quality after a fraction `theta` of lemons is removed: `pi / (pi + (1-theta)(1-pi))`.
pub fn composition_quality(pi: f64, theta: f64) -> f64 {
    pi / (pi + (1.0 - theta) * (1.0 - pi))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainEstimate {
    pub trials: u64,
    pub seed: u64,
    pub m: u32,
    pub low_quality: u64,
    pub rejected: u64,
    pub retail: u64,
    pub retail_high: u64,
    /// Rejected share of low-quality goods.
    pub rejection_rate: f64,
    pub rejection_se: f64,
    /// 95% half-width.
    pub rejection_half_width: f64,
    /// High-quality share among goods reaching retail.
    pub retail_quality: f64,
    pub retail_quality_se: f64,
    pub retail_quality_half_width: f64,
}

#[derive(Default)]
struct Counts {
    low: u64,
    rejected: u64,
    retail: u64,
    retail_high: u64,
}

fn run_chunk(spec: &ChainSpec, m: u32, seed: u64, chunk: u64, trials: u64) -> Counts {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    let mut c = Counts::default();
    for _ in 0..trials {
        let mut first_low = None;
        for step in 0..spec.n {
            if !rng.random_bool(spec.p) && first_low.is_none() {
                first_low = Some(step);
            }
        }
        match first_low {
            None => {
                c.retail += 1;
                c.retail_high += 1;
            }
            Some(step) => {
                c.low += 1;
                if step < m {
                    c.rejected += 1;
                } else {
                    c.retail += 1;
                }
            }
        }
    }
    c
}

fn proportion(k: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let r = k as f64 / n as f64;
    (r, (r * (1.0 - r) / n as f64).sqrt())
}

/// Monte Carlo estimate of the rejection rate and retail quality. The
/// result depends only on `(spec, trials, seed)`, not on the thread count.
pub fn simulate_chain(spec: &ChainSpec, trials: u64, seed: u64) -> ChainEstimate {
    let m = spec.m();
    let chunks = trials.div_ceil(CHUNK);
    let total = (0..chunks)
        .into_par_iter()
        .map(|i| {
            let n = CHUNK.min(trials - i * CHUNK);
            run_chunk(spec, m, seed, i, n)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Counts::default(), |a, b| Counts {
            low: a.low + b.low,
            rejected: a.rejected + b.rejected,
            retail: a.retail + b.retail,
            retail_high: a.retail_high + b.retail_high,
        });
    let (rate, rate_se) = proportion(total.rejected, total.low);
    let (quality, quality_se) = proportion(total.retail_high, total.retail);
    ChainEstimate {
        trials,
        seed,
        m,
        low_quality: total.low,
        rejected: total.rejected,
        retail: total.retail,
        retail_high: total.retail_high,
        rejection_rate: rate,
        rejection_se: rate_se,
        rejection_half_width: 1.96 * rate_se,
        retail_quality: quality,
        retail_quality_se: quality_se,
        retail_quality_half_width: 1.96 * quality_se,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn adoption_map_examples() {
        let t = theta_of_adoption(&ChainSpec::new(0.9, 5, 0.4));
        assert!((t - 0.19 / 0.40951).abs() < 1e-12);
        assert_eq!(theta_of_adoption(&ChainSpec::new(0.9, 5, 0.0)), 0.0);
        assert!((theta_of_adoption(&ChainSpec::new(0.9, 5, 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn quality_examples() {
        let s = ChainSpec::new(0.9, 5, 0.4);
        assert_eq!(s.m(), 2);
        assert!((quality_of_adoption(&s) - 0.729).abs() < 1e-15);
        assert!((composition_quality(0.59049, theta_of_adoption(&s)) - 0.729).abs() < 1e-12);
        let s0 = ChainSpec::new(0.9, 5, 0.0);
        assert!((quality_of_adoption(&s0) - s0.pi()).abs() < 1e-15);
    }

    #[test]
    fn validation() {
        assert!(ChainSpec::new(0.9, 5, 0.4).validate().is_ok());
        assert!(ChainSpec::new(1.0, 0, 1.5)
            .validate()
            .unwrap_err()
            .contains("theta_hat"));
    }

    #[test]
    fn full_and_no_adoption_extremes() {
        let full = simulate_chain(&ChainSpec::new(0.9, 5, 1.0), 20_000, 7);
        assert_eq!(full.rejected, full.low_quality);
        assert_eq!(full.retail_quality, 1.0);
        let none = simulate_chain(&ChainSpec::new(0.9, 5, 0.0), 20_000, 7);
        assert_eq!(none.rejected, 0);
        assert!((none.retail_quality - 0.59049).abs() < 4.0 * none.retail_quality_se);
    }

    #[test]
    fn deterministic_in_seed() {
        let s = ChainSpec::new(0.8, 4, 0.5);
        let a = simulate_chain(&s, 150_000, 42);
        let b = simulate_chain(&s, 150_000, 42);
        assert_eq!(a, b);
        assert_ne!(a, simulate_chain(&s, 150_000, 43));
    }
}
