//! Flat TOML configuration. Every key mirrors a long flag with `-`
//! replaced by `_`; flags win over the file, and the file wins over
//! `LEMONCHAIN_TOL` for the tolerance.

use std::path::Path;

use serde::Deserialize;

use crate::Failure;

pub const TOL_ENV: &str = "LEMONCHAIN_TOL";

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub pi: Option<f64>,
    pub phi: Option<f64>,
    pub theta: Option<f64>,
    pub lambda: Option<f64>,
    pub theta_grid: Option<String>,
    pub phi_grid: Option<String>,
    pub format: Option<String>,
    pub out: Option<String>,
    pub tol: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub grid: Option<String>,
    pub field: Option<String>,
    pub p: Option<f64>,
    pub n: Option<u32>,
    pub theta_hat: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Failure::validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        toml::from_str(&text)
            .map_err(|e| Failure::validation(format!("bad config {}: {e}", path.display())))
    }
}

/// Residual tolerance: flag, then config, then environment, then default.
pub fn residual_tol(flag: Option<f64>, file: Option<f64>, default: f64) -> Result<f64, Failure> {
    let env = match std::env::var(TOL_ENV) {
        Ok(s) => Some(
            s.trim()
                .parse::<f64>()
                .map_err(|e| Failure::validation(format!("{TOL_ENV}=`{s}`: {e}")))?,
        ),
        Err(_) => None,
    };
    let tol = flag.or(file).or(env).unwrap_or(default);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::validation(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    Ok(tol)
}

/// First of flag and config value, or a validation error naming both.
pub fn require<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T, Failure> {
    flag.or(file).ok_or_else(|| {
        Failure::validation(format!(
            "missing --{} (or config key `{}`)",
            name.replace('_', "-"),
            name
        ))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_file() {
        let c: FileConfig =
            toml::from_str("pi = 0.3\nphi = 0.5\ntheta_grid = \"0.2:1:5\"\nseed = 7\n").unwrap();
        assert_eq!(c.pi, Some(0.3));
        assert_eq!(c.theta_grid.as_deref(), Some("0.2:1:5"));
        assert_eq!(c.seed, Some(7));
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("pie = 0.3").is_err());
    }

    #[test]
    fn flag_beats_file() {
        assert_eq!(require(Some(1), Some(2), "n").unwrap(), 1);
        assert_eq!(require(None, Some(2), "n").unwrap(), 2);
        let e = require::<u32>(None, None, "theta_hat").unwrap_err();
        assert!(e.message.contains("--theta-hat"));
    }
}
