mod config;
mod grid;
mod output;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lemonchain::microfoundation::RNG_ALGORITHM;
use lemonchain::{
    classify_q_shape, classify_vb_shape, derivative, diff, optimal_theta, simulate_chain, solve,
    theta0, theta_of_adoption, thresholds, verify_propositions, welfare_report, ChainSpec,
    EconomyParams, Error, Field, Tolerances, VerifyGrid,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use config::{require, residual_tol, FileConfig};
use grid::Grid;
use output::{write_csv, Row};

#[derive(Parser)]
#[command(
    name = "lemonchain",
    version,
    about = "Blockchain/cash two-market equilibrium solver"
)]
struct Cli {
    /// Flat TOML file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Residual tolerance (overrides the config file and LEMONCHAIN_TOL).
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GridName {
    Default,
    Small,
}

#[derive(Args, Debug, Clone, Default)]
struct Model {
    #[arg(long)]
    pi: Option<f64>,
    #[arg(long)]
    phi: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one parameter point.
    Solve(Model),
    /// Solve over a theta grid, optionally crossed with a phi grid.
    Sweep {
        #[command(flatten)]
        model: Model,
        /// start:stop:count, both ends included.
        #[arg(long)]
        theta_grid: Option<String>,
        #[arg(long)]
        phi_grid: Option<String>,
    },
    /// Analytic thresholds for pi (and phi, if given).
    Thresholds {
        #[arg(long)]
        pi: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
    },
    /// Shapes of Q and v_B in theta; with --theta, finite-difference derivatives.
    Classify {
        #[command(flatten)]
        model: Model,
        /// One of p_b, p_c, pi_b, k_b, q, v_b, v_0, alpha_star.
        #[arg(long)]
        field: Option<String>,
    },
    /// Fee-maximizing and welfare-maximizing security levels.
    OptimalTheta {
        #[arg(long)]
        pi: Option<f64>,
        #[arg(long)]
        phi: Option<f64>,
    },
    /// Check the qualitative claims on a parameter grid.
    Verify {
        #[arg(long, value_enum)]
        grid: Option<GridName>,
    },
    /// Monte Carlo of the intermediation chain.
    Microfound {
        #[arg(long)]
        p: Option<f64>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        theta_hat: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn validation(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }

    fn io(e: std::io::Error) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParams(_)
            | Error::DiscriminantNegative { .. }
            | Error::RegimeMismatch { .. }
            | Error::RegimeStraddle { .. }
            | Error::Unsupported(_) => 2,
            _ => 3,
        };
        let message = match &e {
            Error::MultipleEquilibria(v) => {
                let prices: Vec<String> = v.iter().map(|q| format!("P_B = {}", q.p_b)).collect();
                format!("{e}: {}", prices.join(", "))
            }
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

struct Ctx {
    file: FileConfig,
    tol: Tolerances,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl Ctx {
    fn format(&self, default: Format) -> Result<Format, Failure> {
        if let Some(f) = self.format {
            return Ok(f);
        }
        match self.file.format.as_deref() {
            None => Ok(default),
            Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            Some(other) => Err(Failure::validation(format!("unknown format `{other}`"))),
        }
    }

    fn json_only(&self) -> Result<(), Failure> {
        match self.format(Format::Json)? {
            Format::Json => Ok(()),
            Format::Csv => Err(Failure::validation(
                "csv output is available for solve and sweep only",
            )),
        }
    }

    fn emit(&self, bytes: &[u8]) -> Result<(), Failure> {
        match &self.out {
            Some(path) => std::fs::write(path, bytes).map_err(Failure::io),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(bytes)
                    .and_then(|_| out.flush())
                    .map_err(Failure::io)
            }
        }
    }

    fn emit_json<T: Serialize>(&self, value: &T) -> Result<(), Failure> {
        let mut s = serde_json::to_string_pretty(value).expect("serializable report");
        s.push('\n');
        self.emit(s.as_bytes())
    }

    fn params(&self, m: &Model) -> Result<EconomyParams, Failure> {
        let f = &self.file;
        let p = EconomyParams::new(
            require(m.pi, f.pi, "pi")?,
            require(m.phi, f.phi, "phi")?,
            require(m.theta, f.theta, "theta")?,
        );
        Ok(p.with_lambda(m.lambda.or(f.lambda).unwrap_or(1.0)))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let residual = residual_tol(cli.tol, file.tol, Tolerances::default().residual)?;
    let ctx = Ctx {
        tol: Tolerances::default().with_residual(residual),
        format: cli.format,
        out: cli.out.or_else(|| file.out.as_ref().map(PathBuf::from)),
        file,
    };
    match cli.command {
        Command::Solve(m) => cmd_solve(&ctx, &m),
        Command::Sweep {
            model,
            theta_grid,
            phi_grid,
        } => cmd_sweep(&ctx, &model, theta_grid, phi_grid),
        Command::Thresholds { pi, phi } => {
            ctx.json_only()?;
            let pi = require(pi, ctx.file.pi, "pi")?;
            ctx.emit_json(&thresholds(pi, phi.or(ctx.file.phi), &ctx.tol)?)?;
            Ok(0)
        }
        Command::Classify { model, field } => cmd_classify(&ctx, &model, field),
        Command::OptimalTheta { pi, phi } => {
            ctx.json_only()?;
            let pi = require(pi, ctx.file.pi, "pi")?;
            let phi = require(phi, ctx.file.phi, "phi")?;
            ctx.emit_json(&optimal_theta(pi, phi, &ctx.tol)?)?;
            Ok(0)
        }
        Command::Verify { grid } => cmd_verify(&ctx, grid),
        Command::Microfound {
            p,
            n,
            theta_hat,
            trials,
            seed,
        } => cmd_microfound(&ctx, p, n, theta_hat, trials, seed),
    }
}

fn cmd_solve(ctx: &Ctx, m: &Model) -> Result<u8, Failure> {
    let params = ctx.params(m)?;
    let eq = solve(&params, &ctx.tol)?;
    match ctx.format(Format::Json)? {
        Format::Json => {
            let welfare = if params.is_benchmark() {
                Some(welfare_report(&eq, &ctx.tol)?)
            } else {
                None
            };
            ctx.emit_json(&json!({ "equilibrium": eq, "welfare": welfare }))?;
        }
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(
                &mut buf,
                &[Row::from_equilibrium(None, &eq, &ctx.tol)],
                false,
            )
            .map_err(|e| Failure::io(e.into()))?;
            ctx.emit(&buf)?;
        }
    }
    Ok(0)
}

fn cmd_sweep(
    ctx: &Ctx,
    m: &Model,
    theta_grid: Option<String>,
    phi_grid: Option<String>,
) -> Result<u8, Failure> {
    let f = &ctx.file;
    let thetas: Grid = require(theta_grid, f.theta_grid.clone(), "theta_grid")?
        .parse()
        .map_err(Failure::validation)?;
    let phi_grid = phi_grid.or_else(|| f.phi_grid.clone());
    let pi = require(m.pi, f.pi, "pi")?;
    let lambda = m.lambda.or(f.lambda).unwrap_or(1.0);
    let (phis, with_phi) = match phi_grid {
        Some(g) => (
            g.parse::<Grid>().map_err(Failure::validation)?.points(),
            true,
        ),
        None => (vec![require(m.phi, f.phi, "phi")?], false),
    };
    let points: Vec<(f64, f64)> = phis
        .iter()
        .flat_map(|&phi| thetas.points().into_iter().map(move |t| (phi, t)))
        .collect();
    let rows: Vec<Row> = points
        .par_iter()
        .map(|&(phi, theta)| {
            let label = with_phi.then_some(phi);
            let p = EconomyParams::new(pi, phi, theta).with_lambda(lambda);
            match solve(&p, &ctx.tol) {
                Ok(eq) => Row::from_equilibrium(label, &eq, &ctx.tol),
                Err(e) => Row::failed(label, theta, &e),
            }
        })
        .collect();
    match ctx.format(Format::Csv)? {
        Format::Csv => {
            let mut buf = Vec::new();
            write_csv(&mut buf, &rows, with_phi).map_err(|e| Failure::io(e.into()))?;
            ctx.emit(&buf)?;
        }
        Format::Json => ctx.emit_json(&rows)?,
    }
    Ok(0)
}

fn cmd_classify(ctx: &Ctx, m: &Model, field: Option<String>) -> Result<u8, Failure> {
    ctx.json_only()?;
    let f = &ctx.file;
    let pi = require(m.pi, f.pi, "pi")?;
    let phi = require(m.phi, f.phi, "phi")?;
    let mut report = json!({
        "pi": pi,
        "phi": phi,
        "theta0": theta0(pi, phi)?,
        "q_shape": classify_q_shape(pi, phi)?,
        "vb_shape": classify_vb_shape(pi, phi, &ctx.tol)?,
    });
    let field = field.or_else(|| f.field.clone());
    if let Some(theta) = m.theta.or(f.theta) {
        let fields = match &field {
            Some(name) => vec![name.parse::<Field>().map_err(Failure::validation)?],
            None => Field::ALL.to_vec(),
        };
        let params = EconomyParams::new(pi, phi, theta);
        let mut derivs = serde_json::Map::new();
        for fld in fields {
            let d = derivative(&params, fld, diff::STEP, &ctx.tol)?;
            derivs.insert(
                fld.name().into(),
                json!({ "value": d, "sign": diff::sign(d, diff::DEAD_BAND) }),
            );
        }
        report["theta"] = json!(theta);
        report["derivatives"] = derivs.into();
    } else if field.is_some() {
        return Err(Failure::validation("--field needs --theta"));
    }
    ctx.emit_json(&report)?;
    Ok(0)
}

fn cmd_verify(ctx: &Ctx, grid: Option<GridName>) -> Result<u8, Failure> {
    ctx.json_only()?;
    let grid = match (grid, ctx.file.grid.as_deref()) {
        (Some(g), _) => g,
        (None, None) | (None, Some("default")) => GridName::Default,
        (None, Some("small")) => GridName::Small,
        (None, Some(other)) => return Err(Failure::validation(format!("unknown grid `{other}`"))),
    };
    let grid = match grid {
        GridName::Default => VerifyGrid::default(),
        GridName::Small => VerifyGrid::small(),
    };
    let report = verify_propositions(&grid, &ctx.tol);
    ctx.emit_json(&report)?;
    let failed = report.failed_asserted();
    if failed.is_empty() {
        eprintln!("all checks passed");
        Ok(0)
    } else {
        let names: Vec<&str> = failed.iter().map(|c| c.name.as_str()).collect();
        eprintln!(
            "{} asserted check(s) failed: {}",
            failed.len(),
            names.join(", ")
        );
        Ok(4)
    }
}

fn cmd_microfound(
    ctx: &Ctx,
    p: Option<f64>,
    n: Option<u32>,
    theta_hat: Option<f64>,
    trials: Option<u64>,
    seed: Option<u64>,
) -> Result<u8, Failure> {
    ctx.json_only()?;
    let f = &ctx.file;
    let spec = ChainSpec::new(
        require(p, f.p, "p")?,
        require(n, f.n, "n")?,
        require(theta_hat, f.theta_hat, "theta_hat")?,
    );
    spec.validate().map_err(Failure::validation)?;
    let trials = trials.or(f.trials).unwrap_or(1_000_000);
    if trials == 0 {
        return Err(Failure::validation("--trials must be positive"));
    }
    let seed = seed.or(f.seed).unwrap_or(0);
    let m = spec.m();
    let realized = ChainSpec::new(spec.p, spec.n, m as f64 / spec.n as f64);
    let estimate = simulate_chain(&spec, trials, seed);
    ctx.emit_json(&json!({
        "rng": RNG_ALGORITHM,
        "seed": seed,
        "trials": trials,
        "spec": spec,
        "pi": spec.pi(),
        "m": m,
        "theta": theta_of_adoption(&spec),
        "theta_at_m": theta_of_adoption(&realized),
        "quality": lemonchain::quality_of_adoption(&spec),
        "estimate": estimate,
    }))?;
    Ok(0)
}
