use std::process::{Command, Output};

use serde_json::Value;

fn lemonchain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lemonchain"))
        .args(args)
        .env_remove("LEMONCHAIN_TOL")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_column(text: &str, name: &str) -> Vec<String> {
    let mut rd = csv::Reader::from_reader(text.as_bytes());
    let idx = rd
        .headers()
        .unwrap()
        .iter()
        .position(|h| h == name)
        .unwrap();
    rd.records().map(|r| r.unwrap()[idx].to_string()).collect()
}

#[test]
fn solve_coexistence_point() {
    let out = lemonchain(&["solve", "--pi", "0.3", "--phi", "0.5", "--theta", "0.5"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    let p_b = v["equilibrium"]["p_b"].as_f64().unwrap();
    assert!((p_b - 0.3934).abs() < 1e-4, "{p_b}");
    assert_eq!(v["equilibrium"]["regime"], "Coexistence");
    assert!(v["welfare"]["f_b"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_reports_invalid_params() {
    let out = lemonchain(&["solve", "--pi", "1.2", "--phi", "0.5", "--theta", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("pi out of (0,1)"));
}

#[test]
fn solve_no_c_point() {
    let out = lemonchain(&["solve", "--pi", "0.3", "--phi", "0.5", "--theta", "0.1"]);
    let v = json(&out);
    assert_eq!(v["equilibrium"]["regime"], "NoCMarket");
    assert_eq!(v["equilibrium"]["k_c"].as_f64(), Some(0.0));
}

#[test]
fn json_field_order_is_stable() {
    let out = lemonchain(&["solve", "--pi", "0.3", "--phi", "0.5", "--theta", "0.5"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
    assert!(pos("params") < pos("p_b") && pos("p_b") < pos("p_c") && pos("p_c") < pos("regime"));
}

#[test]
fn solve_general_model_has_no_welfare() {
    let out = lemonchain(&[
        "solve", "--pi", "0.3", "--phi", "0.5", "--theta", "0.6", "--lambda", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert!(v["welfare"].is_null());
    assert!(v["equilibrium"]["pi_c"].as_f64().unwrap() > 0.0);
}

#[test]
fn sweep_q_decreasing_at_high_phi() {
    let out = lemonchain(&[
        "sweep",
        "--pi",
        "0.3",
        "--phi",
        "0.7",
        "--lambda",
        "1",
        "--theta-grid",
        "0.2:1:81",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let q: Vec<f64> = csv_column(&text, "q")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert_eq!(q.len(), 81);
    assert!(q.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn sweep_q_turns_at_middle_phi() {
    let out = lemonchain(&[
        "sweep",
        "--pi",
        "0.3",
        "--phi",
        "0.5",
        "--theta-grid",
        "0.2:1:81",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    let q: Vec<f64> = csv_column(&text, "q")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    let signs: Vec<bool> = q.windows(2).map(|w| w[1] > w[0]).collect();
    let turns = signs.windows(2).filter(|w| w[0] != w[1]).count();
    assert_eq!(turns, 1);
    assert!(!signs[0] && signs[signs.len() - 1]);
}

#[test]
fn sweep_is_deterministic_and_round_trips() {
    let args = [
        "sweep",
        "--pi",
        "0.3",
        "--phi",
        "0.5",
        "--theta-grid",
        "0.05:1:40",
    ];
    let a = lemonchain(&args);
    let b = lemonchain(&args);
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(
        text.lines().next().unwrap(),
        "theta,regime,p_b,p_c,pi_b,pi_c,k_b,k_c,q,v_b,v_0,f_b,v_s_h,v_s_l,f_s,alpha_star,alpha_i,status"
    );
    let regimes = csv_column(&text, "regime");
    assert!(
        regimes.contains(&"NoCMarket".to_string()) && regimes.contains(&"Coexistence".to_string())
    );

    let json_out = lemonchain(&[&args[..], &["--format", "json"]].concat());
    let rows = json(&json_out);
    for (cell, row) in csv_column(&text, "p_b")
        .iter()
        .zip(rows.as_array().unwrap())
    {
        assert_eq!(cell.parse::<f64>().unwrap(), row["p_b"].as_f64().unwrap());
    }
}

#[test]
fn sweep_keeps_failed_points() {
    let out = lemonchain(&[
        "sweep",
        "--pi",
        "0.3",
        "--phi",
        "0.5",
        "--theta-grid",
        "0:1:3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let status = csv_column(&text, "status");
    assert_eq!(status.len(), 3);
    assert!(status[0].contains("theta out of (0,1]"));
    assert_eq!(status[2], "ok");
}

#[test]
fn sweep_two_dimensional_prepends_phi() {
    let out = lemonchain(&[
        "sweep",
        "--pi",
        "0.3",
        "--phi-grid",
        "0.3:0.7:3",
        "--theta-grid",
        "0.5:1:4",
    ]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("phi,theta,regime,"));
    let phis = csv_column(&text, "phi");
    assert_eq!(phis.len(), 12);
    assert_eq!(phis[0].parse::<f64>().unwrap(), 0.3);
    assert_eq!(phis[11].parse::<f64>().unwrap(), 0.7);
}

#[test]
fn malformed_grid_is_a_validation_error() {
    let out = lemonchain(&[
        "sweep",
        "--pi",
        "0.3",
        "--phi",
        "0.5",
        "--theta-grid",
        "0.2:1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn thresholds_phi1() {
    let v = json(&lemonchain(&["thresholds", "--pi", "0.3"]));
    assert!((v["phi1"].as_f64().unwrap() - 17.0 / 27.0).abs() < 1e-15);
    assert!(v["theta0"].is_null());
}

#[test]
fn classify_with_derivative() {
    let out = lemonchain(&[
        "classify", "--pi", "0.3", "--phi", "0.5", "--theta", "0.5", "--field", "p_b",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json(&out);
    assert_eq!(v["q_shape"]["shape"], "UShaped");
    assert_eq!(v["derivatives"]["p_b"]["sign"], 1);
    let bad = lemonchain(&["classify", "--pi", "0.3", "--phi", "0.5", "--field", "p_b"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn optimal_theta_divergence() {
    let v = json(&lemonchain(&[
        "optimal-theta",
        "--pi",
        "0.6",
        "--phi",
        "0.65",
    ]));
    assert_eq!(v["theta_m"], v["theta0"]);
    assert_eq!(v["theta_v"].as_f64(), Some(1.0));
}

#[test]
fn verify_exit_code_matches_report() {
    let out = lemonchain(&["verify", "--grid", "small"]);
    let v = json(&out);
    let failed = v["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["asserted"] == true && c["failures"].as_u64().unwrap() > 0);
    assert_eq!(out.status.code(), Some(if failed { 4 } else { 0 }));
}

#[test]
fn microfound_echoes_and_reproduces() {
    let args = [
        "microfound",
        "--p",
        "0.9",
        "--n",
        "5",
        "--theta-hat",
        "0.4",
        "--trials",
        "200000",
        "--seed",
        "42",
    ];
    let a = lemonchain(&args);
    let b = lemonchain(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["trials"], 200000);
    assert!(v["rng"].as_str().unwrap().contains("ChaCha8"));
    let est = &v["estimate"];
    let z =
        (est["rejection_rate"].as_f64().unwrap() - 0.46397) / est["rejection_se"].as_f64().unwrap();
    assert!(z.abs() < 4.0, "{z}");
}

#[test]
fn microfound_validates_spec() {
    let out = lemonchain(&["microfound", "--p", "1.5", "--n", "5", "--theta-hat", "0.4"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "pi = 0.3\nphi = 0.5\ntheta = 0.1\n").unwrap();
    let c = cfg.to_str().unwrap();
    let from_file = json(&lemonchain(&["solve", "--config", c]));
    assert_eq!(from_file["equilibrium"]["regime"], "NoCMarket");
    let overridden = json(&lemonchain(&["solve", "--config", c, "--theta", "0.5"]));
    assert_eq!(overridden["equilibrium"]["regime"], "Coexistence");

    std::fs::write(&cfg, "pi = 0.3\nphis = 0.5\n").unwrap();
    assert_eq!(lemonchain(&["solve", "--config", c]).status.code(), Some(2));
}

#[test]
fn tolerance_precedence() {
    let args = ["solve", "--pi", "0.3", "--phi", "0.5", "--theta", "0.5"];
    let run = |env: Option<&str>, extra: &[&str]| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_lemonchain"));
        cmd.args(args).args(extra).env_remove("LEMONCHAIN_TOL");
        if let Some(v) = env {
            cmd.env("LEMONCHAIN_TOL", v);
        }
        cmd.output().unwrap().status.code()
    };
    assert_eq!(run(Some("1e-300"), &[]), Some(3));
    assert_eq!(run(Some("1e-300"), &["--tol", "1e-8"]), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tol.toml");
    std::fs::write(&cfg, "tol = 1e-8\n").unwrap();
    assert_eq!(
        run(Some("1e-300"), &["--config", cfg.to_str().unwrap()]),
        Some(0)
    );
    assert_eq!(run(None, &["--tol", "1e-300"]), Some(3));
    assert_eq!(run(Some("abc"), &[]), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eq.csv");
    let out = lemonchain(&[
        "solve",
        "--pi",
        "0.3",
        "--phi",
        "0.5",
        "--theta",
        "0.5",
        "--format",
        "csv",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn csv_rejected_for_report_commands() {
    let out = lemonchain(&["thresholds", "--pi", "0.3", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(2));
}
