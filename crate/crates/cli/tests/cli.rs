//! End-to-end checks of the `locc` binary: exit codes, reproducibility and
//! the headline numbers of each subcommand.

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn locc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_locc"))
        .args(args)
        .env_remove("LOCC_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = locc(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    serde_json::from_str(&ok(&full)).unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.display().to_string()
}

fn f(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn identity_gate_needs_no_markovianization() {
    let dir = tempfile::tempdir().unwrap();
    let entries: Vec<String> = (0..16)
        .map(|i| if i % 5 == 0 { "[1,0]" } else { "[0,0]" }.to_string())
        .collect();
    let path = write(
        dir.path(),
        "identity.json",
        &format!(r#"{{"dims":[2,2],"entries":[{}]}}"#, entries.join(",")),
    );
    let doc = json(&["markov", "--gate", &format!("file:{path}")]);
    assert!(f(&doc["result"]["markov_cost_bits"]).abs() < 1e-9, "{doc}");
}

#[test]
fn malformed_inputs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let broken = write(dir.path(), "broken.json", r#"{"dims":[2,2],"entries":[[1,0]]}"#);
    let nan = write(
        dir.path(),
        "nan.json",
        r#"{"dims":[2],"entries":[[NaN,0],[0,0],[0,0],[1,0]]}"#,
    );
    for args in [
        vec!["markov".to_string(), "--gate".into(), format!("file:{broken}")],
        vec!["markov".to_string(), "--gate".into(), format!("file:{nan}")],
        vec![
            "markov".to_string(),
            "--gate".into(),
            "file:/definitely/missing.json".into(),
        ],
        vec!["markov".to_string(), "--gate".into(), "rotate:1".into()],
        vec!["cost".to_string(), "--grid".into(), "1:2".into()],
        vec!["typicality".to_string(), "--n".into(), "0,4".into()],
        vec!["protocol".to_string(), "--theta".into(), "7".into()],
        vec!["nshot".to_string(), "--trials".into(), "0".into()],
    ] {
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let out = locc(&refs);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn same_configuration_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let base = ["nshot", "--n", "10,20", "--trials", "300", "--seed", "9"];
    for (path, workers) in [(&a, "1"), (&b, "3")] {
        let mut args = base.to_vec();
        let p = path.display().to_string();
        args.extend(["--workers", workers, "--output", &p]);
        ok(&args);
    }
    // only the echoed worker count may differ
    let strip = |p: &Path| -> String {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("# workers:"))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(strip(&a), strip(&b));

    let first = ok(&["protocol", "--trials", "500", "--seed", "4"]);
    let second = ok(&["protocol", "--trials", "500", "--seed", "4"]);
    assert_eq!(first, second);
    let other = ok(&["protocol", "--trials", "500", "--seed", "5"]);
    assert_ne!(first, other);
}

#[test]
fn header_echoes_seed_and_arguments() {
    let out = ok(&["protocol", "--trials", "10", "--seed", "123", "--theta", "0.5"]);
    let header: Vec<&str> = out.lines().take_while(|l| l.starts_with('#')).collect();
    assert!(header.contains(&"# seed: 123"), "{header:?}");
    assert!(header.contains(&"# theta: 0.5"));
    assert!(header.contains(&"# trials: 10"));
    assert!(header.iter().any(|l| l.starts_with("# alpha: 0.7071")));

    let seeded = Command::new(env!("CARGO_BIN_EXE_locc"))
        .args(["cost", "--tradeoff"])
        .env("LOCC_SEED", "77")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&seeded.stdout).contains("# seed: 77"));
}

#[test]
fn protocol_matches_closed_form() {
    let doc = json(&["protocol", "--trials", "4000", "--theta", "1", "--alpha", "1"]);
    let row = &doc["result"][0];
    assert!(f(&row["z_score"]).abs() < 5.0, "{row}");
    assert!(f(&row["min_fidelity"]) > 1.0 - 1e-10);

    let doc = json(&["protocol", "--exhaustive", "--composite", "--theta", "1"]);
    let rows = doc["result"].as_array().unwrap();
    let total: f64 = rows.iter().map(|r| f(&r["probability"])).sum();
    assert!((total - 1.0).abs() < 1e-12);
    assert!(rows.iter().all(|r| f(&r["fidelity"]) > 1.0 - 1e-10));
    assert!(rows.iter().all(|r| r["rounds"].as_u64().unwrap() <= 4));
}

#[test]
fn nshot_failure_rate_decreases() {
    let doc = json(&["nshot", "--n", "20,100", "--trials", "2000", "--seed", "1"]);
    let rows = doc["result"].as_array().unwrap();
    let eps: Vec<f64> = rows.iter().map(|r| f(&r["epsilon_hat"])).collect();
    assert!(eps[1] < eps[0], "{eps:?}");
    let exact: Vec<f64> = rows.iter().map(|r| f(&r["epsilon_exact"])).collect();
    assert!(exact[1] < exact[0]);
    for r in rows {
        assert!((f(&r["epsilon_hat"]) - f(&r["epsilon_exact"])).abs() < 5.0 * f(&r["std_error"]) + 1e-3);
    }
}

#[test]
fn tradeoff_separates_at_small_angle() {
    let doc = json(&["cost", "--tradeoff", "--theta", "0.1"]);
    let row = &doc["result"][0];
    assert_eq!(f(&row["lower_bound_two_round"]), 1.0);
    assert!(f(&row["upper_bound_four_round"]) < 1.0);
    assert_eq!(row["separation"], Value::Bool(true));

    let doc = json(&["cost", "--theta-max", "--tol", "1e-10"]);
    let row = &doc["result"][0];
    assert!((f(&row["E_theta_max"]) - 1.0).abs() < 1e-9);
}

#[test]
fn cost_curve_is_monotone() {
    let doc = json(&["cost", "--grid", "0.001:1.5:30"]);
    let e: Vec<f64> = doc["result"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| f(&r["E_theta"]))
        .collect();
    assert_eq!(e.len(), 30);
    assert!(e.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn dilution_is_feasible_on_nonempty_sets() {
    let doc = json(&["typicality", "--dilution", "--n", "4:20:4"]);
    let rows = doc["result"].as_array().unwrap();
    assert!(rows.iter().any(|r| r["feasible"] == Value::Bool(true)));
    for r in rows {
        assert_ne!(r["feasible"], Value::Bool(false), "{r}");
    }
}

#[test]
fn csv_has_one_header_row_and_config_block() {
    let out = ok(&["typicality", "--n", "4,8"]);
    let body: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "n,delta,P,one_minus_P,eps_prime,budget_bits,feasible");
    assert_eq!(body.len(), 3);
}
