use std::path::Path;
use std::process::{Command, Output};

fn htefuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htefuse"))
        .args(args)
        .env_remove("HTEFUSE_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn simulate(dir: &Path, confounded: bool, seed: &str) -> String {
    let path = dir.join("sim.csv");
    let p = path.to_str().unwrap().to_string();
    let flag = if confounded { "true" } else { "false" };
    let out = htefuse(&[
        "simulate", "--p", "10", "--n", "1500", "--cr", "0.2", "--confounded", flag, "--seed", seed, "-o", &p,
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    p
}

#[test]
fn simulate_then_fit_recovers_the_confounding_flag() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), true, "1");
    let truth: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{data}.truth.json")).unwrap()).unwrap();
    assert_eq!(truth["confounded"], true);
    let fit = json(&htefuse(&["fit", "-i", &data, "--seed", "3"]));
    assert_eq!(fit["fit"]["confounded"], truth["confounded"]);
    assert_eq!(fit["p"], 10);
}

#[test]
fn outputs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), false, "2");
    let a = htefuse(&["fit", "-i", &data, "--tuning", "bic", "--seed", "5"]);
    let b = htefuse(&["fit", "-i", &data, "--tuning", "bic", "--seed", "5"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn trial_only_output_has_no_beta_block() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), false, "3");
    let fit = json(&htefuse(&["fit", "-i", &data, "--rct-only"]));
    assert!(fit["fit"]["coefficients"]["beta"].is_null());
    assert_eq!(fit["fit"]["method"], "rct");
}

#[test]
fn bootstrap_adds_intervals() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), false, "4");
    let out = json(&htefuse(&["bootstrap", "-i", &data, "-B", "8", "--method", "oa", "--level", "0.9"]));
    let b = &out["bootstrap"];
    assert_eq!(b["replicates"], 8);
    let se = b["se"].as_array().unwrap();
    let lo = b["ci_lower"].as_array().unwrap();
    let hi = b["ci_upper"].as_array().unwrap();
    assert_eq!(se.len(), 22);
    for k in 0..se.len() {
        assert!(lo[k].as_f64().unwrap() <= hi[k].as_f64().unwrap());
    }
}

#[test]
fn file_output_and_env_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = simulate(dir.path(), true, "5");
    let dest = dir.path().join("fit.json");
    let run = Command::new(env!("CARGO_BIN_EXE_htefuse"))
        .args(["fit", "-i", &data, "-o", dest.to_str().unwrap()])
        .env("HTEFUSE_SEED", "9")
        .output()
        .unwrap();
    assert!(run.status.success());
    let direct = htefuse(&["fit", "-i", &data, "--seed", "9"]);
    assert_eq!(std::fs::read(&dest).unwrap(), direct.stdout);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        vec!["fit"],
        vec!["fit", "-i", "x.csv", "--method", "nope"],
        vec!["fit", "-i", "x.csv", "--known-propensity", "0.5"],
        vec!["simulate", "-o", "x.csv"],
    ] {
        let out = htefuse(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_one_with_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "time,status,treat,source,x1\n1.0,1,1,1,0.2\n-2,1,0,1,0.1\n3,2,0,0,0.4\n").unwrap();
    let out = htefuse(&["fit", "-i", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains("row 3"), "{err}");
}

#[test]
fn tiny_benchmark_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let dest = dir.path().join("report.json");
    let out = htefuse(&[
        "benchmark", "--preset", "table1", "--p", "8", "--n", "400", "--reps", "2", "--estimators", "RL.cv,OA.bic",
        "--seed", "7", "-o", dest.to_str().unwrap(), "--threads", "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("RL.cv") && table.contains("OA.bic"));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&dest).unwrap()).unwrap();
    assert_eq!(report["replicates"].as_array().unwrap().len(), 2);
    assert_eq!(report["metrics"].as_array().unwrap().len(), 2);
}
