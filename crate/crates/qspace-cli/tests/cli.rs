use std::process::{Command, Output};

use serde_json::Value;

fn qspace(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qspace")).args(args).env("QSPACE_SEED", "7").output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn algebraic_verbs_print_json() {
    let out = qspace(&["star", "x2", "x1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["text"], "q^-1*x1*x2");
    let out = qspace(&["pair", "d1^2*d2", "x1^2*x2"]);
    assert_eq!(json(&out)["result"], "q^2 + q^4");
    let out = qspace(&["mink-deriv", "xp*xm", "--which", "-", "--inverse"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["mode"], "resummed");
}

#[test]
fn integrals_report_value_tail_and_params() {
    let out = qspace(&["integrate", "1", "--q", "1.05", "-K", "1000"]);
    let v = json(&out);
    let q: f64 = 1.05;
    let r = (q * q - 1.0) / (q * q).ln();
    let expect = -q * std::f64::consts::PI * r * r;
    assert!((v["value"].as_f64().unwrap() / expect - 1.0).abs() < 1e-9);
    assert!(v["tail_bound"].as_f64().unwrap() < 1e-10);
    assert_eq!(v["params"]["K"], 1000);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(qspace(&["star", "x1^-1", "x2"]).status.code(), Some(2));
    assert_eq!(qspace(&["braid", "x1", "x2", "--space", "euclid3"]).status.code(), Some(2));
    assert_eq!(qspace(&["verify", "nonexistent"]).status.code(), Some(2));
    assert_eq!(qspace(&["star", "x1", "x3"]).status.code(), Some(2));
    assert_eq!(qspace(&["--q", "0.9", "star", "x1", "x2"]).status.code(), Some(2));
    assert_eq!(qspace(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn verify_exit_codes_follow_the_report() {
    let ok = qspace(&["verify", "crossing", "--degree", "3"]);
    assert_eq!(ok.status.code(), Some(0));
    assert_eq!(json(&ok)["passed"], true);
    let bad = qspace(&["verify", "classical"]);
    assert_eq!(bad.status.code(), Some(1));
    let v = json(&bad);
    assert_eq!(v["passed"], false);
    assert!(v["suites"][0]["properties"][0]["counterexample"].is_object());
}

#[test]
fn verify_output_is_reproducible() {
    let strip = |o: Output| {
        let mut v = json(&o);
        v.as_object_mut().unwrap().remove("timing");
        v.to_string()
    };
    let args = ["verify", "hopf", "--degree", "3", "--samples", "5"];
    assert_eq!(strip(qspace(&args)), strip(qspace(&args)));
}

#[test]
fn config_file_sets_parameters() {
    let path = std::env::temp_dir().join(format!("qspace-config-{}.json", std::process::id()));
    std::fs::write(&path, r#"{"q": 1.2, "K": 300, "tol": 1e-9, "x0": 1.0}"#).unwrap();
    let out = qspace(&["integrate", "x1^2", "--config", path.to_str().unwrap()]);
    let v = json(&out);
    assert_eq!(v["params"]["q"], 1.2);
    assert_eq!(v["params"]["K"], 300);
    std::fs::write(&path, r#"{"speed": 3}"#).unwrap();
    assert_eq!(qspace(&["integrate", "1", "--config", path.to_str().unwrap()]).status.code(), Some(2));
    std::fs::remove_file(&path).ok();
}
