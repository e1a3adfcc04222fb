use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

fn riesz(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_riesz"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn density_csv_has_mean_footer() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d.csv");
    let o = riesz(&[
        "density",
        "--spec",
        &data("ledrappier.json"),
        "--stage",
        "6",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("k,theta,density\n"));
    assert!(text.contains("# mean_check=pass"));
    assert!(text.contains("# truncated_at=6"));
    assert!(text.contains("# grid=4096"));
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 4096 + 1);
}

#[test]
fn mahler_table_matches_powers_of_two() {
    let v = json(&riesz(&["mahler", "--spec", &data("classical.json"), "--stages", "1..10"]));
    let stages = v["result"]["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 10);
    for s in stages {
        let n = s["stage"].as_u64().unwrap() as i32;
        let m = s["mahler"].as_f64().unwrap();
        assert!((m - 0.5f64.powi(n)).abs() < 1e-12);
    }
    assert_eq!(v["meta"]["truncated_at"], 10);
    assert_eq!(v["meta"]["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(v["meta"]["config_hash"].as_str().unwrap().len(), 64);
}

#[test]
fn gaussian_summary() {
    let v = json(&riesz(&["flatness", "gaussian", "--m", "100", "--trials", "20", "--seed", "1"]));
    let r = &v["result"];
    assert_eq!(r["values"].as_array().unwrap().len(), 20);
    assert!((r["mean"].as_f64().unwrap() - 0.886227).abs() < 0.05);
    assert_eq!(r["target"].as_f64().unwrap(), riesz_core::flatness::GAUSSIAN_L1);
}

#[test]
fn outputs_are_deterministic() {
    let args = ["flatness", "gaussian", "--m", "40", "--trials", "12", "--seed", "9", "--format", "csv"];
    let a = riesz(&args);
    let b = riesz(&args);
    assert_eq!(a.stdout, b.stdout);
    let single = Command::new(env!("CARGO_BIN_EXE_riesz"))
        .args(args)
        .env("RIESZ_THREADS", "1")
        .output()
        .unwrap();
    assert_eq!(a.stdout, single.stdout);

    let s = ["support-bound", "--spec", &data("rankone.json"), "--budget", "6", "--seed", "3"];
    assert_eq!(riesz(&s).stdout, riesz(&s).stdout);
}

#[test]
fn csv_floats_have_seventeen_digits() {
    let o = riesz(&["bourgain", "--spec", &data("classical.json"), "--stages", "1..2", "--format", "csv"]);
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("1,")).unwrap();
    let value = row.split(',').nth(1).unwrap();
    let mantissa = value.split('e').next().unwrap().replace('.', "");
    assert_eq!(mantissa.len(), 17);
}

#[test]
fn config_errors_exit_two() {
    let o = riesz(&["density", "--spec", "/no/such/file.json"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\n  \"factors\": [\n    {\"terms\": 5}\n  ]\n}").unwrap();
    let o = riesz(&["density", "--spec", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 3"));

    let o = riesz(&["mahler", "--spec", &data("halves.json"), "--stages", "1..5"]);
    assert_eq!(o.status.code(), Some(2));

    let o = riesz(&["no-such-command"]);
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_riesz"))
        .args(["flatness", "barker"])
        .env("RIESZ_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numerical_errors_exit_three() {
    let o = riesz(&["density", "--spec", &data("ledrappier.json"), "--grid", "16"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("2*deg"));

    let o = riesz(&["flatness", "zeros", "--kind", "cluster", "--coeffs", "1,1,1"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn validate_reports_diagnostics() {
    let v = json(&riesz(&["validate", "--spec", &data("ledrappier.json")]));
    assert!(v["result"]["diagnostics"].as_array().unwrap().is_empty());

    let o = riesz(&["validate", "--spec", &data("ledrappier.json"), "--grid", "8"]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    let msg = v["result"]["diagnostics"][0]["message"].as_str().unwrap();
    assert!(msg.contains("N >= 2*deg + 1"));

    let v = json(&riesz(&["validate", "--spec", &data("rankone_heights.json")]));
    let d = v["result"]["diagnostics"].as_array().unwrap();
    assert!(d.iter().any(|x| x["severity"] == "warning"
        && x["message"].as_str().unwrap().contains("pre-flight")));
}

#[test]
fn rankone_commands() {
    let v = json(&riesz(&["rankone", "build", "--spec", &data("rankone.json")]));
    assert_eq!(v["result"]["heights"], serde_json::json!([1, 4, 12, 24]));
    assert_eq!(v["result"]["reflected"], true);

    let v = json(&riesz(&["rankone", "check", "--spec", &data("halves.json")]));
    assert_eq!(v["result"]["check"]["dynamical"], false);

    let v = json(&riesz(&["rankone", "check", "--spec", &data("rankone.json")]));
    assert_eq!(v["result"]["check"]["dynamical"], true);
    assert_eq!(v["result"]["params"]["stages"][0]["spacers"], serde_json::json!([1, 0]));

    let dir = tempfile::tempdir().unwrap();
    let lifted = dir.path().join("lift.json");
    let o = riesz(&["rankone", "lift", "--spec", &data("halves.json"), "--out", lifted.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&lifted).unwrap()).unwrap();
    assert_eq!(v["result"]["n"][0], 1);
    assert!(v["result"]["n"][1].as_u64().unwrap() >= 5);

    // the lifted spec is itself a valid input
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, v["result"]["spec"].to_string()).unwrap();
    let v = json(&riesz(&["rankone", "check", "--spec", spec.to_str().unwrap()]));
    assert_eq!(v["result"]["check"]["dynamical"], true);
}

#[test]
fn contract_round_trips_through_spec_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = riesz(&["contract", "--spec", &data("halves.json"), "--q", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["spec"]["factors"][0]["terms"][1][0], 3);
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, v["result"]["spec"].to_string()).unwrap();
    let a = json(&riesz(&["mahler", "--spec", spec.to_str().unwrap()]));
    let b = json(&riesz(&["mahler", "--spec", &data("halves.json")]));
    for (x, y) in a["result"]["stages"].as_array().unwrap().iter().zip(b["result"]["stages"].as_array().unwrap()) {
        assert!((x["mahler"].as_f64().unwrap() - y["mahler"].as_f64().unwrap()).abs() < 1e-9);
    }
}

#[test]
fn flatness_commands() {
    let v = json(&riesz(&["flatness", "barker"]));
    let seqs = v["result"]["sequences"].as_array().unwrap();
    assert_eq!(seqs.len(), 7);
    assert!(seqs.iter().all(|s| s["check"]["barker"] == true && s["bound_holds"] == true));

    let v = json(&riesz(&["flatness", "barker", "--seq", "+,-,+,-"]));
    assert_eq!(v["result"]["sequences"][0]["check"]["barker"], false);

    let v = json(&riesz(&["flatness", "metrics", "--poly", r#"{"terms": [[0, 1, 0], [1, 1, 0]]}"#]));
    assert!((v["result"]["mahler_over_l2"].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-12);

    let v = json(&riesz(&["flatness", "zeros", "--kind", "r-form", "--h", "4", "--spacers", "0,3,1"]));
    assert!(v["result"]["violations"].as_array().unwrap().is_empty());
    assert_eq!(v["result"]["roots"].as_array().unwrap().len(), 16);

    let v = json(&riesz(&["flatness", "zeros", "--kind", "zero-one", "--coeffs", "1,1,0,1"]));
    assert!(v["result"]["violations"].as_array().unwrap().is_empty());
}

#[test]
fn sequence_commands() {
    let v = json(&riesz(&[
        "affinity",
        "--spec",
        &data("ledrappier.json"),
        "--against",
        &data("ledrappier.json"),
    ]));
    for x in v["result"]["values"].as_array().unwrap() {
        assert!((x.as_f64().unwrap() - 1.0).abs() < 1e-10);
    }

    let v = json(&riesz(&["guenais", "--spec", &data("ledrappier.json")]));
    for s in v["result"]["slack"].as_array().unwrap() {
        assert!(s.as_f64().unwrap() >= -1e-10);
    }

    let v = json(&riesz(&["diagnostics", "--spec", &data("classical.json")]));
    assert_eq!(v["result"]["stages"].as_array().unwrap().len(), 10);
    assert_eq!(v["result"]["classical_riesz"]["verdict"], "singular");

    let v = json(&riesz(&["phase", "--spec", &data("halves.json"), "--stage", "1", "--grid", "64"]));
    assert_eq!(v["result"]["undefined"], 1);

    let v = json(&riesz(&["rn-sqrt", "--spec", &data("ledrappier.json"), "--stage", "2"]));
    assert_eq!(v["result"]["values"]["values"].as_array().unwrap().len(), 4096);

    let v = json(&riesz(&["fourier", "--spec", &data("halves.json"), "--kmax", "2"]));
    assert_eq!(v["result"]["coefficients"].as_array().unwrap().len(), 3);
}
