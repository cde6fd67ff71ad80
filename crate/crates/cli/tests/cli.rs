use std::path::Path;
use std::process::{Command, Output};

fn macs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_macs"))
        .args(args)
        .env_remove("MACS_DRUG_DATA")
        .env_remove("MACS_JOBS")
        .output()
        .expect("spawn macs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_dataset(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("stability.csv");
    let mut body = String::from("# synthetic degradation data\nx,y\n");
    for i in 0..24 {
        let x = (i % 6) as f64 * 0.4;
        let noise = [0.31, -0.52, 0.12, 0.77, -0.28, -0.4][i % 6] * if i % 4 < 2 { 1.0 } else { -0.6 };
        body.push_str(&format!("{x},{}\n", 100.0 - 2.5 * x + noise));
    }
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn solve_is_byte_identical_across_runs() {
    let args = ["solve", "--band", "SB", "--alpha", "0.5", "--gamma", "0.5", "--n", "10", "--s", "1"];
    let a = macs(&args);
    let b = macs(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("coverage  0.500000"), "{text}");
}

#[test]
fn solve_json_reports_equal_constants_for_symmetric_band() {
    let o = macs(&["solve", "--band", "TBE", "--alpha", "0.05", "--gamma", "0.05", "--n", "10", "--s", "1", "--json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["band"], "TBE");
    assert_eq!(v["c1"], v["c2"]);
    assert!((v["coverage"].as_f64().unwrap() - 0.95).abs() < 1e-6);
}

#[test]
fn asymmetric_flag_and_suffix_agree() {
    let base = ["solve", "--alpha", "0.1", "--gamma", "0.25", "--n", "10", "--s", "1"];
    let suffixed = macs(&[&base[..], &["--band", "Va"]].concat());
    let flagged = macs(&[&base[..], &["--band", "V", "--asymmetric"]].concat());
    assert!(suffixed.status.success());
    assert_eq!(suffixed.stdout, flagged.stdout);
}

#[test]
fn mc_check_seed_is_reproducible() {
    let args = [
        "solve", "--band", "UV", "--alpha", "0.1", "--gamma", "0.25", "--n", "10", "--s", "1", "--mc-check", "--draws", "20000",
        "--seed", "7",
    ];
    let a = macs(&args);
    let b = macs(&args);
    assert!(a.status.success(), "{}", stdout(&a));
    assert_eq!(a.stdout, b.stdout);
    assert!(stdout(&a).contains("seed 7"));
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(macs(&["solve", "--band", "XX", "--n", "10", "--s", "1"]).status.code(), Some(2));
    assert_eq!(macs(&["solve", "--band", "SB", "--n", "10"]).status.code(), Some(2));
    assert_eq!(macs(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn invalid_scenario_exits_with_one() {
    let o = macs(&["solve", "--band", "SB", "--alpha", "1.5", "--gamma", "0.5", "--n", "10", "--s", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn missing_dataset_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    for cmd in [
        vec!["expiry", "--h", "95", "--data", missing.to_str().unwrap()],
        vec!["table", "--id", "T5", "--data", missing.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap()],
    ] {
        let o = macs(&cmd);
        assert_eq!(o.status.code(), Some(1));
        assert!(String::from_utf8_lossy(&o.stderr).contains("external dataset required"));
    }
}

#[test]
fn expiry_on_synthetic_data_finds_ordered_crossings() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let out = dir.path().join("band.csv");
    let o = macs(&[
        "expiry", "--data", data.to_str().unwrap(), "--h", "97", "--json", "--out", out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let lo = v["crossings"]["lower"].as_f64().unwrap();
    let hi = v["crossings"]["upper"].as_f64().unwrap();
    assert!(lo < hi, "{lo} {hi}");
    let band = std::fs::read_to_string(out).unwrap();
    let mut lines = band.lines();
    assert!(lines.next().unwrap().starts_with("# {"));
    assert_eq!(lines.next().unwrap(), "x,lower,upper");
    assert_eq!(lines.count(), 201);
}

#[test]
fn table_t5_writes_csv_and_json_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let data = write_dataset(dir.path());
    let o = macs(&[
        "table", "--id", "T5", "--data", data.to_str().unwrap(), "--out-dir", dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("table_T5.csv")).unwrap();
    let manifest: serde_json::Value = serde_json::from_str(csv.lines().next().unwrap().trim_start_matches("# ")).unwrap();
    assert_eq!(manifest["tool"], "macs");
    assert!(manifest["tolerances"]["coverage_outer"].as_f64().unwrap() > 0.0);
    let rows: Vec<&str> = csv.lines().skip(2).collect();
    assert_eq!(rows.len(), 1);
    let cells: Vec<&str> = rows[0].split(',').collect();
    assert_eq!(cells.len(), 16);
    assert_eq!(cells[14], "1.000", "{csv}");
    for c in &cells[4..] {
        assert!(c.parse::<f64>().unwrap() >= 0.999, "{csv}");
    }
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("table_T5.json")).unwrap()).unwrap();
    assert!(json["data"].is_object() || json["data"].is_array());
}

#[test]
fn validate_suites_pass_on_small_runs() {
    for suite in ["areas", "coverage"] {
        let o = macs(&["validate", "--suite", suite, "--cases", "4", "--draws", "50000"]);
        assert!(o.status.success(), "{}", stdout(&o));
        assert!(stdout(&o).ends_with("0 failure(s)\n"));
    }
}
