use std::fs;
use std::path::{Path, PathBuf};

use tunnelgps::cli::{run, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_OK};

const SMALL: &str =
    "seed = 3\n[scenario]\ntrials = 2\nreceiver = \"dedicated\"\nclocks = [\"public/raw\", \"private/calibrated\"]\n";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn tunnelgps(args: &[&str]) -> Run {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("tunnelgps").chain(args.iter().copied()), &mut out, &mut err);
    Run { code, stdout: String::from_utf8(out).unwrap(), stderr: String::from_utf8(err).unwrap() }
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn plan_reports_bounds_and_curves() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write(dir.path(), "c.toml", "");
    let r = tunnelgps(&["plan", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("plan.json")).unwrap()).unwrap();
    assert!((json["min_coverage_radius_m"].as_f64().unwrap() - 76.4).abs() < 0.05);
    assert_eq!(json["max_separation_m"].as_f64().unwrap(), 880.0);
    assert!((json["radius_bounds"]["separation_bound_m"].as_f64().unwrap() - 45.5).abs() < 0.05);
    assert!((json["radius_bounds"]["combined_m"].as_f64().unwrap() - 76.4).abs() < 0.05);
    assert_eq!(json["validation"]["all_pass"], true);
    let curve = fs::read_to_string(out.join("reception_curve.csv")).unwrap();
    assert!(curve.starts_with("r_m,v_kmh,t_rcp_s,feasible\n"));
    assert!(out.join("blockage_curve.csv").exists());
    assert!(out.join("plan.txt").exists());
}

#[test]
fn plan_csv_format() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let r = tunnelgps(&["plan", "--config", s(&cfg), "--out", s(dir.path()), "--format", "csv"]);
    assert_eq!(r.code, EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("plan.csv")).unwrap();
    assert!(csv.contains("max_separation_m,880.000"), "{csv}");
    assert!(csv.contains("min_coverage_radius_m,76.389"), "{csv}");
}

#[test]
fn missing_v_max_is_a_config_error_with_its_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[deployment]\ncenters_m = [300.0]\nradius_m = 80.0\nseparation_m = 500.0\n[deployment.timing]\nt_reacq_s = 5.0\nt_max_s = 135.0\nt_acq_s = 30.0\n",
    );
    let r = tunnelgps(&["plan", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(r.code, EXIT_CONFIG);
    assert!(r.stderr.contains("deployment.v_max_kmh"), "{}", r.stderr);
    assert!(!dir.path().join("o").exists());
}

#[test]
fn unknown_key_and_missing_file_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[deployment]\nv_max = 110\n");
    assert_eq!(tunnelgps(&["plan", "--config", s(&cfg), "--out", s(dir.path())]).code, EXIT_CONFIG);
    let r = tunnelgps(&["plan", "--config", s(&dir.path().join("absent.toml")), "--out", s(dir.path())]);
    assert_eq!(r.code, EXIT_CONFIG);
}

#[test]
fn strict_plan_fails_an_infeasible_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        "[deployment]\ncenters_m = [300.0, 1400.0]\nradius_m = 60.0\nv_max_kmh = 110.0\nseparation_m = 500.0\n[deployment.timing]\nt_reacq_s = 5.0\nt_max_s = 135.0\nt_acq_s = 30.0\n",
    );
    let lenient = tunnelgps(&["plan", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(lenient.code, EXIT_OK);
    assert!(lenient.stdout.contains("warning"));
    let strict = tunnelgps(&["plan", "--strict", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(strict.code, EXIT_INFEASIBLE);
    assert!(strict.stderr.contains("t_reacq > t_rcp"), "{}", strict.stderr);
    // the report is still written
    assert!(dir.path().join("plan.json").exists());
}

#[test]
fn calibrate_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let input = write(dir.path(), "s.csv", "timestamp_s,delay_ms\n0,99\n1,100\n2,101\n");
    let r = tunnelgps(&["calibrate", "--input", s(&input), "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("calibration.json")).unwrap()).unwrap();
    assert_eq!(json["correction_ms"].as_f64().unwrap(), 100.0);
    assert_eq!(json["sample_count"], 3);
}

#[test]
fn calibrate_rejects_empty_and_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let out = dir.path().join("o");
    for text in ["", "timestamp_s,delay_ms\n", "timestamp_s,delay_ms\n0,abc\n"] {
        let input = write(dir.path(), "s.csv", text);
        let r = tunnelgps(&["calibrate", "--input", s(&input), "--config", s(&cfg), "--out", s(&out)]);
        assert_eq!(r.code, EXIT_CONFIG, "input {text:?}: {}", r.stderr);
    }
    assert!(!out.exists());
}

#[test]
fn synthetic_calibration_uses_the_full_window() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let r = tunnelgps(&["calibrate", "--synthetic", "--config", s(&cfg), "--out", s(dir.path()), "--format", "csv"]);
    assert_eq!(r.code, EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("calibration.csv")).unwrap();
    let row = csv.lines().nth(1).unwrap();
    assert!(row.starts_with("synthetic,"));
    assert_eq!(row.split(',').nth(2), Some("1800"));
    assert_eq!(fs::read_to_string(dir.path().join("samples.csv")).unwrap().lines().count(), 1801);
}

#[test]
fn sweep_writes_eleven_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[scenario]\ntrials = 1\nreceiver = \"dedicated\"\nclocks = [\"private/calibrated\"]\n[scenario.sweep]\noffsets_ms = [-250.0, -200.0, -150.0, -100.0, -50.0, 0.0, 50.0, 100.0, 150.0, 200.0, 250.0]\ntrials = 1\n");
    let r = tunnelgps(&["sweep", "--config", s(&cfg), "--out", s(dir.path()), "--format", "csv"]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 12);
    assert!(csv.lines().nth(1).unwrap().starts_with("-250,"));
    assert!(csv.lines().nth(6).unwrap().starts_with("0,0.400,"));
}

#[test]
fn static_handover_json_has_one_row_per_clock() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let r = tunnelgps(&["simulate", "--scenario", "static-handover", "--config", s(&cfg), "--out", s(dir.path())]);
    assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
    let json: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("static_handover.json")).unwrap()).unwrap();
    let rows = json.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["clock"], "private/calibrated");
    for key in ["max_m", "p95_m", "average_m"] {
        assert!(rows[1][key].as_f64().unwrap() > 0.0);
    }
}

#[test]
fn seed_changes_results_but_reruns_match() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", SMALL);
    let mut outputs = Vec::new();
    for (i, seed) in ["1", "1", "2"].iter().enumerate() {
        let out = dir.path().join(format!("o{i}"));
        let r = tunnelgps(&[
            "simulate",
            "--scenario",
            "vehicle",
            "--seed",
            seed,
            "--config",
            s(&cfg),
            "--out",
            s(&out),
            "--format",
            "csv",
        ]);
        assert_eq!(r.code, EXIT_OK, "{}", r.stderr);
        outputs.push(fs::read(out.join("vehicle.csv")).unwrap());
        assert!(out.join("vehicle_fixes_private_calibrated.csv").exists());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_ne!(outputs[0], outputs[2]);
}

#[test]
fn sync_compare_csv_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "");
    let r = tunnelgps(&["sync-compare", "--config", s(&cfg), "--out", s(dir.path()), "--format", "csv"]);
    assert_eq!(r.code, EXIT_OK);
    let csv = fs::read_to_string(dir.path().join("sync_compare.csv")).unwrap();
    assert!(csv.starts_with("connection_type,server_type,est_max_ntp_error_ms\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn usage_errors() {
    assert_eq!(tunnelgps(&[]).code, EXIT_CONFIG);
    assert_eq!(tunnelgps(&["simulate"]).code, EXIT_CONFIG);
    assert_eq!(tunnelgps(&["simulate", "--scenario", "moon"]).code, EXIT_CONFIG);
    assert_eq!(tunnelgps(&["plan", "--format", "xml"]).code, EXIT_CONFIG);
    assert_eq!(tunnelgps(&["calibrate", "--synthetic", "--input", "x.csv"]).code, EXIT_CONFIG);
    assert_eq!(tunnelgps(&["--version"]).code, EXIT_OK);
}

#[test]
fn config_path_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[deployment]\nv_max = 1\n");
    let bin = env!("CARGO_BIN_EXE_tunnelgps");
    let status = std::process::Command::new(bin)
        .args(["plan", "--out", s(dir.path())])
        .env(tunnelgps::config::CONFIG_ENV, &cfg)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_CONFIG));
    let ok = std::process::Command::new(bin)
        .args(["plan", "--out", s(dir.path())])
        .env(tunnelgps::config::CONFIG_ENV, write(dir.path(), "good.toml", ""))
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(EXIT_OK));
}
