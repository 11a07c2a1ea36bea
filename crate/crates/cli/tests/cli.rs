use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaitdex::report::ReportTable;

fn gaitdex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gaitdex"))
        .args(args)
        .env_remove("DATA_DIR")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = gaitdex(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

/// Synthetic cohort on disk; returns (cohort, metadata) paths.
fn synth(dir: &Path, name: &str, extra: &[&str]) -> (String, String) {
    let (c, m) = (
        p(dir, &format!("{name}.csv")),
        p(dir, &format!("{name}_meta.csv")),
    );
    let mut args = vec!["synth", "--out", &c, "--metadata-out", &m];
    if !extra.contains(&"--points") {
        args.extend(["--points", "26"]);
    }
    args.extend_from_slice(extra);
    ok(&args);
    (c, m)
}

fn moments(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[test]
fn fit_prints_counts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let (c, m) = synth(dir.path(), "c", &["--healthy", "12", "--patients", "8"]);
    let (a, b) = (p(dir.path(), "a.json"), p(dir.path(), "b.json"));
    let out = ok(&["fit", &c, "--metadata", &m, "--modes", "combined", "--out", &a]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("combined: W="), "{stdout}");
    ok(&["fit", &c, "--metadata", &m, "--modes", "combined", "--out", &b]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = synth(dir.path(), "c", &["--healthy", "5", "--patients", "2"]);
    let out = gaitdex(&["fit", &c, "--omega", "1.5", "--out", &p(dir.path(), "m.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let out = gaitdex(&["fit", &c, "--modes", "", "--out", &p(dir.path(), "m.json")]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no modes requested"));
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = synth(dir.path(), "c", &["--healthy", "8", "--patients", "4"]);
    let cfg = p(dir.path(), "gaitdex.conf");
    std::fs::write(&cfg, "# defaults\nomega = 0.9\nmodes = left\n").unwrap();
    let out = ok(&["--config", &cfg, "fit", &c, "--out", &p(dir.path(), "m.json")]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("left: W="), "{stdout}");
    assert_eq!(stdout.lines().count(), 1);

    std::fs::write(&cfg, "omega = 7\n").unwrap();
    let out = gaitdex(&["--config", &cfg, "fit", &c, "--out", &p(dir.path(), "m.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_files_exit_1() {
    let out = gaitdex(&["fit", "/nonexistent/cohort.csv", "--out", "/tmp/never.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no such file"));
}

#[test]
fn healthy_only_cohort_scores_standardised() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = synth(dir.path(), "h", &["--healthy", "15", "--patients", "0"]);
    let model = p(dir.path(), "m.json");
    let report = p(dir.path(), "r.csv");
    ok(&["fit", &c, "--modes", "combined,per_joint", "--out", &model]);
    ok(&["score", &model, &c, "--indices", "fgdi", "--out", &report]);
    let t = ReportTable::read_csv(std::fs::File::open(&report).unwrap()).unwrap();
    let z: Vec<f64> = t
        .column("sfgdi_combined")
        .unwrap()
        .iter()
        .map(|v| v.unwrap())
        .collect();
    let (mean, sd) = moments(&z);
    assert!(mean.abs() < 1e-10 && (sd - 1.0).abs() < 1e-10, "{mean} {sd}");
}

#[test]
fn score_requires_a_gdi_basis() {
    let dir = tempfile::tempdir().unwrap();
    let (c, m) = synth(dir.path(), "c", &["--healthy", "12", "--patients", "8"]);
    let model = p(dir.path(), "m.json");
    ok(&["fit", &c, "--metadata", &m, "--out", &model]);

    let out = gaitdex(&[
        "score",
        &model,
        &c,
        "--indices",
        "fgdi,gdi,gps,oa",
        "--out",
        &p(dir.path(), "r.csv"),
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--surrogate-gdi"));

    let report = p(dir.path(), "r.json");
    let out = ok(&[
        "score",
        &model,
        &c,
        "--metadata",
        &m,
        "--indices",
        "fgdi,gdi,gps,oa",
        "--surrogate-gdi",
        "--out",
        &report,
    ]);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("resampled from 26 to 51"), "{stderr}");
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&report).unwrap();
    let r = gaitdex::report::IndexReport::from_json(&text).unwrap();
    let t = r.to_table();
    for needed in [
        "sfgdi_combined",
        "sfgdi_left",
        "sfgdi_right",
        "sgdi_left",
        "sgdi_right",
        "gps_combined",
        "oa_left",
    ] {
        let col = t.column(needed).unwrap_or_else(|| panic!("missing {needed}"));
        assert!(col.iter().all(|v| v.is_some_and(f64::is_finite)), "{needed}");
    }
    assert!(t.flags.iter().all(String::is_empty));
    assert!(r.subjects[0].metadata.is_empty() && r.subject("P001").unwrap().metadata.hoehn_yahr.is_some());
}

#[test]
fn basis_file_found_through_data_dir() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = synth(
        dir.path(),
        "c",
        &["--healthy", "10", "--patients", "5", "--points", "51"],
    );
    let cohort = gaitdex::csv_io::load_cohort(&c).unwrap();
    let basis = gaitdex::indices::GdiFeatureBasis::surrogate(&cohort, 15).unwrap();
    let data_dir = dir.path().join("data");
    std::fs::create_dir(&data_dir).unwrap();
    basis
        .write_csv(std::fs::File::create(data_dir.join("gdi_features_51x9.csv")).unwrap())
        .unwrap();
    let model = p(dir.path(), "m.json");
    ok(&["fit", &c, "--modes", "left", "--out", &model]);
    let out = Command::new(env!("CARGO_BIN_EXE_gaitdex"))
        .args(["score", &model, &c, "--indices", "gdi", "--format", "csv"])
        .env("DATA_DIR", &data_dir)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = ReportTable::read_csv(&out.stdout[..]).unwrap();
    assert!(t.column("sgdi_left").is_some());
}

#[test]
fn stability_table() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = synth(dir.path(), "c", &["--healthy", "15", "--patients", "15"]);
    let model = p(dir.path(), "m.json");
    ok(&["fit", &c, "--modes", "per_joint,combined", "--out", &model]);

    let out = ok(&["stability", &model, &c, "--deltas", "0"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("variable,components,delta_+0"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 15);
    assert!(rows.iter().all(|r| r.ends_with(",0")), "{text}");

    let out_path = p(dir.path(), "s.csv");
    let out = ok(&[
        "stability",
        &model,
        &c,
        "--deltas",
        "-2,-1,1,2",
        "--out",
        &out_path,
    ]);
    assert!(out.stdout.is_empty());
    let table = std::fs::read_to_string(&out_path).unwrap();
    assert!(table.starts_with("variable,components,delta_-2,delta_-1,delta_+1,delta_+2"));
    assert_eq!(table.lines().count(), 16);

    let out = ok(&["stability", &model, &c, "--mode", "combined", "--deltas", "1,500"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));

    let out = gaitdex(&["stability", &model, &c, "--mode", "left"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn compare_and_correlate_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = synth(dir.path(), "c", &["--healthy", "12", "--patients", "12"]);
    let model = p(dir.path(), "m.json");
    ok(&["fit", &c, "--out", &model]);
    let (csv, json) = (p(dir.path(), "r.csv"), p(dir.path(), "r.json"));
    ok(&["score", &model, &c, "--out", &csv]);
    ok(&["score", &model, &c, "--out", &json]);

    let out = ok(&["compare", &csv, &json]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let cols = v["columns"].as_array().unwrap();
    assert!(cols.len() > 20);
    for col in cols {
        assert_eq!(col["kendall_tau"], 1.0, "{col}");
    }

    let out = ok(&[
        "correlate",
        &csv,
        "--columns",
        "sfgdi_combined,gps_combined,oa_combined",
    ]);
    let pairs: Vec<serde_json::Value> = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(pairs.len(), 3);
    for pair in &pairs {
        let tau = pair["kendall_tau"].as_f64().unwrap();
        assert!(tau > 0.0, "{pair}");
    }
}

#[test]
fn scoring_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (c, _) = synth(dir.path(), "c", &["--healthy", "10", "--patients", "6"]);
    let model = p(dir.path(), "m.json");
    ok(&["fit", &c, "--out", &model]);
    let outs: Vec<PathBuf> = (0..2).map(|i| dir.path().join(format!("r{i}.csv"))).collect();
    for o in &outs {
        ok(&["score", &model, &c, "--out", o.to_str().unwrap()]);
    }
    assert_eq!(std::fs::read(&outs[0]).unwrap(), std::fs::read(&outs[1]).unwrap());
}
