// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use optidrift::evaluation::{read_series, ExportFormat};
use optidrift::stream::{load_csv, ColumnMap};
use optidrift::telemetry::Segment;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_optidrift"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL: &str = r#"{
  "stream": { "synth": { "n_sfd": 2000, "n_hfd": 1000 } },
  "window": 200,
  "latency": { "trials": 3, "events_per_trial": 50 }
}"#;

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn run_writes_series_for_every_model_and_arm() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("model,static_final_accuracy"));
    assert_eq!(stdout.lines().count(), 4);
    for model in ["lr", "nb", "arf"] {
        let rows = read_series(&out.join(format!("{model}_series.csv")), ExportFormat::Csv).unwrap();
        assert_eq!(rows.len(), 1000 * 2);
        assert!(out.join(format!("{model}_summary.json")).exists());
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run_manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 42);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(manifest["config"]["window"], 200);
}

#[test]
fn bundled_configs_parse() {
    for name in ["default.json", "oversample.json", "stationary.json"] {
        let text = std::fs::read_to_string(repo_config(name)).unwrap();
        let cfg = optidrift_cli::config::ExperimentConfig::from_json(&text).unwrap();
        cfg.validate().unwrap();
    }
}

#[test]
fn json_format_and_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("out");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
        "--models",
        "nb,lr",
        "--window",
        "100",
        "--seed",
        "5",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let printed: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let summaries = printed["summaries"].as_array().unwrap();
    assert_eq!(summaries.len(), 2);
    assert_eq!(summaries[0]["model"], "nb");
    assert_eq!(summaries[0]["window"], 100);
    assert!(out.join("lr_series.json").exists() && !out.join("arf_series.json").exists());
    let rows = read_series(&out.join("nb_series.json"), ExportFormat::Json).unwrap();
    assert_eq!(rows.len(), 2000);
}

#[test]
fn quiet_prints_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("out");
    let o = run(&[
        "drift",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--quiet",
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
}

#[test]
fn unknown_model_is_a_config_error_naming_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", r#"{"models": ["lr", "svm"]}"#);
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("models[1]"), "{}", stderr(&o));

    let o = run(&["run", "--models", "lr,svm"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--models") && stderr(&o).contains("svm"));
}

#[test]
fn exit_codes_separate_config_io_and_runtime() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["run", "--config", tmp.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));

    let zero = write_config(tmp.path(), "z.json", r#"{"stream": {"synth": {"n_sfd": 0}}}"#);
    let o = run(&[
        "gen",
        "--config",
        zero.to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n_sfd"), "{}", stderr(&o));

    let bad_csv = tmp.path().join("bad.csv");
    std::fs::write(
        &bad_csv,
        "timestamp,ber_tx,osnr_tx,ber_rx,osnr_rx,label\n0,1e-9,35,1e-6,20,0\n1,2.0,35,1e-6,20,0\n",
    )
    .unwrap();
    let file_cfg = write_config(
        tmp.path(),
        "f.json",
        &format!(
            r#"{{"stream": {{"sfd_path": "{0}", "hfd_path": "{0}"}}}}"#,
            bad_csv.display()
        ),
    );
    let o = run(&[
        "run",
        "--config",
        file_cfg.to_str().unwrap(),
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("row 2"), "{}", stderr(&o));
}

#[test]
fn gen_then_file_run_matches_synthetic_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let data = tmp.path().join("data");
    let o = run(&[
        "gen",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let sfd = load_csv(&data.join("sfd.csv"), &ColumnMap::default(), Segment::Sfd).unwrap();
    let hfd = load_csv(&data.join("hfd.csv"), &ColumnMap::default(), Segment::Hfd).unwrap();
    assert_eq!((sfd.len(), hfd.len()), (2000, 1000));

    let synth_out = tmp.path().join("synth");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        synth_out.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert!(o.status.success());

    let file_cfg = write_config(
        tmp.path(),
        "file.json",
        &format!(
            r#"{{"stream": {{"sfd_path": "{}", "hfd_path": "{}"}}, "window": 200}}"#,
            data.join("sfd.csv").display(),
            data.join("hfd.csv").display()
        ),
    );
    let file_out = tmp.path().join("file");
    let o = run(&[
        "run",
        "--config",
        file_cfg.to_str().unwrap(),
        "--out",
        file_out.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    let mut a = files(&synth_out);
    let mut b = files(&file_out);
    // Manifests record the differing stream sources; everything else must match.
    a.remove("run_manifest.json");
    b.remove("run_manifest.json");
    assert_eq!(a.len(), 10);
    assert_eq!(a, b);
}

#[test]
fn drift_on_stationary_stream_is_header_only() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&[
        "drift",
        "--config",
        repo_config("stationary.json").to_str().unwrap(),
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read_to_string(tmp.path().join("drift_events.csv")).unwrap(),
        "index,class_context,feature\n"
    );
}

#[test]
fn drift_on_default_stream_flags_failures_inside_hfd() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&["drift", "--out", tmp.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(tmp.path().join("drift_events.csv")).unwrap();
    let rows: Vec<(usize, String)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let mut f = l.split(',');
            (f.next().unwrap().parse().unwrap(), f.next().unwrap().to_string())
        })
        .collect();
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(
        rows.iter().any(|(i, c)| c == "failure" && (10_000..15_000).contains(i)),
        "{rows:?}"
    );
}

#[test]
fn bench_writes_table_and_raw_dump() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.json", SMALL);
    let out = tmp.path().join("out");
    let o = run(&[
        "bench",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--trials",
        "4",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = std::fs::read_to_string(out.join("latency.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some("model,static_ms,online_ms,overhead_ms"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(
        rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(),
        ["lr", "nb", "arf"]
    );
    for r in &rows {
        let [s, on, over] = [&r[1], &r[2], &r[3]].map(|v| v.parse::<f64>().unwrap());
        assert_eq!(over, optidrift::evaluation::latency::decimal_difference(on, s));
    }
    let raw = std::fs::read_to_string(out.join("latency_raw.csv")).unwrap();
    assert_eq!(raw.lines().count() - 1, 4 * 50 * 3 * 2);
}
