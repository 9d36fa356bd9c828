// SPDX-License-Identifier: MIT OR Apache-2.0

mod common;

use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use common::tmp_dir;
use nbselect::harness::{
    prepare_data, run_prepared, run_protocol, stratified_split, DataSource, ExperimentConfig,
    ExperimentReport, StrategySpec, SyntheticData,
};
use nbselect::indicators::GridAxes;
use nbselect::stats::TestFamily;

fn small_config(out: &Path) -> ExperimentConfig {
    let mut c = ExperimentConfig::bundled();
    c.data = DataSource::Generate(SyntheticData {
        n_normal: 16,
        n_per_anomaly_class: 8,
        ..SyntheticData::default()
    });
    c.grid = GridAxes {
        families: vec![TestFamily::MannWhitneyU, TestFamily::FVariance],
        window_sizes: vec![20],
        thresholds: vec![0.01, 0.1],
        confirmation: vec![false, true],
    };
    c.output_dir = out.to_path_buf();
    c.seed = 7;
    c
}

fn nbselect(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nbselect"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn smoke_run_is_fast_and_complete() {
    let tmp = tmp_dir("smoke");
    let dir = tmp.path();
    let config = small_config(dir);
    let start = Instant::now();
    let report = run_protocol(&config).unwrap();
    let secs = start.elapsed().as_secs_f64();
    assert!(secs < 1.0, "{secs} s");
    assert_eq!(report.grid_size, 8);
    assert_eq!(report.rows.len(), 10);
    assert_eq!(report.search_rows + report.validation_rows, 40);
    assert_eq!(report.test_rows, 40);
    for name in [
        "report.csv",
        "report.json",
        "data/train.bin",
        "data/test.bin",
    ] {
        assert!(dir.join(name).exists(), "{name}");
    }
    for s in &config.strategies {
        assert!(dir
            .join("traces")
            .join(format!("{}.jsonl", s.key()))
            .exists());
        assert!(dir
            .join("subsets")
            .join(format!("{}.json", s.key()))
            .exists());
    }
    let csv = fs::read_to_string(dir.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 11);
    let back: ExperimentReport =
        serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn runs_are_deterministic_and_rows_independent() {
    let tmp = tmp_dir("determinism");
    let dir = tmp.path();
    let mut config = small_config(dir);
    config.data = DataSource::Generate(SyntheticData {
        n_normal: 60,
        n_per_anomaly_class: 20,
        ..SyntheticData::default()
    });
    let data = prepare_data(&config).unwrap();
    let (all, outputs) = run_prepared(&config, &data).unwrap();
    let (again, outputs_again) = run_prepared(&config, &data).unwrap();
    assert_eq!(all.without_timing(), again.without_timing());
    assert_eq!(outputs, outputs_again);

    config.parallel_strategies = true;
    let (parallel, _) = run_prepared(&config, &data).unwrap();
    assert_eq!(parallel.without_timing().rows, all.without_timing().rows);

    for (i, s) in all.config.strategies.iter().enumerate() {
        let mut one = config.clone();
        one.strategies = vec![*s];
        let (single, _) = run_prepared(&one, &data).unwrap();
        let (mut a, mut b) = (single.rows[0].clone(), all.rows[i].clone());
        a.seconds = 0.0;
        b.seconds = 0.0;
        assert_eq!(a, b, "{}", s.key());
    }
}

#[test]
fn stratified_split_is_exact_for_even_counts() {
    let labels: Vec<usize> = (0..600)
        .map(|i| if i < 300 { 0 } else { 1 + i % 3 })
        .collect();
    let (a, b) = stratified_split(&labels, 4, 99);
    for k in 0..4 {
        let ca = a.iter().filter(|&&i| labels[i] == k).count();
        let cb = b.iter().filter(|&&i| labels[i] == k).count();
        assert_eq!(ca, cb);
    }
}

#[test]
fn cli_pipeline_round_trips() {
    let tmp = tmp_dir("cli");
    let dir = tmp.path();
    let config_path = dir.join("config.json");
    fs::write(
        &config_path,
        serde_json::to_string_pretty(&small_config(dir)).unwrap(),
    )
    .unwrap();
    let cfg = config_path.to_str().unwrap();
    let series = dir.join("series");
    let bits = dir.join("bits");
    let sel = dir.join("sel");

    stdout(&nbselect(&[
        "generate",
        "--config",
        cfg,
        "--out",
        series.to_str().unwrap(),
    ]));
    assert!(series.join("train.json").exists());
    stdout(&nbselect(&[
        "binarize",
        "--config",
        cfg,
        "--series",
        series.to_str().unwrap(),
        "--out",
        bits.to_str().unwrap(),
        "--csv",
    ]));
    let data = bits.join("data");
    assert!(data.join("train.grid.json").exists() && data.join("test.csv").exists());

    let text = stdout(&nbselect(&[
        "select",
        "--config",
        cfg,
        "--data",
        data.to_str().unwrap(),
        "--strategy",
        "forward",
        "--measure",
        "probability",
        "--out",
        sel.to_str().unwrap(),
    ]));
    assert!(text.contains("Forward search"), "{text}");
    assert_eq!(fs::read_dir(sel.join("traces")).unwrap().count(), 1);
    let report: ExperimentReport =
        serde_json::from_str(&fs::read_to_string(sel.join("report.json")).unwrap()).unwrap();
    let subset = sel.join("subsets/forward_probability.json");

    let text = stdout(&nbselect(&[
        "evaluate",
        "--config",
        cfg,
        "--subset",
        subset.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
    ]));
    let error: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((error - report.rows[0].test_error).abs() <= 1e-12);

    // regenerating from the config instead of loading the files agrees too
    let text = stdout(&nbselect(&[
        "evaluate",
        "--config",
        cfg,
        "--subset",
        subset.to_str().unwrap(),
    ]));
    let regenerated: f64 = text.trim().rsplit(' ').next().unwrap().parse().unwrap();
    assert!((regenerated - error).abs() <= 1e-12);
}

#[test]
fn cli_errors_are_reported() {
    let o = nbselect(&["reproduce", "--config", "/nonexistent/config.json"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("/nonexistent/config.json"), "{err}");

    let o = nbselect(&["select", "--strategy", "sideways"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("sideways"));

    let o = nbselect(&["reproduce", "--scale", "2"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("scale"));
}

#[test]
fn strategy_keys_are_unique() {
    let c = ExperimentConfig::bundled();
    let keys: std::collections::BTreeSet<String> =
        c.strategies.iter().map(StrategySpec::key).collect();
    assert_eq!(keys.len(), c.strategies.len());
}
