mod common;

use ifpc_cli::pipeline::{run_pipeline, RunOptions, Stage};
use ifpc_cli::plant::{generate_demo_plant, DEMO_SEED};
use ifpc_cli::CliError;
use ifpc_core::analysis::MANIFEST_FILE;

fn opts(dir: &std::path::Path, until: Stage, resume: bool) -> RunOptions {
    RunOptions { until, resume, out_dir: dir.to_path_buf() }
}

fn manifest_bytes(dir: &std::path::Path) -> Vec<u8> {
    std::fs::read(dir.join(MANIFEST_FILE)).unwrap()
}

#[test]
fn full_run_then_resume() {
    let doc = generate_demo_plant(DEMO_SEED);
    let config = common::small_config(3);
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&doc, &config, &opts(dir.path(), Stage::Report, false)).unwrap();
    let paths: Vec<&str> = out.manifest.files.iter().map(|e| e.path.as_str()).collect();
    for want in [
        "ga/centralized_history.csv",
        "ga/kt_history.csv",
        "curves/error.csv",
        "curves/mu.csv",
        "curves/sigma_tc.csv",
        "curves/sigma_ka_bar.csv",
        "steps/V.csv",
        "metrics.json",
        "stages/synth.json",
        "stages/simulate.json",
    ] {
        assert!(paths.contains(&want), "missing {want} in {paths:?}");
    }
    let metrics: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["centralized"]["augmented_order"], 17);
    assert_eq!(metrics["orders"]["ka_bar_full"], 21);
    assert_eq!(metrics["orders"]["k_t_reduced"], 4);
    assert_eq!(metrics["interface"]["selected"], serde_json::json!(["Fx"]));
    assert!(metrics["hinf_error_full"].as_f64().unwrap() < 1.0);
    for e in &out.manifest.files {
        let bytes = std::fs::read(dir.path().join(&e.path)).unwrap();
        assert_eq!(bytes.len() as u64, e.bytes, "{}", e.path);
    }

    let first = manifest_bytes(dir.path());
    let started = std::time::Instant::now();
    run_pipeline(&doc, &config, &opts(dir.path(), Stage::Report, true)).unwrap();
    let resumed = started.elapsed();
    assert_eq!(manifest_bytes(dir.path()), first);
    // reused stages skip the GA entirely
    assert!(resumed.as_secs_f64() < 5.0, "{resumed:?}");
}

#[test]
fn partial_stages_then_continue() {
    let doc = generate_demo_plant(DEMO_SEED);
    let config = common::small_config(4);
    let dir = tempfile::tempdir().unwrap();
    let out = run_pipeline(&doc, &config, &opts(dir.path(), Stage::Synth, false)).unwrap();
    assert!(out.synth.is_some() && out.partition.is_none());
    assert!(!dir.path().join("stages/partition.json").exists());
    let out = run_pipeline(&doc, &config, &opts(dir.path(), Stage::Report, true)).unwrap();
    assert!(out.simulate.is_some());

    let fresh = tempfile::tempdir().unwrap();
    run_pipeline(&doc, &config, &opts(fresh.path(), Stage::Report, false)).unwrap();
    assert_eq!(manifest_bytes(dir.path()), manifest_bytes(fresh.path()));
}

#[test]
fn changed_config_invalidates_stages() {
    let doc = generate_demo_plant(DEMO_SEED);
    let dir = tempfile::tempdir().unwrap();
    let a = run_pipeline(&doc, &common::small_config(5), &opts(dir.path(), Stage::Synth, false)).unwrap();
    let mut changed = common::small_config(5);
    changed.nominal_w2 = 0.08;
    let b = run_pipeline(&doc, &changed, &opts(dir.path(), Stage::Synth, true)).unwrap();
    assert_ne!(a.synth, b.synth);
}

#[test]
fn failed_stage_is_named_and_reported() {
    let doc = generate_demo_plant(DEMO_SEED);
    let mut config = common::small_config(6);
    // every K_T candidate now counts as a failure
    config.kt_ga.failure_penalty = 0.0;
    let dir = tempfile::tempdir().unwrap();
    let err = run_pipeline(&doc, &config, &opts(dir.path(), Stage::Report, false)).unwrap_err();
    match &err {
        CliError::Stage { stage, .. } => assert_eq!(*stage, "partition"),
        e => panic!("unexpected {e}"),
    }
    assert!(err.to_string().contains("partition"));
    let manifest = std::fs::read_to_string(dir.path().join(MANIFEST_FILE)).unwrap();
    assert!(manifest.contains("stages/synth.json"));
    assert!(manifest.contains("ga/centralized_history.csv"));
    assert!(!manifest.contains("stages/partition.json"));
}

#[test]
fn invalid_config_rejected_before_running() {
    let doc = generate_demo_plant(DEMO_SEED);
    let mut config = common::small_config(1);
    config.engine_states.push("T5".into());
    let dir = tempfile::tempdir().unwrap();
    let err = run_pipeline(&doc, &config, &opts(dir.path(), Stage::Report, false)).unwrap_err();
    assert!(err.to_string().contains("T5"));
    assert!(!dir.path().join(MANIFEST_FILE).exists());
}
