use approx::assert_abs_diff_eq;
use tempfile::TempDir;

use super::*;
use crate::codes::RecoveryStyle;
use crate::continuous::{IntegratorConfig, Method};

fn run_in(cfg: &ExperimentConfig, dir: &TempDir) -> RunSummary {
    run_experiment(cfg, &RunOptions { out_dir: Some(dir.path().to_path_buf()), jobs: 2 }).unwrap()
}

fn read(dir: &TempDir, name: &str) -> String {
    std::fs::read_to_string(dir.path().join(name)).unwrap()
}

fn column(csv: &str, idx: usize) -> Vec<f64> {
    csv_body(csv)[1..].iter().map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn minimal_document_takes_defaults() {
    let cfg = parse_config(r#"{"kind": "continuous-cycle"}"#).unwrap();
    assert_eq!(cfg, ExperimentConfig::new(ExperimentKind::ContinuousCycle));
    let cfg = parse_config(r#"{"kind": "M-sweep", "m_grid": [3]}"#).unwrap();
    assert_eq!(cfg.kind, ExperimentKind::MSweep);
}

#[test]
fn parse_errors_carry_positions() {
    let issue = parse_config("{\n  \"kind\": \"t0-sweep\",\n  \"t0_gird\": [0.1]\n}").unwrap_err();
    assert_eq!(issue.line, Some(3));
    assert!(issue.column.is_some());
    assert!(issue.message.contains("t0_gird"));
    let (cfg, report) = validate_text("{ \"kind\": ");
    assert!(cfg.is_none() && !report.pass);
}

#[test]
fn validation_examples() {
    let good = ExperimentConfig { tau: Some(1.0), ..ExperimentConfig::new(ExperimentKind::ContinuousCycle) };
    let (_, report) = validate_text(&serde_json::to_string(&good).unwrap());
    assert!(report.pass, "{:?}", report.issues);
    assert_eq!(report.config_hash.as_deref(), Some(good.hash().as_str()));

    let slow = ExperimentConfig { t0: 0.05, t0_min: Some(0.1), ..good.clone() };
    let issues = check(&slow);
    assert!(issues.iter().any(|i| i.severity == Severity::Error && i.message.contains("speed limit")));

    let overflow = ExperimentConfig { t0: 0.3, ..good.clone() };
    let issues = check(&overflow);
    assert!(issues.iter().any(|i| i.message.contains("schedule overflow")));

    let coarse = ExperimentConfig { integrator: IntegratorConfig::with_steps(4), ..good.clone() };
    assert!(!check(&coarse).is_empty());
    let empty_sweep = ExperimentConfig::new(ExperimentKind::T0Sweep);
    assert!(check(&empty_sweep).iter().any(|i| i.field == "t0_grid"));
    let bad_code = ExperimentConfig { code: crate::codes::CodeKind::Repetition(2), ..good };
    assert!(check(&bad_code).iter().any(|i| i.field == "code"));
}

#[test]
fn validate_config_reads_files() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"kind": "delta-limit", "t0_grid": [0.1], "tau": 1.0}"#).unwrap();
    let first = validate_config(&path);
    assert!(first.pass);
    assert_eq!(first, validate_config(&path));
    assert!(!validate_config(&dir.path().join("missing.json")).pass);
}

#[test]
fn every_preset_validates() {
    for p in presets() {
        let issues = check(&p.config);
        assert!(issues.iter().all(|i| i.severity != Severity::Error), "{}: {issues:?}", p.name);
    }
    assert!(preset("rep3-delta-limit").is_some());
    assert!(preset("nope").is_none());
}

#[test]
fn hash_tracks_content_but_not_location() {
    let a = ExperimentConfig::new(ExperimentKind::DiscreteCycle);
    let moved = ExperimentConfig { output: OutputConfig { dir: "elsewhere".into() }, ..a.clone() };
    assert_eq!(a.hash(), moved.hash());
    let reseeded = ExperimentConfig { seed: 7, ..a.clone() };
    assert_ne!(a.hash(), reseeded.hash());
    assert_eq!(a.hash().len(), 64);
}

#[test]
fn random_state_depends_only_on_seed() {
    let code = crate::codes::Code::repetition(3).unwrap();
    let cfg = ExperimentConfig { state: StateChoice::Random, seed: 4, ..ExperimentConfig::new(ExperimentKind::Uncorrected) };
    let a = cfg.logical_state(&code).unwrap();
    assert_eq!(a, cfg.logical_state(&code).unwrap());
    let b = ExperimentConfig { seed: 5, ..cfg }.logical_state(&code).unwrap();
    assert_ne!(a, b);
    assert!(code.code_overlap(&a) > 1.0 - 1e-12);
}

#[test]
fn uncorrected_qubit_follows_the_mixture_law() {
    let dir = TempDir::new().unwrap();
    let cfg = preset("qubit-uncorrected").unwrap().config;
    let summary = run_in(&cfg, &dir);
    assert_eq!(summary.manifest.status, RunStatus::Ok);
    let csv = read(&dir, "trajectory.csv");
    assert!(csv.starts_with("# schema=1\n# config_hash="));
    assert_eq!(csv_body(&csv)[0], TRAJECTORY_COLUMNS.join(","));
    let f = column(&csv, 1);
    assert_eq!(f.len(), 4);
    assert_eq!(f[0], 1.0);
    for (k, v) in f.iter().enumerate() {
        let keep = (-(k as f64)).exp();
        assert_abs_diff_eq!(*v, keep + (1.0 - keep) / 2.0, epsilon = 1e-13);
    }
}

#[test]
fn manifest_and_files_share_the_hash() {
    let dir = TempDir::new().unwrap();
    let cfg = preset("rep3-discrete").unwrap().config;
    let summary = run_in(&cfg, &dir);
    let manifest = read_manifest(dir.path()).unwrap();
    assert_eq!(manifest, summary.manifest);
    assert_eq!(manifest.config_hash, cfg.hash());
    assert_eq!(manifest.files.len(), 2);
    for f in &manifest.files {
        let text = read(&dir, &f.name);
        let embedded = if f.name.ends_with(".csv") {
            csv_config_hash(&text).unwrap().to_string()
        } else {
            let v: serde_json::Value = serde_json::from_str(&text).unwrap();
            v["config_hash"].as_str().unwrap().to_string()
        };
        assert_eq!(embedded, manifest.config_hash, "{}", f.name);
    }
    let report: serde_json::Value = serde_json::from_str(&read(&dir, "report.json")).unwrap();
    let bound = report["fidelity_lower_bound"]["value"].as_f64().unwrap();
    assert!(report["almost_final_fidelity"].as_f64().unwrap() >= bound - 1e-8);
}

#[test]
fn noiseless_t0_sweep_keeps_full_fidelity() {
    let dir = TempDir::new().unwrap();
    let cfg = ExperimentConfig {
        lambda_sq: 0.0,
        t0_grid: vec![0.2, 0.1],
        tau: Some(1.0),
        style: RecoveryStyle::DecodeReencode,
        ..ExperimentConfig::new(ExperimentKind::T0Sweep)
    };
    run_in(&cfg, &dir);
    let csv = read(&dir, "sweep.csv");
    assert_eq!(csv_body(&csv)[0], SWEEP_COLUMNS.join(","));
    for f in column(&csv, 1) {
        assert_abs_diff_eq!(f, 1.0, epsilon = 1e-12);
    }
}

#[test]
fn delta_limit_distances_decrease() {
    let dir = TempDir::new().unwrap();
    let cfg = ExperimentConfig {
        t0_grid: vec![0.2, 0.1, 0.05],
        ..preset("rep3-delta-limit").unwrap().config
    };
    run_in(&cfg, &dir);
    let d = column(&read(&dir, "delta_limit.csv"), 1);
    assert!(d[0] > d[1] && d[1] > d[2], "{d:?}");
}

#[test]
fn reruns_are_byte_identical() {
    let cfg = ExperimentConfig {
        t0_grid: vec![0.2, 0.1],
        ..preset("p5-t0-sweep").unwrap().config
    };
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    run_experiment(&cfg, &RunOptions { out_dir: Some(a.path().into()), jobs: 1 }).unwrap();
    run_experiment(&cfg, &RunOptions { out_dir: Some(b.path().into()), jobs: 3 }).unwrap();
    assert_eq!(read(&a, "sweep.csv"), read(&b, "sweep.csv"));
    assert_eq!(read(&a, "report.json"), read(&b, "report.json"));
}

#[test]
fn failures_map_to_exit_codes() {
    let bad = ExperimentConfig { t0: -1.0, ..ExperimentConfig::new(ExperimentKind::ContinuousCycle) };
    let err = run_experiment(&bad, &RunOptions::default()).unwrap_err();
    assert_eq!(err.exit_code(), 2);

    let dir = TempDir::new().unwrap();
    let unstable = ExperimentConfig {
        lambda_sq: 400.0,
        t0: 0.1,
        tau: Some(1.0),
        integrator: IntegratorConfig { steps_per_pulse: 10, method: Method::Rk4, ..IntegratorConfig::default() },
        style: RecoveryStyle::DecodeReencode,
        ..ExperimentConfig::new(ExperimentKind::ContinuousCycle)
    };
    let err = run_experiment(&unstable, &RunOptions { out_dir: Some(dir.path().into()), jobs: 1 }).unwrap_err();
    assert_eq!(err.exit_code(), 3);
    let manifest = read_manifest(dir.path()).unwrap();
    assert_eq!(manifest.status, RunStatus::NumericalError);
    assert!(manifest.partial && manifest.error.is_some());
}
