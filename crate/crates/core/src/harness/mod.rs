//! Config-driven experiment runner: validation, sweeps, CSV/JSON artifacts
//! and a reproducibility manifest.

mod config;
mod output;
mod presets;
mod validate;

use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde_json::{json, Value};

pub use config::{ExperimentConfig, ExperimentKind, OutputConfig, StateChoice};
pub use output::{
    csv_body, csv_config_hash, CsvTable, FileRecord, Manifest, RunStatus, CSV_SCHEMA, SWEEP_COLUMNS, TRAJECTORY_COLUMNS,
};
pub use presets::{preset, presets, Preset, PRESET_LAMBDA_SQ, PRESET_T0};
pub use validate::{check, parse_config, validate_config, validate_text, Issue, Severity, ValidationReport};

use crate::bounds::{
    bound_report, bound_report_from, fidelity_ceiling, fit_kappa, integrate_period, linear_fit, t_max_estimate,
    total_fidelity_model, BoundReport,
};
use crate::codes::{Code, CodeKind};
use crate::continuous::{
    check_recovery_condition, cycle_map_distance, dyson_fidelity, integrate_master_equation, run_periods, Truncation,
};
use crate::discrete::{fidelity_lower_bound, run_corrected, CorrectionCycle};
use crate::error::{Error, Result};
use crate::noise::{DiscreteErrorMap, LindbladGenerator};
use crate::pulse::compile_recovery;
use crate::tensor::{CMatrix, DensityMatrix, PureState};

/// Stated in every sweep report that reaches the saturated regime.
pub const SATURATION_NOTE: &str =
    "the large-Mq regime is approached with large lambda^2 t0 at desk scale, not reproduced asymptotically";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Overrides `output.dir` from the config.
    pub out_dir: Option<PathBuf>,
    /// Worker threads for sweep points; 0 uses every core.
    pub jobs: usize,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration ({} issue(s))", .0.len())]
    Config(Vec<Issue>),
    #[error("numerical failure: {message}")]
    Numerical { message: String, summary: Box<RunSummary> },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl HarnessError {
    /// 2 for configuration errors, 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical { .. } => 3,
            HarnessError::Io(_) => 1,
        }
    }
}

/// Tables and JSON reports produced by one experiment kind.
#[derive(Debug, Default)]
struct Artifacts {
    tables: Vec<CsvTable>,
    reports: Vec<(String, Value)>,
    error: Option<String>,
}

impl Artifacts {
    fn failed(e: Error) -> Self {
        Self { error: Some(e.to_string()), ..Self::default() }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Runs a validated experiment and writes its artifacts plus `manifest.json`.
pub fn run_experiment(cfg: &ExperimentConfig, options: &RunOptions) -> std::result::Result<RunSummary, HarnessError> {
    let issues = check(cfg);
    if issues.iter().any(|i| i.severity == Severity::Error) {
        return Err(HarnessError::Config(issues));
    }
    let out_dir = options.out_dir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    std::fs::create_dir_all(&out_dir)?;
    let started_unix_ms = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis());
    let clock = Instant::now();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if options.jobs > 0 {
        builder = builder.num_threads(options.jobs);
    }
    let pool = builder.build().map_err(std::io::Error::other)?;
    let artifacts = pool.install(|| dispatch(cfg)).unwrap_or_else(Artifacts::failed);

    let hash = cfg.hash();
    let mut files = Vec::new();
    for table in &artifacts.tables {
        files.push(output::write_file(&out_dir, &format!("{}.csv", table.name), &table.render(&hash))?);
    }
    for (name, value) in &artifacts.reports {
        let mut value = value.clone();
        if let Value::Object(map) = &mut value {
            map.insert("config_hash".into(), Value::String(hash.clone()));
        }
        let text = serde_json::to_string_pretty(&value).expect("json value serializes") + "\n";
        files.push(output::write_file(&out_dir, &format!("{name}.json"), &text)?);
    }
    let partial = artifacts.error.is_some();
    let manifest = Manifest {
        tool: "qeclab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_hash: hash,
        config: to_value(cfg),
        jobs: pool.current_num_threads(),
        status: if partial { RunStatus::NumericalError } else { RunStatus::Ok },
        partial,
        error: artifacts.error.clone(),
        files,
        started_unix_ms,
        wall_time_s: clock.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    std::fs::write(out_dir.join("manifest.json"), text)?;
    let summary = RunSummary { out_dir, manifest };
    match artifacts.error {
        Some(message) => Err(HarnessError::Numerical { message, summary: Box::new(summary) }),
        None => Ok(summary),
    }
}

/// Reads `manifest.json` from a run directory.
pub fn read_manifest(dir: &Path) -> std::io::Result<Manifest> {
    let text = std::fs::read_to_string(dir.join("manifest.json"))?;
    serde_json::from_str(&text).map_err(std::io::Error::other)
}

fn dispatch(cfg: &ExperimentConfig) -> Result<Artifacts> {
    match cfg.kind {
        ExperimentKind::Uncorrected => uncorrected(cfg),
        ExperimentKind::DiscreteCycle => discrete_cycle(cfg),
        ExperimentKind::ContinuousCycle => continuous_cycle(cfg),
        ExperimentKind::T0Sweep | ExperimentKind::MSweep | ExperimentKind::LambdaSweep => sweep(cfg),
        ExperimentKind::DysonValidate => dyson_validate(cfg),
        ExperimentKind::DeltaLimit => delta_limit(cfg),
        ExperimentKind::TotalFidelity => total_fidelity(cfg),
    }
}

fn fmt(v: f64) -> String {
    v.to_string()
}

fn state_row(t: f64, psi: &PureState, rho: &CMatrix, layout: crate::tensor::HilbertLayout) -> Result<Vec<String>> {
    let state = DensityMatrix::new_unchecked(layout, rho.clone())?;
    let v = psi.amplitudes();
    let fidelity = (v.adjoint() * rho * v)[(0, 0)].re;
    Ok(vec![fmt(t), fmt(fidelity), fmt(state.trace()), fmt(state.purity()), fmt(state.min_eigenvalue()?)])
}

fn uncorrected(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let code = Code::new(cfg.code)?;
    let psi = cfg.logical_state(&code)?;
    let tau = cfg.tau.ok_or_else(|| Error::InvalidParameter("tau is required".into()))?;
    let layout = code.layout();
    let lindblad = LindbladGenerator::new(cfg.lambda_sq, layout)?;
    let mut table = CsvTable::new("trajectory", &TRAJECTORY_COLUMNS);
    let mut rho = psi.projector();
    table.push(state_row(0.0, &psi, &rho, layout)?);
    for k in 1..=cfg.periods {
        rho = lindblad.evolve_matrix(&rho, tau);
        table.push(state_row(k as f64 * tau, &psi, &rho, layout)?);
    }
    let report = json!({
        "kind": cfg.kind,
        "code": code.name(),
        "m": code.n_physical,
        "lambda_sq": cfg.lambda_sq,
        "tau": tau,
        "periods": cfg.periods,
        "final_fidelity": table.rows.last().map(|r| r[1].clone()),
    });
    Ok(Artifacts { tables: vec![table], reports: vec![("report".into(), report)], error: None })
}

fn discrete_cycle(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let recovery = cfg.recovery_for(cfg.code)?;
    let psi = cfg.logical_state(&recovery.code)?;
    let tau = cfg.tau_for(recovery.depth(), cfg.t0);
    let m = recovery.code.n_physical;
    let error = DiscreteErrorMap::register_noise(cfg.lambda_sq, tau, m)?;
    let cycle = CorrectionCycle::new(recovery.clone(), error, None)?;
    let certificate = cycle.certify(std::slice::from_ref(&psi))?;
    let step = cycle.step_error()?;
    let layout = recovery.code.layout();
    let mut table = CsvTable::new("trajectory", &TRAJECTORY_COLUMNS);
    let mut rho = psi.projector();
    table.push(state_row(0.0, &psi, &rho, layout)?);
    for k in 1..=cfg.periods {
        rho = recovery.apply_register_channel(&step.apply_matrix(&rho, m)?);
        table.push(state_row(k as f64 * tau, &psi, &rho, layout)?);
    }
    let run = run_corrected(&cycle, cfg.periods, &psi)?;
    let bound = fidelity_lower_bound(certificate.mu, certificate.b_est, cfg.periods)?;
    let report = json!({
        "kind": cfg.kind,
        "code": recovery.code.name(),
        "style": recovery.style,
        "lambda_sq": cfg.lambda_sq,
        "tau": tau,
        "periods": cfg.periods,
        "certificate": certificate,
        "fidelity_lower_bound": bound,
        "almost_final_fidelity": run.almost_final_fidelity,
        "final_fidelity": run.final_fidelity,
    });
    Ok(Artifacts { tables: vec![table], reports: vec![("report".into(), report)], error: None })
}

fn continuous_cycle(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let recovery = cfg.recovery_for(cfg.code)?;
    let psi = cfg.logical_state(&recovery.code)?;
    let tau = cfg.tau_for(recovery.depth(), cfg.t0);
    let schedule = compile_recovery(&recovery, cfg.t0, tau, cfg.shape)?;
    let traj = integrate_period(&schedule, &psi, cfg.lambda_sq, &cfg.integrator)?;
    let bounds = bound_report_from(
        &schedule,
        &psi,
        cfg.lambda_sq,
        cfg.speed_constant,
        cfg.kappa,
        cfg.integrator.steps_per_pulse,
        &traj,
    )?;
    let mut table = CsvTable::new("trajectory", &TRAJECTORY_COLUMNS);
    let n = traj.points.len();
    for (i, p) in traj.points.iter().enumerate() {
        if i % cfg.integrator.record_every == 0 || i + 1 == n {
            let f = p.fidelity.map(fmt).unwrap_or_default();
            table.push(vec![fmt(p.t), f, fmt(p.trace), fmt(p.purity), fmt(p.min_eig)]);
        }
    }
    let m = recovery.code.n_physical;
    let ceiling = match cfg.kappa {
        Some(k) => Some(fidelity_ceiling(m, bounds.q, k)?),
        None => None,
    };
    let volume = (cfg.periods * m) as f64;
    let report = json!({
        "kind": cfg.kind,
        "code": recovery.code.name(),
        "style": recovery.style,
        "t0": cfg.t0,
        "shape": cfg.shape,
        "recovery_condition": check_recovery_condition(&schedule)?,
        "speed": schedule.check_speed_constraint(cfg.speed_constant)?,
        "ceiling": ceiling,
        "t_max_estimate": t_max_estimate(cfg.lambda_sq, schedule.t0_min).ok(),
        "volume": volume,
        "volume_convention": "V = periods x register qubits",
        "total_fidelity_model": total_fidelity_model(cfg.lambda_sq, cfg.t0, volume),
        "bounds": bounds,
    });
    Ok(Artifacts { tables: vec![table], reports: vec![("report".into(), report)], error: None })
}

/// One point of a t0, lambda or M sweep.
#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    param: f64,
    code: CodeKind,
    lambda_sq: f64,
    t0: f64,
}

fn sweep_points(cfg: &ExperimentConfig) -> Vec<SweepPoint> {
    match cfg.kind {
        ExperimentKind::T0Sweep => cfg
            .t0_grid
            .iter()
            .map(|&t0| SweepPoint { param: t0, code: cfg.code, lambda_sq: cfg.lambda_sq, t0 })
            .collect(),
        ExperimentKind::LambdaSweep => cfg
            .lambda_sq_grid
            .iter()
            .map(|&l| SweepPoint { param: l, code: cfg.code, lambda_sq: l, t0: cfg.t0 })
            .collect(),
        _ => cfg
            .m_grid
            .iter()
            .map(|&n| SweepPoint { param: n as f64, code: CodeKind::Repetition(n), lambda_sq: cfg.lambda_sq, t0: cfg.t0 })
            .collect(),
    }
}

fn sweep_point(cfg: &ExperimentConfig, p: SweepPoint) -> Result<BoundReport> {
    let recovery = cfg.recovery_for(p.code)?;
    let psi = cfg.logical_state(&recovery.code)?;
    let tau = cfg.tau_for(recovery.depth(), p.t0);
    let schedule = compile_recovery(&recovery, p.t0, tau, cfg.shape)?;
    bound_report(&schedule, &psi, p.lambda_sq, cfg.speed_constant, cfg.kappa, &cfg.integrator)
}

fn sweep(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let points = sweep_points(cfg);
    let results: Vec<Result<BoundReport>> = points.par_iter().map(|&p| sweep_point(cfg, p)).collect();
    let mut table = CsvTable::new("sweep", &SWEEP_COLUMNS);
    let mut reports = Vec::new();
    let mut error = None;
    for (p, r) in points.iter().zip(results) {
        match r {
            Ok(b) => {
                table.push(vec![
                    fmt(p.param),
                    fmt(1.0 - b.e_tau_measured),
                    fmt(b.e_tau_measured),
                    fmt(b.e_tau_lower_bound),
                    fmt(b.mq),
                    b.regime.to_string(),
                ]);
                reports.push(b);
            }
            Err(e) => {
                table.partial = true;
                error.get_or_insert_with(|| format!("sweep point {}: {e}", p.param));
            }
        }
    }
    let kappa_fitted = fit_kappa(&reports.iter().map(|b| (b.mq, 1.0 - b.e_tau_measured)).collect::<Vec<_>>());
    let kappa_used = cfg.kappa.or(kappa_fitted);
    let ceilings = match kappa_used {
        Some(k) => reports.iter().map(|b| fidelity_ceiling(b.m, b.q, k).map(Some)).collect::<Result<Vec<_>>>()?,
        None => vec![None; reports.len()],
    };
    let saturated = reports.iter().any(|b| b.regime == crate::bounds::Regime::Large);
    let report = json!({
        "kind": cfg.kind,
        "style": cfg.style,
        "kappa_fitted": kappa_fitted,
        "kappa_used": kappa_used,
        "note": saturated.then_some(SATURATION_NOTE),
        "ceilings": ceilings,
        "points": reports,
    });
    Ok(Artifacts { tables: vec![table], reports: vec![("report".into(), report)], error })
}

const FRAME_NAMES: [&str; 4] = ["zero", "one", "plus", "plus-i"];

fn dyson_validate(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let recovery = cfg.recovery_for(cfg.code)?;
    let tau = cfg.tau_for(recovery.depth(), cfg.t0);
    let schedule = compile_recovery(&recovery, cfg.t0, tau, cfg.shape)?;
    let layout = schedule.layout;
    let lindblad = LindbladGenerator::new(cfg.lambda_sq, layout)?;
    let quiet = crate::continuous::IntegratorConfig { record_every: usize::MAX, ..cfg.integrator };
    let frame = recovery.code.frame();
    let rows = frame
        .par_iter()
        .map(|psi| {
            let d = dyson_fidelity(
                &schedule,
                cfg.lambda_sq,
                psi,
                tau,
                Truncation::Auto,
                cfg.dyson_tolerance,
                cfg.integrator.steps_per_pulse,
            )?;
            let rho0 = DensityMatrix::from_pure(psi).with_fresh_ancillas(layout.ancilla_qubits)?;
            let direct = integrate_master_equation(&schedule, &lindblad, &rho0, Some(psi), &quiet)?;
            let f = direct.last().fidelity.unwrap_or(f64::NAN);
            Ok((d, f))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut table = CsvTable::new("dyson", &["state", "dyson", "direct", "gap", "order", "tail"]);
    let mut max_gap: f64 = 0.0;
    for (name, (d, f)) in FRAME_NAMES.iter().zip(&rows) {
        let gap = (d.fidelity - f).abs();
        max_gap = max_gap.max(gap);
        table.push(vec![name.to_string(), fmt(d.fidelity), fmt(*f), fmt(gap), d.order.to_string(), fmt(d.tail)]);
    }
    let a = cfg.lambda_sq * recovery.code.n_physical as f64 * tau;
    let report = json!({
        "kind": cfg.kind,
        "code": recovery.code.name(),
        "style": recovery.style,
        "tau": tau,
        "lambda_sq_m_tau": a,
        "tail_tolerance": cfg.dyson_tolerance,
        "max_gap": max_gap,
    });
    Ok(Artifacts { tables: vec![table], reports: vec![("report".into(), report)], error: None })
}

fn delta_limit(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let recovery = cfg.recovery_for(cfg.code)?;
    let tau = cfg.tau.ok_or_else(|| Error::InvalidParameter("tau is required".into()))?;
    let distances = cfg
        .t0_grid
        .par_iter()
        .map(|&t0| cycle_map_distance(&recovery, cfg.lambda_sq, t0, tau, cfg.shape, &cfg.integrator))
        .collect::<Result<Vec<_>>>()?;
    let mut table = CsvTable::new("delta_limit", &["t0", "distance"]);
    for (t0, d) in cfg.t0_grid.iter().zip(&distances) {
        table.push(vec![fmt(*t0), fmt(*d)]);
    }
    let logs: (Vec<f64>, Vec<f64>) = cfg.t0_grid.iter().zip(&distances).map(|(t, d)| (t.ln(), d.ln())).unzip();
    let fit = distances.iter().all(|&d| d > 0.0).then(|| linear_fit(&logs.0, &logs.1).ok()).flatten();
    let mut order: Vec<(f64, f64)> = cfg.t0_grid.iter().copied().zip(distances.iter().copied()).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0));
    let monotone = order.windows(2).all(|w| w[0].1 < w[1].1);
    let report = json!({
        "kind": cfg.kind,
        "code": recovery.code.name(),
        "style": recovery.style,
        "tau": tau,
        "lambda_sq": cfg.lambda_sq,
        "loglog_fit": fit,
        "monotone": monotone,
    });
    Ok(Artifacts { tables: vec![table], reports: vec![("report".into(), report)], error: None })
}

fn total_fidelity(cfg: &ExperimentConfig) -> Result<Artifacts> {
    let recovery = cfg.recovery_for(cfg.code)?;
    let psi = cfg.logical_state(&recovery.code)?;
    let tau = cfg.tau_for(recovery.depth(), cfg.t0);
    let schedule = compile_recovery(&recovery, cfg.t0, tau, cfg.shape)?;
    let fidelities = run_periods(&schedule, cfg.lambda_sq, &psi, cfg.periods, &cfg.integrator)?;
    let m = recovery.code.n_physical;
    let mut table = CsvTable::new("total_fidelity", &["periods", "fidelity", "log_fidelity", "model"]);
    for (k, f) in fidelities.iter().enumerate() {
        let t = (k + 1) as f64;
        table.push(vec![(k + 1).to_string(), fmt(*f), fmt(f.ln()), fmt(total_fidelity_model(cfg.lambda_sq, cfg.t0, t * m as f64))]);
    }
    let ts: Vec<f64> = (1..=fidelities.len()).map(|t| t as f64).collect();
    let logs: Vec<f64> = fidelities.iter().map(|f| f.ln()).collect();
    let fit = linear_fit(&ts, &logs).ok();
    let q = cfg.lambda_sq * cfg.t0;
    let report = json!({
        "kind": cfg.kind,
        "code": recovery.code.name(),
        "style": recovery.style,
        "tau": tau,
        "lambda_sq_t0": q,
        "fit": fit,
        "slope_over_lambda_sq_t0": fit.filter(|_| q > 0.0).map(|f| f.slope / q),
        "model_slope": -q * m as f64,
        "volume_convention": "V = periods x register qubits",
    });
    Ok(Artifacts { tables: vec![table], reports: vec![("report".into(), report)], error: None })
}

#[cfg(test)]
mod tests;
