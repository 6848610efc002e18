use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, ExperimentKind};
use crate::continuous::MIN_STEPS_PER_PULSE;
use crate::pulse::compile_recovery;
use crate::tolerance::TOL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub severity: Severity,
    pub field: String,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub column: Option<usize>,
}

impl Issue {
    fn error(field: &str, message: impl Into<String>) -> Self {
        Self { severity: Severity::Error, field: field.into(), message: message.into(), line: None, column: None }
    }

    fn warning(field: &str, message: impl Into<String>) -> Self {
        Self { severity: Severity::Warning, ..Self::error(field, message) }
    }
}

impl std::fmt::Display for Issue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{tag}: {} (line {l}, column {c}): {}", self.field, self.message),
            _ => write!(f, "{tag}: {}: {}", self.field, self.message),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub pass: bool,
    pub config_hash: Option<String>,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    fn from_issues(config: Option<&ExperimentConfig>, issues: Vec<Issue>) -> Self {
        let pass = issues.iter().all(|i| i.severity != Severity::Error);
        Self { pass, config_hash: config.map(ExperimentConfig::hash), issues }
    }
}

/// Parses a config document; a syntax or schema error becomes a single issue
/// carrying the line and column.
pub fn parse_config(text: &str) -> std::result::Result<ExperimentConfig, Issue> {
    serde_json::from_str(text).map_err(|e| Issue {
        severity: Severity::Error,
        field: "document".into(),
        message: e.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
    })
}

pub fn validate_text(text: &str) -> (Option<ExperimentConfig>, ValidationReport) {
    match parse_config(text) {
        Ok(cfg) => {
            let report = ValidationReport::from_issues(Some(&cfg), check(&cfg));
            (Some(cfg), report)
        }
        Err(issue) => (None, ValidationReport::from_issues(None, vec![issue])),
    }
}

/// Reads and checks a config file without running anything.
pub fn validate_config(path: &Path) -> ValidationReport {
    match std::fs::read_to_string(path) {
        Ok(text) => validate_text(&text).1,
        Err(e) => ValidationReport::from_issues(None, vec![Issue::error("path", format!("{}: {e}", path.display()))]),
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Every precondition the run would otherwise hit midway.
pub fn check(cfg: &ExperimentConfig) -> Vec<Issue> {
    let mut issues = Vec::new();
    let kind = cfg.kind;

    for (i, &l) in cfg.lambda_values().iter().enumerate() {
        if !(l.is_finite() && l >= 0.0) {
            issues.push(Issue::error(&format!("lambda_sq[{i}]"), format!("noise rate {l} must be finite and >= 0")));
        }
    }
    let t0s = cfg.t0_values();
    for (i, &t0) in t0s.iter().enumerate() {
        if !positive(t0) {
            issues.push(Issue::error(&format!("t0[{i}]"), format!("pulse width {t0} must be positive")));
        }
    }
    match kind {
        ExperimentKind::T0Sweep | ExperimentKind::DeltaLimit if cfg.t0_grid.is_empty() => {
            issues.push(Issue::error("t0_grid", "this experiment needs a non-empty t0_grid"));
        }
        ExperimentKind::LambdaSweep if cfg.lambda_sq_grid.is_empty() => {
            issues.push(Issue::error("lambda_sq_grid", "lambda-sweep needs a non-empty lambda_sq_grid"));
        }
        ExperimentKind::MSweep if cfg.m_grid.is_empty() => {
            issues.push(Issue::error("m_grid", "m-sweep needs a non-empty m_grid"));
        }
        ExperimentKind::Uncorrected if cfg.tau.is_none() => {
            issues.push(Issue::error("tau", "uncorrected runs need an explicit tau (time per period)"));
        }
        _ => {}
    }
    if kind == ExperimentKind::DeltaLimit && cfg.tau.is_none() {
        issues.push(Issue::error("tau", "delta-limit compares at a fixed tau; set it explicitly"));
    }
    if let Some(t0_min) = cfg.t0_min {
        if !positive(t0_min) {
            issues.push(Issue::error("t0_min", format!("t0_min = {t0_min} must be positive")));
        } else if let Some(&t0) = t0s.iter().find(|&&t0| t0 < t0_min * (1.0 - 1e-12)) {
            issues.push(Issue::error(
                "t0",
                format!("t0 = {t0} violates the gate speed limit t0 >= t0_min = {t0_min}"),
            ));
        }
    }
    if let Some(tau) = cfg.tau {
        if !positive(tau) {
            issues.push(Issue::error("tau", format!("tau = {tau} must be positive")));
        }
    }
    if cfg.periods == 0 {
        issues.push(Issue::error("periods", "periods must be >= 1"));
    }
    if !positive(cfg.speed_constant) {
        issues.push(Issue::error("speed_constant", "speed constant C must be positive"));
    }
    if let Some(k) = cfg.kappa {
        if !(k.is_finite() && k >= 0.0) {
            issues.push(Issue::error("kappa", format!("kappa = {k} must be finite and >= 0")));
        }
    }
    if !positive(cfg.dyson_tolerance) {
        issues.push(Issue::error("dyson_tolerance", "Dyson tail tolerance must be positive"));
    }
    if cfg.integrator.steps_per_pulse < MIN_STEPS_PER_PULSE {
        issues.push(Issue::error(
            "integrator.steps_per_pulse",
            format!("{} steps per pulse is below the minimum {MIN_STEPS_PER_PULSE}", cfg.integrator.steps_per_pulse),
        ));
    }
    if cfg.integrator.record_every == 0 {
        issues.push(Issue::error("integrator.record_every", "record_every must be >= 1"));
    }
    if kind == ExperimentKind::MSweep && cfg.code != crate::codes::CodeKind::Repetition(3) {
        issues.push(Issue::warning("code", "m-sweep uses repetition-n from m_grid; the code field is ignored"));
    }
    if issues.iter().any(|i| i.severity == Severity::Error) {
        return issues;
    }

    // Structural checks that need the actual circuits.
    let timed = !matches!(kind, ExperimentKind::Uncorrected);
    let t0_min = cfg.effective_t0_min();
    for code_kind in cfg.code_kinds() {
        if !timed {
            if let Err(e) = crate::codes::Code::new(code_kind) {
                issues.push(Issue::error("code", e.to_string()));
            }
            continue;
        }
        let recovery = match cfg.recovery_for(code_kind) {
            Ok(r) => r,
            Err(e) => {
                issues.push(Issue::error("code", format!("{code_kind} with {}: {e}", cfg.style)));
                continue;
            }
        };
        let qubits = recovery.layout().total_qubits();
        if qubits > TOL.max_qubits {
            issues.push(Issue::error("code", format!("{code_kind} needs {qubits} qubits, limit is {}", TOL.max_qubits)));
            continue;
        }
        let depth = recovery.depth();
        if depth == 0 && cfg.tau.is_none() {
            issues.push(Issue::error("tau", format!("{code_kind} has an empty recovery circuit; set tau explicitly")));
            continue;
        }
        for &t0 in &t0s {
            let tau = cfg.tau_for(depth, t0);
            if depth as f64 * t0 > tau * (1.0 + 1e-12) {
                issues.push(Issue::error(
                    "tau",
                    format!("schedule overflow: depth {depth} x t0 {t0} = {} exceeds tau = {tau}", depth as f64 * t0),
                ));
                continue;
            }
            let limit = cfg.speed_constant / t0_min;
            match compile_recovery(&recovery, t0, tau, cfg.shape).and_then(|s| s.check_speed_constraint(cfg.speed_constant)) {
                Ok(report) if report.pulses.iter().any(|p| p.sup > limit * (1.0 + 1e-12)) => issues.push(Issue::warning(
                    "speed_constant",
                    format!("{code_kind} at t0 = {t0}: pulse speed exceeds C / t0_min = {limit:.4} (C = {})", cfg.speed_constant),
                )),
                Ok(_) => {}
                Err(e) => issues.push(Issue::error("schedule", format!("{code_kind} at t0 = {t0}: {e}"))),
            }
        }
    }
    issues
}
