use super::config::{ExperimentConfig, ExperimentKind, StateChoice};
use crate::codes::{CodeKind, RecoveryStyle};

/// Desk-scale noise rates shipped with the presets.
pub const PRESET_LAMBDA_SQ: [f64; 3] = [0.05, 0.1, 0.2];
/// Desk-scale pulse widths shipped with the presets.
pub const PRESET_T0: [f64; 6] = [0.2, 0.1, 0.05, 0.025, 0.0125, 0.01];

#[derive(Debug, Clone)]
pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
}

fn base(kind: ExperimentKind, code: CodeKind, style: RecoveryStyle) -> ExperimentConfig {
    ExperimentConfig { code, style, ..ExperimentConfig::new(kind) }
}

const REP3: CodeKind = CodeKind::Repetition(3);
const P5: CodeKind = CodeKind::Perfect5;

pub fn presets() -> Vec<Preset> {
    use ExperimentKind as K;
    use RecoveryStyle::{DecodeReencode as DR, SyndromeCorrect as SC};
    vec![
        Preset {
            name: "qubit-uncorrected",
            description: "bare qubit under replacement noise, three unit periods",
            config: ExperimentConfig {
                lambda_sq: 1.0,
                tau: Some(1.0),
                periods: 3,
                state: StateChoice::Zero,
                ..base(K::Uncorrected, CodeKind::Repetition(1), DR)
            },
        },
        Preset {
            name: "rep3-discrete",
            description: "repetition-3 syndrome-correct, delta-pulse cycles, 20 periods",
            config: ExperimentConfig { lambda_sq: 0.05, t0: 0.05, periods: 20, ..base(K::DiscreteCycle, REP3, SC) },
        },
        Preset {
            name: "p5-discrete",
            description: "perfect-5 syndrome-correct (4 ancillas), delta-pulse cycles, 20 periods",
            config: ExperimentConfig { lambda_sq: 0.01, t0: 0.01, periods: 20, ..base(K::DiscreteCycle, P5, SC) },
        },
        Preset {
            name: "rep3-continuous",
            description: "repetition-3 syndrome-correct (2 ancillas), one continuous period at tau = 1",
            config: ExperimentConfig { lambda_sq: 0.1, t0: 0.1, tau: Some(1.0), ..base(K::ContinuousCycle, REP3, SC) },
        },
        Preset {
            name: "p5-continuous",
            description: "perfect-5 decode-reencode, one continuous period at tau = 1",
            config: ExperimentConfig { lambda_sq: 0.1, t0: 0.1, tau: Some(1.0), ..base(K::ContinuousCycle, P5, DR) },
        },
        Preset {
            name: "p5-t0-sweep",
            description: "perfect-5 decode-reencode error bounds over the t0 grid at tau = 1",
            config: ExperimentConfig {
                lambda_sq: 0.1,
                t0_grid: PRESET_T0.to_vec(),
                tau: Some(1.0),
                ..base(K::T0Sweep, P5, DR)
            },
        },
        Preset {
            name: "p5-ceiling",
            description: "perfect-5 decode-reencode, tightly packed cycles over the t0 grid (fidelity ceiling)",
            config: ExperimentConfig { lambda_sq: 0.2, t0_grid: PRESET_T0.to_vec(), ..base(K::T0Sweep, P5, DR) },
        },
        Preset {
            name: "rep3-lambda-sweep",
            description: "repetition-3 decode-reencode over the noise-rate grid at tau = 1",
            config: ExperimentConfig {
                lambda_sq_grid: PRESET_LAMBDA_SQ.to_vec(),
                t0: 0.1,
                tau: Some(1.0),
                ..base(K::LambdaSweep, REP3, DR)
            },
        },
        Preset {
            name: "rep-m-sweep",
            description: "repetition-n decode-reencode for n = 1, 3, 5, 7 at tau = 1",
            config: ExperimentConfig {
                m_grid: vec![1, 3, 5, 7],
                lambda_sq: 0.05,
                t0: 0.05,
                tau: Some(1.0),
                ..base(K::MSweep, REP3, DR)
            },
        },
        Preset {
            name: "p5-dyson",
            description: "Dyson series against direct integration, perfect-5 decode-reencode, lambda^2 M tau = 0.5",
            config: ExperimentConfig { lambda_sq: 0.1, t0: 0.1, tau: Some(1.0), ..base(K::DysonValidate, P5, DR) },
        },
        Preset {
            name: "rep3-delta-limit",
            description: "cycle-map distance to the delta-pulse cycle as t0 shrinks, repetition-3 syndrome-correct",
            config: ExperimentConfig {
                lambda_sq: 0.1,
                t0_grid: vec![0.2, 0.1, 0.05, 0.025, 0.0125],
                tau: Some(1.0),
                integrator: crate::continuous::IntegratorConfig::with_steps(20),
                ..base(K::DeltaLimit, REP3, SC)
            },
        },
        Preset {
            name: "rep3-total-fidelity",
            description: "ten tightly packed repetition-3 syndrome-correct periods",
            config: ExperimentConfig {
                lambda_sq: 0.05,
                t0: 0.05,
                periods: 10,
                state: StateChoice::Zero,
                integrator: crate::continuous::IntegratorConfig::with_steps(20),
                ..base(K::TotalFidelity, REP3, SC)
            },
        },
    ]
}

pub fn preset(name: &str) -> Option<Preset> {
    presets().into_iter().find(|p| p.name == name)
}
