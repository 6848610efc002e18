use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::codes::{build_recovery, Code, CodeKind, RecoveryCircuit, RecoveryStyle};
use crate::continuous::IntegratorConfig;
use crate::error::Result;
use crate::pulse::{PulseShape, DEFAULT_SPEED_CONSTANT};
use crate::tensor::{c, PureState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Uncorrected,
    DiscreteCycle,
    ContinuousCycle,
    T0Sweep,
    #[serde(alias = "M-sweep")]
    MSweep,
    LambdaSweep,
    DysonValidate,
    DeltaLimit,
    TotalFidelity,
}

impl ExperimentKind {
    pub fn is_sweep(self) -> bool {
        matches!(self, ExperimentKind::T0Sweep | ExperimentKind::MSweep | ExperimentKind::LambdaSweep)
    }
}

/// Logical input state, encoded into the configured code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StateChoice {
    Zero,
    One,
    #[default]
    Plus,
    PlusI,
    /// Haar-random logical qubit drawn from the run seed.
    Random,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("qeclab-out")
}
fn default_code() -> CodeKind {
    CodeKind::Repetition(3)
}
fn default_style() -> RecoveryStyle {
    RecoveryStyle::SyndromeCorrect
}
fn default_lambda_sq() -> f64 {
    0.1
}
fn default_t0() -> f64 {
    0.1
}
fn default_periods() -> usize {
    1
}
fn default_speed_constant() -> f64 {
    DEFAULT_SPEED_CONSTANT
}
fn default_dyson_tolerance() -> f64 {
    1e-8
}

/// One experiment, read from a single JSON document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_code")]
    pub code: CodeKind,
    #[serde(default = "default_style")]
    pub style: RecoveryStyle,
    #[serde(default = "default_lambda_sq")]
    pub lambda_sq: f64,
    #[serde(default)]
    pub lambda_sq_grid: Vec<f64>,
    #[serde(default = "default_t0")]
    pub t0: f64,
    #[serde(default)]
    pub t0_grid: Vec<f64>,
    /// Repetition-code sizes for `m-sweep`.
    #[serde(default)]
    pub m_grid: Vec<usize>,
    /// Hardware pulse-width limit; defaults to the narrowest `t0` in use.
    #[serde(default)]
    pub t0_min: Option<f64>,
    /// Working period; when absent the cycle is packed tightly (`depth * t0`).
    #[serde(default)]
    pub tau: Option<f64>,
    /// Number of periods `T`.
    #[serde(default = "default_periods")]
    pub periods: usize,
    #[serde(default = "default_speed_constant")]
    pub speed_constant: f64,
    /// Small-regime ceiling slope; fitted from the run when absent.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default)]
    pub shape: PulseShape,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub state: StateChoice,
    #[serde(default = "default_dyson_tolerance")]
    pub dyson_tolerance: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            code: default_code(),
            style: default_style(),
            lambda_sq: default_lambda_sq(),
            lambda_sq_grid: Vec::new(),
            t0: default_t0(),
            t0_grid: Vec::new(),
            m_grid: Vec::new(),
            t0_min: None,
            tau: None,
            periods: default_periods(),
            speed_constant: default_speed_constant(),
            kappa: None,
            shape: PulseShape::default(),
            integrator: IntegratorConfig::default(),
            state: StateChoice::default(),
            dyson_tolerance: default_dyson_tolerance(),
            seed: 0,
            output: OutputConfig::default(),
        }
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory so
    /// that relocating a run does not change its identity.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let text = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }

    /// Pulse widths the experiment will compile.
    pub fn t0_values(&self) -> Vec<f64> {
        match self.kind {
            ExperimentKind::T0Sweep | ExperimentKind::DeltaLimit => self.t0_grid.clone(),
            _ => vec![self.t0],
        }
    }

    pub fn lambda_values(&self) -> Vec<f64> {
        match self.kind {
            ExperimentKind::LambdaSweep => self.lambda_sq_grid.clone(),
            _ => vec![self.lambda_sq],
        }
    }

    /// Codes the experiment will touch.
    pub fn code_kinds(&self) -> Vec<CodeKind> {
        match self.kind {
            ExperimentKind::MSweep => self.m_grid.iter().map(|&n| CodeKind::Repetition(n)).collect(),
            _ => vec![self.code],
        }
    }

    pub fn effective_t0_min(&self) -> f64 {
        self.t0_min.unwrap_or_else(|| self.t0_values().into_iter().fold(f64::INFINITY, f64::min))
    }

    pub fn tau_for(&self, depth: usize, t0: f64) -> f64 {
        self.tau.unwrap_or(depth as f64 * t0)
    }

    pub fn recovery_for(&self, kind: CodeKind) -> Result<RecoveryCircuit> {
        build_recovery(&Code::new(kind)?, self.style)
    }

    /// The configured logical state encoded into `code`.
    pub fn logical_state(&self, code: &Code) -> Result<PureState> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (alpha, beta) = match self.state {
            StateChoice::Zero => (c(1.0, 0.0), c(0.0, 0.0)),
            StateChoice::One => (c(0.0, 0.0), c(1.0, 0.0)),
            StateChoice::Plus => (c(h, 0.0), c(h, 0.0)),
            StateChoice::PlusI => (c(h, 0.0), c(0.0, h)),
            StateChoice::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let p: f64 = rng.random();
                let phase: f64 = rng.random::<f64>() * std::f64::consts::TAU;
                (c(p.sqrt(), 0.0), c((1.0 - p).sqrt() * phase.cos(), (1.0 - p).sqrt() * phase.sin()))
            }
        };
        code.encode(alpha, beta)
    }
}
