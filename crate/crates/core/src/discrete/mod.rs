//! Discrete-time model: error maps interleaved with recovery cycles.

use serde::Serialize;

use crate::codes::{verify_correction_property, CorrectionReport, RecoveryCircuit};
use crate::error::{Error, Result};
use crate::noise::DiscreteErrorMap;
use crate::tensor::{CMatrix, DensityMatrix, PureState};
use crate::tolerance::TOL;

/// A code with its recovery circuit and the noise acting once per step.
#[derive(Debug, Clone)]
pub struct CorrectionCycle {
    pub recovery: RecoveryCircuit,
    /// Free evolution `E` between recoveries (register only).
    pub error: DiscreteErrorMap,
    /// Gate-noise dressing `E'` applied after every recovery block.
    pub gate_noise: Option<DiscreteErrorMap>,
}

impl CorrectionCycle {
    pub fn new(recovery: RecoveryCircuit, error: DiscreteErrorMap, gate_noise: Option<DiscreteErrorMap>) -> Result<Self> {
        let m = recovery.code.n_physical;
        for map in std::iter::once(&error).chain(gate_noise.as_ref()) {
            if let Some(s) = map.max_site().filter(|&s| s >= m) {
                return Err(Error::SiteOutOfRange { index: s, qubits: m });
            }
        }
        Ok(Self { recovery, error, gate_noise })
    }

    /// Error map seen by each recovery: `E'` of the previous block, then `E`.
    pub fn step_error(&self) -> Result<DiscreteErrorMap> {
        match &self.gate_noise {
            Some(g) => g.then(&self.error),
            None => Ok(self.error.clone()),
        }
    }

    /// Correction-property certificate over the standard frame plus `extra`.
    pub fn certify(&self, extra: &[PureState]) -> Result<CorrectionReport> {
        let mut samples = self.recovery.code.frame();
        samples.extend(extra.iter().cloned());
        verify_correction_property(&self.recovery, &self.step_error()?, &samples)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DiscreteRun {
    pub steps: usize,
    pub code: String,
    pub style: String,
    pub include_gate_noise: bool,
    /// Register fidelity right after recovery `k`, for `k = 1..=steps`.
    pub trajectory: Vec<f64>,
    pub almost_final_fidelity: f64,
    pub final_fidelity: f64,
    #[serde(skip)]
    pub final_register: DensityMatrix,
}

fn fidelity(psi: &PureState, rho: &CMatrix) -> f64 {
    let v = psi.amplitudes();
    (v.adjoint() * rho * v)[(0, 0)].re.clamp(0.0, 1.0)
}

fn check_code_state(recovery: &RecoveryCircuit, psi: &PureState) -> Result<()> {
    let code = &recovery.code;
    if psi.layout() != code.layout() {
        return Err(Error::DimensionMismatch { expected: code.layout().total_dim(), found: psi.layout().total_dim() });
    }
    let overlap = code.code_overlap(psi);
    if overlap < 1.0 - TOL.completeness {
        return Err(Error::NotInCodeSpace { overlap });
    }
    Ok(())
}

/// Fidelities `<psi| E^t(P_psi) |psi>` for `t = 0..=steps`.
pub fn run_uncorrected(error: &DiscreteErrorMap, steps: usize, psi: &PureState) -> Result<Vec<f64>> {
    let n = psi.layout().total_qubits();
    let mut rho = psi.projector();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(fidelity(psi, &rho));
    for _ in 0..steps {
        rho = error.apply_matrix(&rho, n)?;
        out.push(fidelity(psi, &rho));
    }
    Ok(out)
}

/// Runs `E'_T R_T E_{T-1} ... R_1 E_0` on `P_psi` with a fresh ancilla block
/// per recovery, where `E_k = E E'_k`.
pub fn run_corrected(cycle: &CorrectionCycle, steps: usize, psi: &PureState) -> Result<DiscreteRun> {
    let recovery = &cycle.recovery;
    check_code_state(recovery, psi)?;
    let m = recovery.code.n_physical;
    let step_error = cycle.step_error()?;
    let mut rho = psi.projector();
    let mut trajectory = Vec::with_capacity(steps);
    for _ in 0..steps {
        rho = step_error.apply_matrix(&rho, m)?;
        rho = recovery.apply_register_channel(&rho);
        trajectory.push(fidelity(psi, &rho));
    }
    let almost_final_fidelity = trajectory.last().copied().unwrap_or(1.0);
    if let Some(g) = &cycle.gate_noise {
        rho = g.apply_matrix(&rho, m)?;
    }
    let final_fidelity = fidelity(psi, &rho);
    Ok(DiscreteRun {
        steps,
        code: recovery.code.name(),
        style: recovery.style.to_string(),
        include_gate_noise: cycle.gate_noise.is_some(),
        trajectory,
        almost_final_fidelity,
        final_fidelity,
        final_register: DensityMatrix::new_unchecked(recovery.code.layout(), rho)?,
    })
}

/// `(1 - mu)^T - B [1 - (1 - mu)^T]`, flagged when negative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FidelityBound {
    pub value: f64,
    pub negative: bool,
}

pub fn fidelity_lower_bound(mu: f64, b: f64, steps: usize) -> Result<FidelityBound> {
    if !(0.0..=1.0).contains(&mu) || b.is_nan() || b < 1.0 {
        return Err(Error::InvalidParameter(format!("need 0 <= mu <= 1 and B >= 1, got mu={mu}, B={b}")));
    }
    let survive = (1.0 - mu).powi(i32::try_from(steps).map_err(|_| Error::InvalidParameter("too many steps".into()))?);
    let value = survive - b * (1.0 - survive);
    Ok(FidelityBound { value, negative: value < 0.0 })
}

/// Per-cycle accuracy that keeps the total error below `epsilon` over `steps` cycles.
pub fn required_mu(epsilon: f64, b: f64, steps: usize) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) || b.is_nan() || b < 1.0 || steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "need 0 <= epsilon < 1, B >= 1, T >= 1; got {epsilon}, {b}, {steps}"
        )));
    }
    Ok(epsilon / ((b + 1.0) * steps as f64))
}
