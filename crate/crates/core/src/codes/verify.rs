use rayon::prelude::*;
use serde::Serialize;

use super::circuit::RecoveryCircuit;
use super::code::Code;
use crate::error::{Error, Result};
use crate::noise::DiscreteErrorMap;
use crate::tensor::{partial_trace, tensor_product, trace_norm, CMatrix, DensityMatrix, PureState};
use crate::tolerance::TOL;

/// `B_est` above this is reported as flagged.
pub const B_FLAG_THRESHOLD: f64 = 10.0;

/// Accuracies below this count as exact correction when extracting `B_est`.
const EXACT_MU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SampleReport {
    pub fidelity: f64,
    /// Trace norm of `out - F_1 P_psi (x) rho_A`.
    pub residual_norm: f64,
}

/// Worst case of the correction property over a sample set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrectionReport {
    pub mu: f64,
    pub b_est: f64,
    pub fidelity_f1: f64,
    pub b_flagged: bool,
    pub samples: Vec<SampleReport>,
}

impl CorrectionReport {
    fn from_samples(raw: Vec<(f64, CMatrix, CMatrix, CMatrix)>) -> Result<Self> {
        let f1 = raw.iter().map(|r| r.0).fold(1.0, f64::min).clamp(0.0, 1.0);
        let mu = 1.0 - f1;
        let samples = raw
            .into_iter()
            .map(|(fidelity, out, p_psi, rho_a)| {
                let sigma = out - tensor_product(&p_psi, &rho_a)? * crate::tensor::c(f1, 0.0);
                Ok(SampleReport { fidelity, residual_norm: trace_norm(&sigma)? })
            })
            .collect::<Result<Vec<_>>>()?;
        let worst = samples.iter().map(|s| s.residual_norm).fold(0.0, f64::max);
        let (b_est, b_flagged) = if mu <= EXACT_MU {
            (1.0, worst > 1e-9)
        } else {
            let b = (worst / mu).max(1.0);
            (b, b > B_FLAG_THRESHOLD)
        };
        Ok(Self { mu, b_est, fidelity_f1: f1, b_flagged, samples })
    }
}

/// Runs `R . E` on `P_psi (x) |0..0><0..0|_A` for every sample and extracts
/// the accuracy `mu = 1 - min F` and the residual constant `B_est`.
pub fn verify_correction_property(
    recovery: &RecoveryCircuit,
    error: &DiscreteErrorMap,
    samples: &[PureState],
) -> Result<CorrectionReport> {
    let code = &recovery.code;
    let layout = recovery.layout();
    for psi in samples {
        if psi.layout() != code.layout() {
            return Err(Error::DimensionMismatch {
                expected: code.layout().total_dim(),
                found: psi.layout().total_dim(),
            });
        }
        let overlap = code.code_overlap(psi);
        if overlap < 1.0 - TOL.completeness {
            return Err(Error::NotInCodeSpace { overlap });
        }
    }
    let register_only = error.max_site().is_none_or(|s| s < layout.register_qubits);
    let iso = register_only.then(|| recovery.isometry());
    let reg_sites = layout.register_sites();
    let anc_sites = layout.ancilla_sites();
    let n = layout.total_qubits();

    let raw = samples
        .par_iter()
        .map(|psi| {
            let p_psi = psi.projector();
            let out = match &iso {
                Some(v) => {
                    let damaged = error.apply_matrix(&p_psi, layout.register_qubits)?;
                    v * damaged * v.adjoint()
                }
                None => {
                    let input = DensityMatrix::from_pure(psi).with_fresh_ancillas(layout.ancilla_qubits)?;
                    let mut m = error.apply_matrix(input.data(), n)?;
                    recovery.circuit.conjugate(&mut m)?;
                    m
                }
            };
            let rho_reg = partial_trace(&out, n, &anc_sites)?;
            let fidelity = (psi.amplitudes().adjoint() * &rho_reg * psi.amplitudes())[(0, 0)].re;
            let rho_a = partial_trace(&out, n, &reg_sites)?;
            Ok((fidelity, out, p_psi, rho_a))
        })
        .collect::<Result<Vec<_>>>()?;
    CorrectionReport::from_samples(raw)
}

/// Result of reading a logical bit off a register state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogicalReadout {
    pub bit: u8,
    /// Probability of `bit` renormalized over the code subspace.
    pub confidence: f64,
    /// `<0_L|rho|0_L> + <1_L|rho|1_L>`.
    pub code_weight: f64,
    pub tie: bool,
    pub leaked: bool,
}

pub fn logical_readout(rho: &DensityMatrix, code: &Code) -> Result<LogicalReadout> {
    if rho.layout().total_dim() != code.layout().total_dim() {
        return Err(Error::DimensionMismatch {
            expected: code.layout().total_dim(),
            found: rho.layout().total_dim(),
        });
    }
    let expect = |s: &PureState| (s.amplitudes().adjoint() * rho.data() * s.amplitudes())[(0, 0)].re;
    let (p0, p1) = (expect(&code.logical_zero), expect(&code.logical_one));
    let weight = p0 + p1;
    let tie = (p0 - p1).abs() <= TOL.normalization;
    let bit = u8::from(!tie && p1 > p0);
    let p = if bit == 1 { p1 } else { p0 };
    let confidence = if weight > 0.0 { p / weight } else { 0.5 };
    Ok(LogicalReadout { bit, confidence, code_weight: weight, tie, leaked: weight < 0.5 })
}
