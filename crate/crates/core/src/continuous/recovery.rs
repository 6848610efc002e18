use rayon::prelude::*;
use serde::Serialize;

use super::{integrate_master_equation, IntegratorConfig, PulseKernels};
use crate::codes::RecoveryCircuit;
use crate::error::Result;
use crate::noise::{kraus_phi, KrausChannel, LindbladGenerator};
use crate::pulse::{compile_recovery, PulseShape, Schedule};
use crate::tensor::{c, operator_norm, partial_trace, trace_norm, CMatrix, DensityMatrix};

/// Residual threshold for the factorization `U(tau, 0) = 1 (x) V`.
pub const RECOVERY_CONDITION_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoveryConditionReport {
    /// `|| U - 1 (x) V ||_inf` with `V = Tr_reg(U) / 2^M`.
    pub residual: f64,
    pub pass: bool,
}

/// Tests whether the noiseless period propagator acts trivially on the
/// register. `V` inherits the global phase of `U`, so the residual is
/// already minimized over that phase.
pub fn check_recovery_condition(schedule: &Schedule) -> Result<RecoveryConditionReport> {
    let layout = schedule.layout;
    let u = PulseKernels::new(schedule)?.propagator_from_zero(schedule.tau);
    let v = partial_trace(&u, layout.total_qubits(), &layout.register_sites())? * c(1.0 / layout.register_dim() as f64, 0.0);
    let dr = layout.register_dim();
    let residual = operator_norm(&(&u - CMatrix::identity(dr, dr).kronecker(&v)))?;
    Ok(RecoveryConditionReport { residual, pass: residual <= RECOVERY_CONDITION_THRESHOLD })
}

/// `Phi_k(t) = U(t,0)^{-1} Phi_k U(t,0)` with Kraus operators `U^dagger K U`.
pub fn interaction_phi(schedule: &Schedule, k: usize, t: f64) -> Result<KrausChannel> {
    let u = super::hamiltonian_propagator(schedule, 0.0, t)?;
    let phi = kraus_phi(k, schedule.layout)?;
    let operators = phi.operators.iter().map(|op| u.adjoint() * op * &u).collect();
    Ok(KrausChannel { layout: schedule.layout, operators })
}

/// Largest trace-norm distance, over the code frame, between register
/// outputs of the continuous cycle (noise during pulses) and the discrete
/// cycle `R . e^{tau L}`.
pub fn cycle_map_distance(
    recovery: &RecoveryCircuit,
    lambda_sq: f64,
    t0: f64,
    tau: f64,
    shape: PulseShape,
    config: &IntegratorConfig,
) -> Result<f64> {
    let schedule = compile_recovery(recovery, t0, tau, shape)?;
    let layout = schedule.layout;
    let lindblad = LindbladGenerator::new(lambda_sq, layout)?;
    let register_noise = LindbladGenerator::new(lambda_sq, recovery.code.layout())?;
    let quiet = IntegratorConfig { record_every: usize::MAX, ..*config };
    let distances = recovery
        .code
        .frame()
        .par_iter()
        .map(|psi| {
            let rho0 = DensityMatrix::from_pure(psi).with_fresh_ancillas(layout.ancilla_qubits)?;
            let cont = integrate_master_equation(&schedule, &lindblad, &rho0, None, &quiet)?;
            let cont_reg = cont.final_state.register_marginal()?;
            let damaged = register_noise.evolve_matrix(&psi.projector(), tau);
            let disc_reg = recovery.apply_register_channel(&damaged);
            trace_norm(&(cont_reg.data() - disc_reg))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(distances.into_iter().fold(0.0, f64::max))
}
