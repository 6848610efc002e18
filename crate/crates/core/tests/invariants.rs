//! Sweep-level invariants comparing the continuous and discrete engines.

use qeclab_core::codes::{build_recovery, Code, RecoveryCircuit, RecoveryStyle};
use qeclab_core::bounds::integrate_period;
use qeclab_core::continuous::IntegratorConfig;
use qeclab_core::discrete::{run_corrected, CorrectionCycle};
use qeclab_core::noise::DiscreteErrorMap;
use qeclab_core::pulse::{compile_recovery, PulseShape};
use qeclab_core::tensor::PureState;

fn continuous_fidelity(r: &RecoveryCircuit, psi: &PureState, lambda_sq: f64, t0: f64, tau: f64) -> f64 {
    let s = compile_recovery(r, t0, tau, PulseShape::RaisedCosine).unwrap();
    integrate_period(&s, psi, lambda_sq, &IntegratorConfig::default()).unwrap().last().fidelity.unwrap()
}

fn discrete_fidelity(r: &RecoveryCircuit, psi: &PureState, lambda_sq: f64, tau: f64) -> f64 {
    let m = r.code.n_physical;
    let cycle = CorrectionCycle::new(r.clone(), DiscreteErrorMap::register_noise(lambda_sq, tau, m).unwrap(), None).unwrap();
    run_corrected(&cycle, 1, psi).unwrap().almost_final_fidelity
}

#[test]
fn syndrome_correction_never_beats_its_delta_pulse_limit() {
    let r = build_recovery(&Code::repetition(3).unwrap(), RecoveryStyle::SyndromeCorrect).unwrap();
    for lambda_sq in [0.05, 0.1, 0.2] {
        for t0 in [0.2, 0.1, 0.05] {
            for tau in [1.0, r.depth() as f64 * t0] {
                for psi in r.code.frame() {
                    let f = continuous_fidelity(&r, &psi, lambda_sq, t0, tau);
                    let f1 = discrete_fidelity(&r, &psi, lambda_sq, tau);
                    assert!(f <= f1 + 1e-9, "lambda^2={lambda_sq} t0={t0} tau={tau}: {f} > {f1}");
                }
            }
        }
    }
}

#[test]
fn syndrome_correction_error_is_nondecreasing_in_pulse_width() {
    let r = build_recovery(&Code::repetition(3).unwrap(), RecoveryStyle::SyndromeCorrect).unwrap();
    let t0s = [0.0125, 0.025, 0.05, 0.1, 0.2];
    for lambda_sq in [0.05, 0.2] {
        for psi in r.code.frame() {
            let errors: Vec<f64> = t0s.iter().map(|&t0| 1.0 - continuous_fidelity(&r, &psi, lambda_sq, t0, 1.0)).collect();
            assert!(errors.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{errors:?}");
        }
    }
}

/// Decode-reencode corrects nothing, and while the block sits decoded a
/// replacement on a syndrome qubit leaves the logical qubit intact. Slow
/// pulses therefore spend longer in a protected frame and beat the
/// delta-pulse cycle.
#[test]
fn decode_reencode_gains_from_time_spent_decoded() {
    let r = build_recovery(&Code::perfect5(), RecoveryStyle::DecodeReencode).unwrap();
    let psi = &r.code.frame()[2];
    let (lambda_sq, t0) = (0.05, 0.01);
    let tau = r.depth() as f64 * t0;
    let f = continuous_fidelity(&r, psi, lambda_sq, t0, tau);
    let f1 = discrete_fidelity(&r, psi, lambda_sq, tau);
    assert!(f > f1 + 1e-4, "{f} vs {f1}");

    let narrow = 1.0 - continuous_fidelity(&r, psi, 0.1, 0.0125, 1.0);
    let wide = 1.0 - continuous_fidelity(&r, psi, 0.1, 0.2, 1.0);
    assert!(wide < narrow - 1e-3, "{wide} vs {narrow}");
}
