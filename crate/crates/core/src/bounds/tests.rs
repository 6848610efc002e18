use approx::assert_abs_diff_eq;

use super::*;
use crate::codes::{build_recovery, Circuit, Code, Gate, RecoveryStyle};
use crate::continuous::time_grid;
use crate::pulse::{compile_circuit, compile_recovery, PulseShape, DEFAULT_SPEED_CONSTANT};
use crate::tensor::{c, HilbertLayout, PureState};

fn decode_reencode(t0: f64, tau: f64) -> (crate::codes::RecoveryCircuit, Schedule) {
    let r = build_recovery(&Code::perfect5(), RecoveryStyle::DecodeReencode).unwrap();
    let s = compile_recovery(&r, t0, tau, PulseShape::RaisedCosine).unwrap();
    (r, s)
}

#[test]
fn x_at_start_for_product_and_cat_states() {
    let code = Code::repetition(3).unwrap();
    let r = build_recovery(&code, RecoveryStyle::DecodeReencode).unwrap();
    let s = compile_recovery(&r, 0.1, 1.0, PulseShape::RaisedCosine).unwrap();
    let frame = code.frame();
    assert_abs_diff_eq!(x_of_t(&s, &frame[0], 0.0).unwrap(), 0.5, epsilon = 1e-14);
    assert_abs_diff_eq!(x_of_t(&s, &frame[2], 0.0).unwrap(), 0.75, epsilon = 1e-14);
    assert_abs_diff_eq!(x_of_t(&s, &frame[2], 1.0).unwrap(), 0.75, epsilon = 1e-10);
}

#[test]
fn x_stays_in_unit_interval_and_ends_above_half() {
    let (r, s) = decode_reencode(0.1, 1.0);
    let grid = time_grid(&s, 1.0, 10).unwrap();
    for psi in r.code.frame() {
        let samples = x_samples(&s, &psi, &grid).unwrap();
        assert!(samples.iter().all(|&(_, x)| (0.0..=1.0).contains(&x)));
        assert!(samples[0].1 >= 0.5 - 1e-9);
        assert!(samples.last().unwrap().1 >= 0.5 - 1e-9);
        for &(t, x) in samples.iter().step_by(37) {
            assert_abs_diff_eq!(x, x_of_t(&s, &psi, t).unwrap(), epsilon = 1e-10);
        }
    }
}

#[test]
fn x_vanishes_while_the_state_hides_in_an_ancilla() {
    let swap = [Gate::cnot(0, 1), Gate::cnot(1, 0), Gate::cnot(0, 1)];
    let gates: Vec<Gate> = swap.iter().chain(swap.iter()).cloned().collect();
    let circuit = Circuit::new(2, gates).unwrap();
    let layout = HilbertLayout::new(1, 1).unwrap();
    let s = compile_circuit(&circuit, layout, 1.0 / 6.0, 1.0, PulseShape::RaisedCosine).unwrap();
    let psi = PureState::normalized(HilbertLayout::register_only(1).unwrap(), nalgebra::DVector::from_vec(vec![c(0.6, 0.0), c(0.0, 0.8)])).unwrap();
    assert_abs_diff_eq!(x_of_t(&s, &psi, 0.0).unwrap(), 0.5, epsilon = 1e-12);
    assert_abs_diff_eq!(x_of_t(&s, &psi, 0.5).unwrap(), 0.0, epsilon = 1e-9);
    assert_abs_diff_eq!(x_of_t(&s, &psi, 1.0).unwrap(), 0.5, epsilon = 1e-9);
}

#[test]
fn lower_bound_closed_forms() {
    let grid: Vec<f64> = (0..=200).map(|i| i as f64 / 200.0).collect();
    let zero: Vec<_> = grid.iter().map(|&t| (t, 0.0)).collect();
    assert_eq!(error_lower_bound(&zero, 0.3, 5, 1.0, 0.1).unwrap(), 0.0);
    let half: Vec<_> = grid.iter().map(|&t| (t, 0.5)).collect();
    for (lam, m) in [(0.3, 5), (1e-6, 3), (4.0, 5)] {
        let want = 0.5 * (1.0 - (-lam * m as f64).exp());
        assert_abs_diff_eq!(error_lower_bound(&half, lam, m, 1.0, 0.1).unwrap(), want, epsilon = 1e-14);
    }
    assert_eq!(error_lower_bound(&half, 0.0, 5, 1.0, 0.1).unwrap(), 0.0);
}

#[test]
fn lower_bound_matches_fine_trapezoid_for_smooth_x() {
    let a: f64 = 0.2 * 3.0;
    let x = |s: f64| 0.5 + 0.4 * (7.0 * s).sin();
    let grid: Vec<_> = (0..=100).map(|i| i as f64 / 100.0).map(|t| (t, x(t))).collect();
    let got = error_lower_bound(&grid, 0.2, 3, 1.0, 0.1).unwrap();
    let n = 200_000;
    let h = 1.0 / n as f64;
    let f = |s: f64| a * (-a * (1.0 - s)).exp() * x(s);
    let oracle = h * ((1..n).map(|i| f(i as f64 * h)).sum::<f64>() + (f(0.0) + f(1.0)) / 2.0);
    assert_abs_diff_eq!(got, oracle, epsilon = 2e-5);
}

#[test]
fn lower_bound_refuses_coarse_grids() {
    let grid: Vec<_> = (0..=10).map(|i| (i as f64 / 10.0, 0.5)).collect();
    assert!(matches!(error_lower_bound(&grid, 0.2, 3, 1.0, 0.1), Err(Error::GridTooCoarse { .. })));
    assert!(error_lower_bound(&grid[..5], 0.2, 3, 1.0, 0.1).is_err());
}

#[test]
fn ode_reconstruction_without_hamiltonian() {
    let lam = 0.8;
    let times: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let errors: Vec<f64> = times.iter().map(|t| 0.5 * (1.0 - (-lam * t).exp())).collect();
    let x = vec![0.5; times.len()];
    let rep = verify_error_ode(&times, &errors, &x, lam, 1, 1e-9).unwrap();
    assert!(rep.pass);
    for p in &rep.points {
        assert_abs_diff_eq!(p.big_x, 0.5, epsilon = 1e-6);
    }
    let flat = vec![0.0; times.len()];
    let rep = verify_error_ode(&times, &flat, &x, 0.0, 1, 1e-9).unwrap();
    assert_eq!(rep.residual, 0.0);
    assert!(rep.pass);
}

#[test]
fn ode_check_detects_a_violation() {
    let times: Vec<f64> = (0..=400).map(|i| i as f64 / 400.0).collect();
    let errors: Vec<f64> = times.iter().map(|t| 0.5 * (1.0 - (-t).exp())).collect();
    let x = vec![0.6; times.len()];
    let rep = verify_error_ode(&times, &errors, &x, 1.0, 1, 1e-9).unwrap();
    assert!(!rep.pass);
    assert_abs_diff_eq!(rep.residual, 0.1, epsilon = 1e-4);
}

#[test]
fn decode_reencode_run_satisfies_every_bound() {
    let (r, s) = decode_reencode(0.1, 1.0);
    let psi = &r.code.frame()[3];
    let rep = bound_report(&s, psi, 0.1, DEFAULT_SPEED_CONSTANT, Some(1.0), &IntegratorConfig::default()).unwrap();
    assert!(rep.ode.pass, "residual {} margin {}", rep.ode.residual, rep.ode.min_margin);
    assert!(rep.ode.advice.is_none());
    assert!(rep.e_tau_lower_bound > 0.0);
    assert!(rep.e_tau_lower_bound <= rep.e_tau_measured + 1e-6);
    // The two boundary windows alone already contribute a positive amount.
    let a = 0.1 * 5.0;
    let window: f64 = rep
        .x_samples
        .windows(2)
        .filter(|w| w[1].0 <= s.t0_min || w[0].0 >= s.tau - s.t0_min)
        .map(|w| a * (w[1].0 - w[0].0) * w[0].1.min(w[1].1) * (-a * (s.tau - w[0].0)).exp())
        .sum();
    assert!(rep.e_tau_lower_bound >= window && window > 0.0);
    assert!(rep.derivative.pass);
    assert!(rep.boundary_values.0 >= 0.5 - 1e-9 && rep.boundary_values.1 >= 0.5 - 1e-9);
    let json = serde_json::to_string(&rep).unwrap();
    let back: BoundReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn derivative_checks() {
    let flat: Vec<_> = (0..=100).map(|i| (i as f64 / 100.0, 0.5)).collect();
    let rep = derivative_bound_check(&flat, 0.1, DEFAULT_SPEED_CONSTANT);
    assert_eq!(rep.max_slope, 0.0);
    assert!(rep.pass);

    let circuit =
        Circuit::new(3, vec![Gate::cnot(0, 1), Gate::cnot(0, 2), Gate::cnot(0, 2), Gate::cnot(0, 1)]).unwrap();
    let psi = Code::repetition(3).unwrap().encode(c(0.6, 0.0), c(0.0, 0.8)).unwrap();
    let slope = |t0: f64| {
        let tau = 4.0 * t0;
        let s = compile_circuit(&circuit, HilbertLayout::register_only(3).unwrap(), t0, tau, PulseShape::Box).unwrap();
        let grid = time_grid(&s, tau, 200).unwrap();
        let rep = derivative_bound_check(&x_samples(&s, &psi, &grid).unwrap(), t0, DEFAULT_SPEED_CONSTANT);
        assert!(rep.pass);
        rep.max_slope
    };
    let (wide, narrow) = (slope(0.2), slope(0.1));
    assert!(wide > 0.0);
    assert!(narrow <= 2.0 * wide * 1.1, "{wide} {narrow}");
}

#[test]
fn ceiling_regimes() {
    let c0 = fidelity_ceiling(5, 0.0, 1.3).unwrap();
    assert_eq!((c0.regime, c0.ceiling), (Regime::Small, 1.0));
    let big = fidelity_ceiling(5, 4.0, 1.3).unwrap();
    assert_eq!((big.regime, big.ceiling), (Regime::Large, 0.5));
    let q = 0.2 * 0.1;
    let small = fidelity_ceiling(5, q, 1.3).unwrap();
    assert_eq!(small.regime, Regime::Small);
    assert_abs_diff_eq!(small.ceiling, 1.0 - 1.3 * 0.1, epsilon = 1e-12);
    assert_eq!(fidelity_ceiling(3, 0.5, 1.0).unwrap().regime, Regime::Crossover);
    assert!(fidelity_ceiling(0, 0.1, 1.0).is_err());
}

#[test]
fn kappa_fit_uses_small_regime_only() {
    let pts = [(0.01, 1.0 - 0.02), (0.05, 1.0 - 0.1), (1.0, 0.3)];
    assert_abs_diff_eq!(fit_kappa(&pts).unwrap(), 2.0, epsilon = 1e-12);
    assert!(fit_kappa(&[(5.0, 0.5)]).is_none());
}

#[test]
fn period_estimates() {
    assert_abs_diff_eq!(t_max_estimate(1e-5, 1.0).unwrap(), 1e5, epsilon = 1e-6);
    assert_abs_diff_eq!(t_max_estimate(1.0, 0.01).unwrap(), 100.0, epsilon = 1e-9);
    assert_abs_diff_eq!(t_max_estimate(0.4, 0.1).unwrap(), 2.0 * t_max_estimate(0.8, 0.1).unwrap(), epsilon = 1e-12);
    assert!(t_max_estimate(0.0, 0.1).is_err());
    assert_eq!(total_fidelity_model(0.3, 0.1, 0.0), 1.0);
    assert_abs_diff_eq!(total_fidelity_model(std::f64::consts::LN_2, 1.0, 1.0), 0.5, epsilon = 1e-15);
}

#[test]
fn linear_fit_recovers_lines() {
    let xs = [1.0, 2.0, 3.0, 4.0];
    let fit = linear_fit(&xs, &[1.0, -1.0, -3.0, -5.0]).unwrap();
    assert_abs_diff_eq!(fit.slope, -2.0, epsilon = 1e-14);
    assert_abs_diff_eq!(fit.intercept, 3.0, epsilon = 1e-14);
    assert_abs_diff_eq!(fit.r_squared, 1.0, epsilon = 1e-14);
    assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_err());
}
