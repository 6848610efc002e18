use rayon::prelude::*;
use serde::Serialize;

use super::{time_grid, PropagatorCache};
use crate::error::{Error, Result};
use crate::pulse::Schedule;
use crate::tensor::{c, replace_qubit, CMatrix, DensityMatrix, PureState};

/// How many Dyson orders to keep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Truncation {
    /// Exactly this order; fails if the tail bound exceeds the tolerance.
    Fixed(usize),
    /// The smallest order whose tail bound meets the tolerance.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DysonResult {
    pub t: f64,
    pub fidelity: f64,
    pub order: usize,
    /// Upper bound on the neglected orders.
    pub tail: f64,
    /// Contribution of each order, prefactor included.
    pub terms: Vec<f64>,
}

/// `e^{-a} sum_{n > order} a^n / n!`.
pub fn poisson_tail(a: f64, order: usize) -> f64 {
    let mut term = (-a).exp();
    let mut head = term;
    for n in 1..=order {
        term *= a / n as f64;
        head += term;
    }
    (1.0 - head).max(0.0)
}

fn order_for(a: f64, tolerance: f64) -> usize {
    (0..).find(|&n| poisson_tail(a, n) <= tolerance).expect("Poisson tail vanishes")
}

/// Fidelity `F(t)` from the interaction-picture Dyson series. Each nested
/// integral is a cumulative trapezoid rule on the propagator grid; the result
/// is Richardson-extrapolated from that grid and its uniform refinement.
pub fn dyson_fidelity(
    schedule: &Schedule,
    lambda_sq: f64,
    psi: &PureState,
    t: f64,
    truncation: Truncation,
    tolerance: f64,
    steps_per_pulse: usize,
) -> Result<DysonResult> {
    let layout = schedule.layout;
    if psi.layout().total_dim() != layout.register_dim() {
        return Err(Error::DimensionMismatch { expected: layout.register_dim(), found: psi.layout().total_dim() });
    }
    if !(lambda_sq >= 0.0 && lambda_sq.is_finite()) {
        return Err(Error::InvalidParameter(format!("decoherence rate {lambda_sq} must be >= 0")));
    }
    let a = lambda_sq * layout.register_qubits as f64 * t;
    let order = match truncation {
        Truncation::Auto => order_for(a, tolerance),
        Truncation::Fixed(n) => {
            let tail = poisson_tail(a, n);
            if tail > tolerance {
                return Err(Error::TruncationTooLow { order: n, tail, required: order_for(a, tolerance) });
            }
            n
        }
    };
    let coarse_grid = time_grid(schedule, t, steps_per_pulse)?;
    let fine_grid = refine(&coarse_grid, 2);
    let coarse = series_terms(schedule, lambda_sq, psi, &coarse_grid, order)?;
    let fine = series_terms(schedule, lambda_sq, psi, &fine_grid, order)?;
    let prefactor = (-a).exp();
    let terms: Vec<f64> = coarse.iter().zip(&fine).map(|(c, f)| prefactor * (4.0 * f - c) / 3.0).collect();
    Ok(DysonResult { t, fidelity: terms.iter().sum(), order, tail: poisson_tail(a, order), terms })
}

fn refine(grid: &[f64], r: usize) -> Vec<f64> {
    let mut out = vec![grid[0]];
    for w in grid.windows(2) {
        out.extend((1..=r).map(|i| if i == r { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / r as f64 }));
    }
    out
}

/// `Tr(Q Y_n(t_end))` for `n = 0..=order`, where `Y_0 = P_psi (x) P_0` and
/// `Y_n(t) = lambda^2 int_0^t G(s) Y_{n-1}(s) ds` with `G(s) = sum_k Phi_k(s)`.
fn series_terms(schedule: &Schedule, lambda_sq: f64, psi: &PureState, grid: &[f64], order: usize) -> Result<Vec<f64>> {
    let layout = schedule.layout;
    let n = layout.total_qubits();
    let m = layout.register_qubits;
    let da = layout.ancilla_dim();
    let rho0 = DensityMatrix::from_pure(psi).with_fresh_ancillas(layout.ancilla_qubits)?.into_data();
    let q = psi.projector().kronecker(&CMatrix::identity(da, da));
    let cache = PropagatorCache::new(schedule, grid.to_vec())?;
    let g = |i: usize, y: &CMatrix| -> CMatrix {
        let u = cache.get(i);
        let moved = u * y * u.adjoint();
        let mut acc = CMatrix::zeros(y.nrows(), y.ncols());
        for k in 0..m {
            acc += replace_qubit(&moved, k, n);
        }
        u.adjoint() * acc * u
    };
    let mut terms = vec![(&q * &rho0).trace().re];
    let mut current: Vec<CMatrix> = vec![rho0; grid.len()];
    for _ in 1..=order {
        let integrand: Vec<CMatrix> = current.par_iter().enumerate().map(|(i, y)| g(i, y)).collect();
        let mut next = Vec::with_capacity(grid.len());
        let mut acc = CMatrix::zeros(integrand[0].nrows(), integrand[0].ncols());
        next.push(acc.clone());
        for i in 1..grid.len() {
            let h = grid[i] - grid[i - 1];
            acc += (&integrand[i - 1] + &integrand[i]) * c(0.5 * h * lambda_sq, 0.0);
            next.push(acc.clone());
        }
        terms.push((&q * next.last().expect("grid has two points")).trace().re);
        current = next;
    }
    Ok(terms)
}
