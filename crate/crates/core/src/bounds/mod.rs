//! Analytic bounds on the continuous-time cycle: the function `x(t)`, the
//! error ODE and its lower bound, boundary derivatives, fidelity ceilings and
//! the period-count estimates.

use serde::{Deserialize, Serialize};

use crate::continuous::{integrate_master_equation, IntegratorConfig, PulseKernels, Trajectory, MIN_STEPS_PER_PULSE};
use crate::error::{Error, Result};
use crate::noise::LindbladGenerator;
use crate::pulse::Schedule;
use crate::tensor::{hermitian_eigenvalues, partial_trace, CMatrix, DensityMatrix, PureState};

/// Upper edge of the small `Mq` regime.
pub const SMALL_MQ: f64 = 0.1;
/// Lower edge of the saturated `Mq` regime.
pub const LARGE_MQ: f64 = 10.0;
/// Richardson error estimates are multiplied by this before use as slack.
pub const SLACK_FACTOR: f64 = 10.0;

/// `(t, x(t))` pairs.
pub type XSamples = Vec<(f64, f64)>;

fn check_register_state(schedule: &Schedule, psi: &PureState) -> Result<()> {
    let expected = schedule.layout.register_dim();
    if psi.layout().total_dim() != expected {
        return Err(Error::DimensionMismatch { expected, found: psi.layout().total_dim() });
    }
    Ok(())
}

fn initial_frame(schedule: &Schedule, psi: &PureState) -> CMatrix {
    let da = schedule.layout.ancilla_dim();
    psi.projector().kronecker(&CMatrix::identity(da, da))
}

/// `1 - max_k || Phi_k(A) ||` for the rotated projector `A = U (P (x) 1) U^dagger`.
/// `Phi_k(A) = Tr_k(A) (x) 1/2`, so its norm is half the top eigenvalue of `Tr_k A`.
fn x_from_frame(schedule: &Schedule, frame: &CMatrix) -> Result<f64> {
    let n = schedule.n_qubits();
    let mut worst: f64 = 0.0;
    for k in schedule.layout.register_sites() {
        let reduced = partial_trace(frame, n, &[k])?;
        let top = hermitian_eigenvalues(&reduced)?.last().copied().unwrap_or(0.0);
        worst = worst.max(top / 2.0);
    }
    Ok((1.0 - worst).clamp(0.0, 1.0))
}

/// `x(t) = 1 - max_k || Phi_k(t) (P_psi (x) 1_A) ||_inf` for a register state `psi`.
pub fn x_of_t(schedule: &Schedule, psi: &PureState, t: f64) -> Result<f64> {
    check_register_state(schedule, psi)?;
    let u = crate::continuous::hamiltonian_propagator(schedule, 0.0, t)?;
    let frame = &u * initial_frame(schedule, psi) * u.adjoint();
    x_from_frame(schedule, &frame)
}

/// `x` on an increasing list of times, stepping the rotated projector
/// forward instead of rebuilding `U(t, 0)` at every point.
pub fn x_samples(schedule: &Schedule, psi: &PureState, times: &[f64]) -> Result<XSamples> {
    check_register_state(schedule, psi)?;
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("sample times must be nondecreasing".into()));
    }
    if let Some(&t) = times.iter().find(|&&t| t < 0.0 || t > schedule.tau * (1.0 + 1e-12)) {
        return Err(Error::TimeOutOfRange { t, tau: schedule.tau });
    }
    let kernels = PulseKernels::new(schedule)?;
    let mut frame = initial_frame(schedule, psi);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        kernels.conjugate_step(now, t, &mut frame);
        now = t;
        out.push((t, x_from_frame(schedule, &frame)?));
    }
    Ok(out)
}

/// `int_0^h a e^{-a u} (u / h) du` for `z = a h`, stable for small `z`.
fn ramp_weight(z: f64) -> f64 {
    if z < 1e-4 {
        z / 2.0 - z * z / 3.0 + z * z * z / 8.0
    } else {
        (-(-z).exp_m1() - z * (-z).exp()) / z
    }
}

/// Lower bound `lambda^2 M int_0^tau e^{-lambda^2 M (tau - s)} x(s) ds`.
///
/// `x` is interpolated linearly between samples and each panel is integrated
/// exactly against the exponential kernel. Samples must span `[0, tau]` with
/// spacing no coarser than `t0_min / MIN_STEPS_PER_PULSE`.
pub fn error_lower_bound(samples: &[(f64, f64)], lambda_sq: f64, m: usize, tau: f64, t0_min: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::InvalidParameter("need at least two x samples".into()));
    }
    let (first, last) = (samples[0].0, samples[samples.len() - 1].0);
    if first.abs() > 1e-12 || (last - tau).abs() > 1e-12 * tau.max(1.0) {
        return Err(Error::InvalidParameter(format!("samples span [{first}, {last}], expected [0, {tau}]")));
    }
    let limit = t0_min / MIN_STEPS_PER_PULSE as f64;
    let spacing = samples.windows(2).map(|w| w[1].0 - w[0].0).fold(0.0, f64::max);
    if spacing > limit * (1.0 + 1e-9) {
        return Err(Error::GridTooCoarse { spacing, limit });
    }
    let a = lambda_sq * m as f64;
    if a == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for w in samples.windows(2) {
        let ((s0, x0), (s1, x1)) = (w[0], w[1]);
        let z = a * (s1 - s0);
        let full = -(-z).exp_m1();
        let ramp = ramp_weight(z);
        total += (-a * (tau - s1)).exp() * (x1 * (full - ramp) + x0 * ramp);
    }
    Ok(total)
}

/// Derivative at `t[i]` of the parabola through three grid points.
fn lagrange_derivative(t: &[f64], y: &[f64], i: usize, idx: [usize; 3]) -> f64 {
    let x = t[i];
    let mut d = 0.0;
    for (a, &ja) in idx.iter().enumerate() {
        let others: Vec<usize> = idx.iter().enumerate().filter(|&(b, _)| b != a).map(|(_, &j)| j).collect();
        let denom = (t[ja] - t[others[0]]) * (t[ja] - t[others[1]]);
        let numer = (x - t[others[0]]) + (x - t[others[1]]);
        d += y[ja] * numer / denom;
    }
    d
}

/// Finite-difference derivative with a Richardson error estimate from the
/// stencil of doubled spacing. Centered where possible, one-sided at the ends.
fn derivative_with_error(t: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    let n = t.len();
    let (fine, coarse) = if i >= 2 && i + 2 < n {
        ([i - 1, i, i + 1], [i - 2, i, i + 2])
    } else if i + 4 < n {
        ([i, i + 1, i + 2], [i, i + 2, i + 4])
    } else {
        ([i - 2, i - 1, i], [i - 4, i - 2, i])
    };
    let d1 = lagrange_derivative(t, y, i, fine);
    let d2 = lagrange_derivative(t, y, i, coarse);
    (d1, (d1 - d2).abs() / 3.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdePoint {
    pub t: f64,
    pub x: f64,
    /// `X(t) = E(t) + E'(t) / (lambda^2 M)`.
    pub big_x: f64,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorOdeReport {
    pub points: Vec<OdePoint>,
    /// Largest amount by which `X >= x` or `X >= 0` fails beyond the slack.
    pub residual: f64,
    /// Smallest `X - x` over the grid.
    pub min_margin: f64,
    pub pass: bool,
    /// Set when the differentiation error estimate is too large to trust.
    pub advice: Option<String>,
}

/// Reconstructs `X(t)` from a measured error curve `E(t)` and checks
/// `X >= x` and `X >= 0` pointwise. `floor` is added to the Richardson slack
/// to absorb integrator error in `E`.
pub fn verify_error_ode(
    times: &[f64],
    errors: &[f64],
    x: &[f64],
    lambda_sq: f64,
    m: usize,
    floor: f64,
) -> Result<ErrorOdeReport> {
    let n = times.len();
    if errors.len() != n || x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: errors.len().min(x.len()) });
    }
    let rate = lambda_sq * m as f64;
    if rate == 0.0 {
        let residual = errors.iter().map(|e| e.abs()).fold(0.0, f64::max);
        return Ok(ErrorOdeReport { points: Vec::new(), residual, min_margin: 0.0, pass: residual <= floor, advice: None });
    }
    if n < 5 {
        return Err(Error::InvalidParameter("need at least five samples to differentiate".into()));
    }
    let mut points = Vec::with_capacity(n);
    let (mut residual, mut min_margin, mut worst_slack) = (0.0f64, f64::INFINITY, 0.0f64);
    for i in 0..n {
        let (d, err) = derivative_with_error(times, errors, i);
        let big_x = errors[i] + d / rate;
        let slack = SLACK_FACTOR * err / rate + floor;
        worst_slack = worst_slack.max(slack);
        min_margin = min_margin.min(big_x - x[i]);
        residual = residual.max(x[i] - big_x - slack).max(-big_x - slack);
        points.push(OdePoint { t: times[i], x: x[i], big_x, slack });
    }
    let advice = (worst_slack > 0.05).then(|| {
        format!("differentiation slack reaches {worst_slack:.3e}; rerun with more steps per pulse")
    });
    Ok(ErrorOdeReport { points, residual: residual.max(0.0), min_margin, pass: residual <= 0.0, advice })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeReport {
    pub max_slope: f64,
    /// `4 C / t0_min`.
    pub limit: f64,
    pub pass: bool,
}

/// Largest `|dx/dt|` between consecutive samples lying inside
/// `[0, t0_min]` or `[tau - t0_min, tau]`, against `4 C / t0_min`.
pub fn derivative_bound_check(samples: &[(f64, f64)], t0_min: f64, c: f64) -> DerivativeReport {
    let limit = 4.0 * c / t0_min;
    let tau = samples.last().map_or(0.0, |s| s.0);
    let eps = 1e-12 * tau.max(1.0);
    let in_window = |t: f64| t <= t0_min + eps || t >= tau - t0_min - eps;
    let max_slope = samples
        .windows(2)
        .filter(|w| in_window(w[0].0) && in_window(w[1].0) && w[1].0 > w[0].0)
        .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
        .fold(0.0, f64::max);
    DerivativeReport { max_slope, limit, pass: max_slope <= limit }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Small,
    Crossover,
    Large,
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Regime::Small => "small",
            Regime::Crossover => "crossover",
            Regime::Large => "large",
        })
    }
}

/// Regime of `Mq`; the edges are inclusive up to rounding in `M * q`.
pub fn classify(mq: f64) -> Regime {
    if mq <= SMALL_MQ * (1.0 + 1e-9) {
        Regime::Small
    } else if mq >= LARGE_MQ * (1.0 - 1e-9) {
        Regime::Large
    } else {
        Regime::Crossover
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ceiling {
    pub regime: Regime,
    pub mq: f64,
    pub kappa: f64,
    pub ceiling: f64,
}

/// Per-period fidelity ceiling: `1 - kappa M q` when small, `1/2` when
/// saturated, and the larger of the two in between.
pub fn fidelity_ceiling(m: usize, q: f64, kappa: f64) -> Result<Ceiling> {
    if m == 0 || !(q >= 0.0) || !(kappa >= 0.0) {
        return Err(Error::InvalidParameter(format!("ceiling needs M >= 1, q >= 0, kappa >= 0 (got {m}, {q}, {kappa})")));
    }
    let mq = m as f64 * q;
    let regime = classify(mq);
    let ceiling = match regime {
        Regime::Small => 1.0 - kappa * mq,
        Regime::Crossover => (1.0 - kappa * mq).max(0.5),
        Regime::Large => 0.5,
    };
    Ok(Ceiling { regime, mq, kappa, ceiling })
}

/// Least-squares slope through the origin of `1 - F` against `Mq`, using only
/// small-regime points. `None` when no point qualifies.
pub fn fit_kappa(points: &[(f64, f64)]) -> Option<f64> {
    let (num, den) = points
        .iter()
        .filter(|(mq, _)| *mq > 0.0 && classify(*mq) == Regime::Small)
        .fold((0.0, 0.0), |(n, d), &(mq, f)| (n + mq * (1.0 - f), d + mq * mq));
    (den > 0.0).then(|| num / den)
}

/// Rough maximal number of executable periods, `1 / (lambda^2 t0_min)`.
pub fn t_max_estimate(lambda_sq: f64, t0_min: f64) -> Result<f64> {
    let q = lambda_sq * t0_min;
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda^2 t0_min must be positive (got {q})")));
    }
    Ok(1.0 / q)
}

/// `exp(-lambda^2 t0 V)` with `V` = periods times register qubits.
pub fn total_fidelity_model(lambda_sq: f64, t0: f64, volume: f64) -> f64 {
    (-lambda_sq * t0 * volume).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares `y = slope x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::InvalidParameter("linear fit needs two or more paired points".into()));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (mx, my) = (mean(xs), mean(ys));
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("linear fit needs distinct abscissae".into()));
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LinearFit { slope, intercept: my - slope * mx, r_squared })
}

/// Everything needed to reproduce one bound evaluation, plus its outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lambda_sq: f64,
    pub t0_min: f64,
    pub tau: f64,
    pub m: usize,
    pub speed_constant: f64,
    pub kappa: Option<f64>,
    pub steps_per_pulse: usize,
    pub x_samples: XSamples,
    pub e_tau_measured: f64,
    pub e_tau_lower_bound: f64,
    pub q: f64,
    pub mq: f64,
    pub regime: Regime,
    pub boundary_values: (f64, f64),
    pub max_derivative_observed: f64,
    pub derivative: DerivativeReport,
    pub ode: ErrorOdeReport,
}

/// Integrates one noisy period from `psi (x) |0_A>` and evaluates every bound
/// on the integrator grid.
pub fn bound_report(
    schedule: &Schedule,
    psi: &PureState,
    lambda_sq: f64,
    speed_constant: f64,
    kappa: Option<f64>,
    config: &IntegratorConfig,
) -> Result<BoundReport> {
    let traj = integrate_period(schedule, psi, lambda_sq, config)?;
    bound_report_from(schedule, psi, lambda_sq, speed_constant, kappa, config.steps_per_pulse, &traj)
}

/// One noisy period from `psi (x) |0_A>`, recording every grid point.
pub fn integrate_period(
    schedule: &Schedule,
    psi: &PureState,
    lambda_sq: f64,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    check_register_state(schedule, psi)?;
    let layout = schedule.layout;
    let lindblad = LindbladGenerator::new(lambda_sq, layout)?;
    let rho0 = DensityMatrix::from_pure(psi).with_fresh_ancillas(layout.ancilla_qubits)?;
    let cfg = IntegratorConfig { record_every: 1, ..*config };
    integrate_master_equation(schedule, &lindblad, &rho0, Some(psi), &cfg)
}

/// Bounds evaluated on an existing trajectory from [`integrate_period`].
pub fn bound_report_from(
    schedule: &Schedule,
    psi: &PureState,
    lambda_sq: f64,
    speed_constant: f64,
    kappa: Option<f64>,
    steps_per_pulse: usize,
    traj: &Trajectory,
) -> Result<BoundReport> {
    let m = schedule.layout.register_qubits;
    let times: Vec<f64> = traj.points.iter().map(|p| p.t).collect();
    let errors: Vec<f64> = traj.points.iter().map(|p| 1.0 - p.fidelity.unwrap_or(0.0)).collect();
    let samples = x_samples(schedule, psi, &times)?;
    let xs: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let tau = schedule.tau;
    let e_tau_lower_bound = error_lower_bound(&samples, lambda_sq, m, tau, schedule.t0_min)?;
    let derivative = derivative_bound_check(&samples, schedule.t0_min, speed_constant);
    let ode = verify_error_ode(&times, &errors, &xs, lambda_sq, m, 1e-6)?;
    let q = lambda_sq * schedule.t0_min;
    let mq = m as f64 * q;
    Ok(BoundReport {
        lambda_sq,
        t0_min: schedule.t0_min,
        tau,
        m,
        speed_constant,
        kappa,
        steps_per_pulse,
        boundary_values: (xs[0], xs[xs.len() - 1]),
        e_tau_measured: errors[errors.len() - 1],
        e_tau_lower_bound,
        q,
        mq,
        regime: classify(mq),
        max_derivative_observed: derivative.max_slope,
        derivative,
        ode,
        x_samples: samples,
    })
}

#[cfg(test)]
mod tests;
