//! Master-equation dynamics under a pulse schedule: exact Hamiltonian
//! propagators, time stepping, the Dyson series and the recovery condition.

mod dyson;
mod recovery;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use dyson::{dyson_fidelity, poisson_tail, DysonResult, Truncation};
pub use recovery::{check_recovery_condition, cycle_map_distance, interaction_phi, RecoveryConditionReport};

use crate::error::{Error, Result};
use crate::noise::LindbladGenerator;
use crate::pulse::Schedule;
use crate::tensor::{c, partial_trace, CMatrix, DensityMatrix, LocalIndex, PureState};
use crate::tolerance::TOL;

/// Fewest grid steps allowed across one pulse.
pub const MIN_STEPS_PER_PULSE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Strang splitting of exact Hamiltonian and exact dissipative sub-flows.
    #[default]
    Splitting,
    /// Classical Runge-Kutta on the full generator (cross-check).
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IntegratorConfig {
    /// Grid steps across the narrowest pulse.
    pub steps_per_pulse: usize,
    pub method: Method,
    /// Record a trajectory point every this many steps (the end is always recorded).
    pub record_every: usize,
    /// Most negative eigenvalue tolerated before aborting.
    pub positivity_slack: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { steps_per_pulse: 50, method: Method::Splitting, record_every: 1, positivity_slack: TOL.positivity_slack }
    }
}

impl IntegratorConfig {
    pub fn with_steps(steps_per_pulse: usize) -> Self {
        Self { steps_per_pulse, ..Self::default() }
    }

    fn validate(&self) -> Result<()> {
        if self.steps_per_pulse < MIN_STEPS_PER_PULSE {
            return Err(Error::GridTooCoarse {
                spacing: 1.0 / self.steps_per_pulse as f64,
                limit: 1.0 / MIN_STEPS_PER_PULSE as f64,
            });
        }
        if self.record_every == 0 {
            return Err(Error::InvalidParameter("record_every must be >= 1".into()));
        }
        Ok(())
    }
}

/// Time grid on `[0, t_end]` containing every pulse edge, with uniform
/// sub-steps no longer than `t0_min / steps_per_pulse` between edges.
pub fn time_grid(schedule: &Schedule, t_end: f64, steps_per_pulse: usize) -> Result<Vec<f64>> {
    if !(0.0..=schedule.tau * (1.0 + 1e-12)).contains(&t_end) {
        return Err(Error::TimeOutOfRange { t: t_end, tau: schedule.tau });
    }
    let h_max = schedule.t0_min / steps_per_pulse as f64;
    let slack = 1e-12 * schedule.tau;
    let mut edges: Vec<f64> = vec![0.0, t_end];
    for p in &schedule.pulses {
        edges.extend([p.start(), p.end()].into_iter().filter(|&e| e > 0.0 && e < t_end));
    }
    edges.sort_by(f64::total_cmp);
    edges.dedup_by(|a, b| (*a - *b).abs() <= slack);
    let mut grid = vec![0.0];
    for w in edges.windows(2) {
        let n = ((w[1] - w[0]) / h_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        grid.extend((1..=n).map(|i| if i == n { w[1] } else { w[0] + (w[1] - w[0]) * i as f64 / n as f64 }));
    }
    Ok(grid)
}

/// Local propagator pieces of one schedule, reused across steps.
pub(crate) struct PulseKernels<'a> {
    schedule: &'a Schedule,
    order: Vec<usize>,
    indices: Vec<LocalIndex>,
}

impl<'a> PulseKernels<'a> {
    pub(crate) fn new(schedule: &'a Schedule) -> Result<Self> {
        let n = schedule.n_qubits();
        let order = schedule.start_order();
        let indices = schedule.pulses.iter().map(|p| LocalIndex::new(&p.sites, n)).collect::<Result<_>>()?;
        Ok(Self { schedule, order, indices })
    }

    /// Local factors `(pulse, exp(-i (F(b) - F(a)) h))` of `U(b, a)`, in start
    /// order. Exact when no pulse edge lies strictly inside `(a, b)`.
    fn step_factors(&self, a: f64, b: f64) -> Vec<(usize, CMatrix)> {
        self.order
            .iter()
            .filter_map(|&i| {
                let p = &self.schedule.pulses[i];
                let df = p.cumulative(b) - p.cumulative(a);
                (df != 0.0).then(|| (i, p.evolution(df)))
            })
            .collect()
    }

    /// `m <- U(b, a) m U(b, a)^dagger`.
    pub(crate) fn conjugate_step(&self, a: f64, b: f64, m: &mut CMatrix) {
        for (i, u) in self.step_factors(a, b) {
            self.indices[i].conjugate(&u, m);
        }
    }

    /// `U(t, 0) = prod_a exp(-i F_a(t) h_a)` in start order.
    pub(crate) fn propagator_from_zero(&self, t: f64) -> CMatrix {
        let d = self.schedule.layout.total_dim();
        let mut u = CMatrix::identity(d, d);
        for &i in &self.order {
            let p = &self.schedule.pulses[i];
            let f = p.cumulative(t);
            if f != 0.0 {
                self.indices[i].apply_left(&p.evolution(f), &mut u);
            }
        }
        u
    }

    /// `-i [H(t), m]`.
    fn commutator(&self, t: f64, m: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for (i, p) in self.schedule.pulses.iter().enumerate() {
            let f = p.envelope(t);
            if f == 0.0 {
                continue;
            }
            let h = &p.generator * c(f, 0.0);
            let mut left = m.clone();
            self.indices[i].apply_left(&h, &mut left);
            let mut right = m.clone();
            self.indices[i].apply_right(&h, &mut right);
            out += (left - right) * c(0.0, -1.0);
        }
        out
    }
}

/// Noiseless propagator `U(t, s) = U(t, 0) U(s, 0)^dagger`.
pub fn hamiltonian_propagator(schedule: &Schedule, s: f64, t: f64) -> Result<CMatrix> {
    for x in [s, t] {
        if !(x >= -1e-12 * schedule.tau && x <= schedule.tau * (1.0 + 1e-12)) {
            return Err(Error::TimeOutOfRange { t: x, tau: schedule.tau });
        }
    }
    let k = PulseKernels::new(schedule)?;
    Ok(k.propagator_from_zero(t) * k.propagator_from_zero(s).adjoint())
}

/// `U(t, 0)` sampled on a grid. Stretches of the grid without active pulses
/// share one allocation.
#[derive(Debug, Clone)]
pub struct PropagatorCache {
    pub times: Vec<f64>,
    unitaries: Vec<Arc<CMatrix>>,
}

impl PropagatorCache {
    pub fn new(schedule: &Schedule, times: Vec<f64>) -> Result<Self> {
        let k = PulseKernels::new(schedule)?;
        let mut unitaries: Vec<Arc<CMatrix>> = Vec::with_capacity(times.len());
        for (i, &t) in times.iter().enumerate() {
            let reuse = i > 0 && k.step_factors(times[i - 1], t).is_empty();
            let u = if reuse { Arc::clone(&unitaries[i - 1]) } else { Arc::new(k.propagator_from_zero(t)) };
            unitaries.push(u);
        }
        Ok(Self { times, unitaries })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn get(&self, i: usize) -> &CMatrix {
        &self.unitaries[i]
    }

    /// Number of distinct stored matrices.
    pub fn distinct(&self) -> usize {
        let mut n = 0;
        for i in 0..self.unitaries.len() {
            if i == 0 || !Arc::ptr_eq(&self.unitaries[i], &self.unitaries[i - 1]) {
                n += 1;
            }
        }
        n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    /// `Tr(U(t,0) (P_psi (x) 1_A) U(t,0)^dagger rho(t))`, the fidelity of the
    /// interaction-picture state.
    pub fidelity: Option<f64>,
    /// `<psi| Tr_A rho(t) |psi>`.
    pub register_fidelity: Option<f64>,
    pub trace: f64,
    pub purity: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    pub final_state: DensityMatrix,
    pub steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory always records the initial point")
    }

    /// CSV body rows `t,fidelity,trace,purity,min_eig`.
    pub fn csv_rows(&self) -> Vec<String> {
        self.points
            .iter()
            .map(|p| {
                let f = p.fidelity.map(|f| f.to_string()).unwrap_or_default();
                format!("{},{},{},{},{}", p.t, f, p.trace, p.purity, p.min_eig)
            })
            .collect()
    }
}

/// Integrates `d rho/dt = -i[H(t), rho] + L rho` over the whole period.
/// With `reference`, fidelities against `P_psi (x) 1_A` are recorded.
pub fn integrate_master_equation(
    schedule: &Schedule,
    lindblad: &LindbladGenerator,
    rho0: &DensityMatrix,
    reference: Option<&PureState>,
    config: &IntegratorConfig,
) -> Result<Trajectory> {
    integrate_until(schedule, lindblad, rho0, reference, config, schedule.tau)
}

pub fn integrate_until(
    schedule: &Schedule,
    lindblad: &LindbladGenerator,
    rho0: &DensityMatrix,
    reference: Option<&PureState>,
    config: &IntegratorConfig,
    t_end: f64,
) -> Result<Trajectory> {
    config.validate()?;
    let layout = schedule.layout;
    if rho0.layout() != layout || lindblad.layout != layout {
        return Err(Error::DimensionMismatch { expected: layout.total_dim(), found: rho0.layout().total_dim() });
    }
    rho0.validate()?;
    let projector = match reference {
        Some(psi) => {
            if psi.layout().total_dim() != layout.register_dim() {
                return Err(Error::DimensionMismatch { expected: layout.register_dim(), found: psi.layout().total_dim() });
            }
            let da = layout.ancilla_dim();
            Some(psi.projector().kronecker(&CMatrix::identity(da, da)))
        }
        None => None,
    };
    let grid = time_grid(schedule, t_end, config.steps_per_pulse)?;
    let kernels = PulseKernels::new(schedule)?;
    let mut rho = rho0.data().clone();
    let mut frame = projector.clone();
    let mut points = Vec::with_capacity(grid.len() / config.record_every + 2);
    points.push(observe(grid[0], &rho, frame.as_ref(), reference, schedule, config)?);
    let steps = grid.len() - 1;
    for (i, w) in grid.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        let h = b - a;
        match config.method {
            Method::Splitting => {
                rho = lindblad.evolve_matrix(&rho, h / 2.0);
                kernels.conjugate_step(a, b, &mut rho);
                rho = lindblad.evolve_matrix(&rho, h / 2.0);
            }
            Method::Rk4 => {
                let rhs = |t: f64, m: &CMatrix| kernels.commutator(t, m) + lindblad.apply_matrix(m);
                let k1 = rhs(a, &rho);
                let k2 = rhs(a + h / 2.0, &(&rho + &k1 * c(h / 2.0, 0.0)));
                let k3 = rhs(a + h / 2.0, &(&rho + &k2 * c(h / 2.0, 0.0)));
                let k4 = rhs(b, &(&rho + &k3 * c(h, 0.0)));
                rho += (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * c(h / 6.0, 0.0);
            }
        }
        if let Some(q) = frame.as_mut() {
            kernels.conjugate_step(a, b, q);
        }
        if (i + 1) % config.record_every == 0 || i + 1 == steps {
            points.push(observe(b, &rho, frame.as_ref(), reference, schedule, config)?);
        }
    }
    Ok(Trajectory { points, final_state: DensityMatrix::new_unchecked(layout, rho)?, steps })
}

fn observe(
    t: f64,
    rho: &CMatrix,
    frame: Option<&CMatrix>,
    reference: Option<&PureState>,
    schedule: &Schedule,
    config: &IntegratorConfig,
) -> Result<TrajectoryPoint> {
    let state = DensityMatrix::new_unchecked(schedule.layout, rho.clone())?;
    let min_eig = state.min_eigenvalue()?;
    if min_eig < -config.positivity_slack {
        return Err(Error::PositivityViolation { t, min_eig });
    }
    let fidelity = frame.map(|q| (q * rho).trace().re);
    let register_fidelity = match reference {
        Some(psi) => {
            let layout = schedule.layout;
            let reg = partial_trace(rho, layout.total_qubits(), &layout.ancilla_sites())?;
            Some((psi.amplitudes().adjoint() * reg * psi.amplitudes())[(0, 0)].re)
        }
        None => None,
    };
    Ok(TrajectoryPoint { t, fidelity, register_fidelity, trace: state.trace(), purity: state.purity(), min_eig })
}

/// Repeats the period `periods` times from `psi (x) |0_A>`, discarding the
/// ancillas and supplying a fresh block after each period. Returns the
/// register fidelity `<psi| rho_reg |psi>` after every period.
pub fn run_periods(
    schedule: &Schedule,
    lambda_sq: f64,
    psi: &PureState,
    periods: usize,
    config: &IntegratorConfig,
) -> Result<Vec<f64>> {
    let layout = schedule.layout;
    if psi.layout().total_dim() != layout.register_dim() {
        return Err(Error::DimensionMismatch { expected: layout.register_dim(), found: psi.layout().total_dim() });
    }
    let lindblad = LindbladGenerator::new(lambda_sq, layout)?;
    let quiet = IntegratorConfig { record_every: usize::MAX, ..*config };
    let v = psi.amplitudes();
    let mut register = DensityMatrix::from_pure(psi);
    let mut out = Vec::with_capacity(periods);
    for _ in 0..periods {
        let rho0 = register.with_fresh_ancillas(layout.ancilla_qubits)?;
        let traj = integrate_master_equation(schedule, &lindblad, &rho0, None, &quiet)?;
        register = traj.final_state.register_marginal()?;
        out.push((v.adjoint() * register.data() * v)[(0, 0)].re);
    }
    Ok(out)
}

/// Largest elementwise change of the final state when the step is halved.
pub fn step_halving_change(
    schedule: &Schedule,
    lindblad: &LindbladGenerator,
    rho0: &DensityMatrix,
    config: &IntegratorConfig,
) -> Result<f64> {
    let quiet = IntegratorConfig { record_every: usize::MAX, ..*config };
    let coarse = integrate_master_equation(schedule, lindblad, rho0, None, &quiet)?;
    let fine_cfg = IntegratorConfig { steps_per_pulse: config.steps_per_pulse * 2, ..quiet };
    let fine = integrate_master_equation(schedule, lindblad, rho0, None, &fine_cfg)?;
    Ok((coarse.final_state.data() - fine.final_state.data()).iter().map(|z| z.norm()).fold(0.0, f64::max))
}
