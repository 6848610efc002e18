//! Finite-width pulses `H(t) = sum_a f_a(t) h_a`, their compilation from gate
//! circuits, the gate-speed constraint and the instantaneous-gate limit.

mod compile;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

pub use compile::{compile_circuit, compile_recovery, delta_limit_schedule, principal_generator, DeltaLimit, InstantGate};

use crate::codes::Gate;
use crate::error::{Error, Result};
use crate::tensor::{c, embed, hermitian_eigen, operator_norm, CMatrix, HermitianOperator, HilbertLayout};

/// Default speed-constraint constant `C`.
pub const DEFAULT_SPEED_CONSTANT: f64 = 2.0 * PI;

/// Relative slack for time comparisons (support edges, overlaps).
const TIME_SLACK: f64 = 1e-12;

/// Unit-area pulse envelopes supported on `[center - width/2, center + width/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PulseShape {
    Box,
    #[default]
    RaisedCosine,
    /// Gaussian with `sigma = width / 6`, cut at the support edges and renormalized.
    TruncatedGaussian,
}

const GAUSS_SIGMAS: f64 = 3.0;

fn gauss_mass() -> f64 {
    libm::erf(GAUSS_SIGMAS / std::f64::consts::SQRT_2)
}

impl PulseShape {
    /// Envelope `f(s)` at offset `s` from the center.
    pub fn density(self, s: f64, width: f64) -> f64 {
        if s.abs() > width / 2.0 {
            return 0.0;
        }
        match self {
            PulseShape::Box => 1.0 / width,
            PulseShape::RaisedCosine => (1.0 + (2.0 * PI * s / width).cos()) / width,
            PulseShape::TruncatedGaussian => {
                let sigma = width / (2.0 * GAUSS_SIGMAS);
                (-0.5 * (s / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt() * gauss_mass())
            }
        }
    }

    /// `int_{-inf}^{s} f`.
    pub fn cumulative(self, s: f64, width: f64) -> f64 {
        let h = width / 2.0;
        if s <= -h {
            return 0.0;
        }
        if s >= h {
            return 1.0;
        }
        match self {
            PulseShape::Box => (s + h) / width,
            PulseShape::RaisedCosine => (s + width / (2.0 * PI) * (2.0 * PI * s / width).sin()) / width + 0.5,
            PulseShape::TruncatedGaussian => {
                let sigma = width / (2.0 * GAUSS_SIGMAS);
                0.5 + 0.5 * libm::erf(s / (sigma * std::f64::consts::SQRT_2)) / gauss_mass()
            }
        }
    }

    /// `sup_s f(s)`.
    pub fn peak(self, width: f64) -> f64 {
        self.density(0.0, width)
    }

    /// `sup_s |f'(s)|`.
    pub fn peak_slope(self, width: f64) -> f64 {
        match self {
            PulseShape::Box => f64::INFINITY,
            PulseShape::RaisedCosine => 2.0 * PI / (width * width),
            PulseShape::TruncatedGaussian => {
                let sigma = width / (2.0 * GAUSS_SIGMAS);
                self.peak(width) * (-0.5f64).exp() / sigma
            }
        }
    }
}

#[derive(Debug, Clone)]
struct Spectrum {
    values: Vec<f64>,
    vectors: CMatrix,
}

/// One pulse `f(t) h` acting on `sites`; `generator` is the local `h`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "PulseRecord", into = "PulseRecord")]
pub struct Pulse {
    pub shape: PulseShape,
    pub center: f64,
    pub width: f64,
    pub sites: Vec<usize>,
    pub generator: CMatrix,
    /// Gate this pulse was compiled from, if any.
    pub gate: Option<Gate>,
    spectrum: OnceLock<Spectrum>,
}

impl PartialEq for Pulse {
    fn eq(&self, other: &Self) -> bool {
        self.shape == other.shape
            && self.center == other.center
            && self.width == other.width
            && self.sites == other.sites
            && self.generator == other.generator
            && self.gate == other.gate
    }
}

impl Pulse {
    pub fn new(shape: PulseShape, center: f64, width: f64, sites: Vec<usize>, generator: CMatrix) -> Result<Self> {
        if !(width > 0.0 && width.is_finite() && center.is_finite()) {
            return Err(Error::InvalidParameter(format!("pulse width {width} / center {center} invalid")));
        }
        let ld = 1usize << sites.len();
        if generator.nrows() != ld || generator.ncols() != ld {
            return Err(Error::DimensionMismatch { expected: ld, found: generator.nrows() });
        }
        HermitianOperator::new(HilbertLayout::register_only(sites.len())?, generator.clone())?;
        Ok(Self { shape, center, width, sites, generator, gate: None, spectrum: OnceLock::new() })
    }

    pub fn with_gate(mut self, gate: Gate) -> Self {
        self.gate = Some(gate);
        self
    }

    pub fn start(&self) -> f64 {
        self.center - self.width / 2.0
    }

    pub fn end(&self) -> f64 {
        self.center + self.width / 2.0
    }

    pub fn envelope(&self, t: f64) -> f64 {
        self.shape.density(t - self.center, self.width)
    }

    /// `F(t) = int_{-inf}^{t} f`.
    pub fn cumulative(&self, t: f64) -> f64 {
        self.shape.cumulative(t - self.center, self.width)
    }

    fn spectrum(&self) -> &Spectrum {
        self.spectrum.get_or_init(|| {
            let (values, vectors) = hermitian_eigen(&self.generator).expect("generator validated as Hermitian");
            Spectrum { values, vectors }
        })
    }

    /// `exp(-i a h)` on the pulse sites.
    pub fn evolution(&self, a: f64) -> CMatrix {
        let s = self.spectrum();
        let phases = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            s.values.len(),
            s.values.iter().map(|&v| c(0.0, -a * v).exp()),
        ));
        &s.vectors * phases * s.vectors.adjoint()
    }

    /// `max |eigenvalue(h)|`.
    pub fn generator_norm(&self) -> f64 {
        self.spectrum().values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct PulseRecord {
    shape: PulseShape,
    center: f64,
    width: f64,
    sites: Vec<usize>,
    /// Row-major `[re, im]` pairs.
    generator: Vec<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    gate: Option<String>,
}

impl From<Pulse> for PulseRecord {
    fn from(p: Pulse) -> Self {
        let d = p.generator.nrows();
        let generator = (0..d * d).map(|k| {
            let z = p.generator[(k / d, k % d)];
            [z.re, z.im]
        });
        PulseRecord {
            shape: p.shape,
            center: p.center,
            width: p.width,
            sites: p.sites,
            generator: generator.collect(),
            gate: p.gate.map(|g| g.kind.to_string()),
        }
    }
}

impl TryFrom<PulseRecord> for Pulse {
    type Error = Error;

    fn try_from(r: PulseRecord) -> Result<Self> {
        let d = 1usize << r.sites.len();
        if r.generator.len() != d * d {
            return Err(Error::DimensionMismatch { expected: d * d, found: r.generator.len() });
        }
        let generator = CMatrix::from_fn(d, d, |i, j| {
            let [re, im] = r.generator[i * d + j];
            c(re, im)
        });
        let gate = r
            .gate
            .map(|name| Gate::new(name.parse()?, r.sites.clone()))
            .transpose()?;
        let pulse = Pulse::new(r.shape, r.center, r.width, r.sites, generator)?;
        Ok(match gate {
            Some(g) => pulse.with_gate(g),
            None => pulse,
        })
    }
}

/// Pulses over one working period `[0, tau]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScheduleRecord", into = "ScheduleRecord")]
pub struct Schedule {
    pub layout: HilbertLayout,
    pub tau: f64,
    /// Narrowest admissible pulse width.
    pub t0_min: f64,
    pub pulses: Vec<Pulse>,
}

#[derive(Serialize, Deserialize)]
struct ScheduleRecord {
    register_qubits: usize,
    ancilla_qubits: usize,
    tau: f64,
    t0_min: f64,
    pulses: Vec<Pulse>,
}

impl From<Schedule> for ScheduleRecord {
    fn from(s: Schedule) -> Self {
        ScheduleRecord {
            register_qubits: s.layout.register_qubits,
            ancilla_qubits: s.layout.ancilla_qubits,
            tau: s.tau,
            t0_min: s.t0_min,
            pulses: s.pulses,
        }
    }
}

impl TryFrom<ScheduleRecord> for Schedule {
    type Error = Error;

    fn try_from(r: ScheduleRecord) -> Result<Self> {
        Schedule::new(HilbertLayout::new(r.register_qubits, r.ancilla_qubits)?, r.tau, r.t0_min, r.pulses)
    }
}

impl Schedule {
    pub fn new(layout: HilbertLayout, tau: f64, t0_min: f64, pulses: Vec<Pulse>) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) || !(t0_min > 0.0 && t0_min.is_finite()) {
            return Err(Error::InvalidParameter(format!("tau {tau} and t0_min {t0_min} must be positive")));
        }
        let n = layout.total_qubits();
        let slack = TIME_SLACK * tau;
        for p in &pulses {
            crate::tensor::LocalIndex::new(&p.sites, n)?;
            if p.width < t0_min * (1.0 - TIME_SLACK) {
                return Err(Error::InvalidParameter(format!("pulse width {} below t0_min {t0_min}", p.width)));
            }
            if p.start() < -slack || p.end() > tau + slack {
                return Err(Error::InvalidParameter(format!(
                    "pulse support [{}, {}] outside [0, {tau}]",
                    p.start(),
                    p.end()
                )));
            }
        }
        for (i, a) in pulses.iter().enumerate() {
            for b in &pulses[..i] {
                let shares = a.sites.iter().any(|s| b.sites.contains(s));
                if shares && a.start() < b.end() - slack && b.start() < a.end() - slack {
                    return Err(Error::InvalidParameter(format!(
                        "pulses at {} and {} overlap on shared sites",
                        b.center, a.center
                    )));
                }
            }
        }
        Ok(Self { layout, tau, t0_min, pulses })
    }

    pub fn empty(layout: HilbertLayout, tau: f64, t0_min: f64) -> Result<Self> {
        Self::new(layout, tau, t0_min, Vec::new())
    }

    pub fn n_qubits(&self) -> usize {
        self.layout.total_qubits()
    }

    /// Pulse indices sorted by start time (ties by first site).
    pub fn start_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.pulses.len()).collect();
        idx.sort_by(|&a, &b| {
            let (pa, pb) = (&self.pulses[a], &self.pulses[b]);
            pa.start().total_cmp(&pb.start()).then(pa.sites.cmp(&pb.sites))
        });
        idx
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(t >= -TIME_SLACK * self.tau && t <= self.tau * (1.0 + TIME_SLACK)) {
            return Err(Error::TimeOutOfRange { t, tau: self.tau });
        }
        Ok(())
    }

    /// `H(t)` on the full register and ancilla space.
    pub fn evaluate_hamiltonian(&self, t: f64) -> Result<HermitianOperator> {
        self.check_time(t)?;
        let d = self.layout.total_dim();
        let mut h = CMatrix::zeros(d, d);
        for p in &self.pulses {
            let f = p.envelope(t);
            if f != 0.0 {
                h += embed(&p.generator, &p.sites, self.n_qubits())? * c(f, 0.0);
            }
        }
        HermitianOperator::new(self.layout, h)
    }

    pub fn check_speed_constraint(&self, constant: f64) -> Result<SpeedReport> {
        if !(constant > 0.0) {
            return Err(Error::InvalidParameter(format!("speed constant {constant} must be positive")));
        }
        let limit = constant / self.t0_min;
        let pulses: Vec<PulseSpeed> = self
            .pulses
            .iter()
            .map(|p| {
                let sup = p.shape.peak(p.width) * 2.0 * operator_norm(&p.generator)?;
                Ok(PulseSpeed { sup, pass: sup <= limit * (1.0 + TIME_SLACK) })
            })
            .collect::<Result<_>>()?;
        let all_pass = pulses.iter().all(|p| p.pass);
        Ok(SpeedReport { constant, t0_min: self.t0_min, limit, pulses, all_pass })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseSpeed {
    /// `sup_t f(t) * 2 ||h||`.
    pub sup: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpeedReport {
    pub constant: f64,
    pub t0_min: f64,
    /// `C / t0_min`.
    pub limit: f64,
    pub pulses: Vec<PulseSpeed>,
    pub all_pass: bool,
}
