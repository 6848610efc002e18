use nalgebra::DVector;
use serde::Serialize;

use super::{Pulse, PulseShape, Schedule, TIME_SLACK};
use crate::codes::{Circuit, Gate, RecoveryCircuit};
use crate::error::{Error, Result};
use crate::tensor::{c, embed, hermitian_eigen, unitarity_residual, CMatrix, HilbertLayout, LocalIndex};
use crate::tolerance::TOL;

/// Mixing angles for the Hermitian pencil `cos(a) Re U + sin(a) Im U`. Its
/// eigenvectors diagonalize `U` unless two distinct eigenphases sum to `2a`,
/// so a few unrelated angles are tried.
const PENCIL_ANGLES: [f64; 3] = [0.271_828_182_8, 0.693_147_180_5, 1.414_213_562_3];

/// Hermitian `g` with `U = exp(-i g)` and spectrum in `[-pi, pi)`
/// (eigenphases of `U` taken in `(-pi, pi]`).
pub fn principal_generator(u: &CMatrix) -> Result<CMatrix> {
    let residual = unitarity_residual(u);
    if residual > TOL.unitarity {
        return Err(Error::NonUnitary(residual));
    }
    let re = (u + u.adjoint()) * c(0.5, 0.0);
    let im = (u - u.adjoint()) * c(0.0, -0.5);
    for angle in PENCIL_ANGLES {
        let pencil = &re * c(angle.cos(), 0.0) + &im * c(angle.sin(), 0.0);
        let (_, v) = hermitian_eigen(&pencil)?;
        let phases: Vec<f64> = (0..v.ncols())
            .map(|j| {
                let col = v.column(j);
                let theta = (col.adjoint() * u * col)[(0, 0)].arg();
                if theta <= -std::f64::consts::PI + 1e-12 {
                    std::f64::consts::PI
                } else {
                    theta
                }
            })
            .collect();
        let diag = |f: &dyn Fn(f64) -> crate::tensor::C64| {
            CMatrix::from_diagonal(&DVector::from_iterator(phases.len(), phases.iter().map(|&p| f(p))))
        };
        let g = &v * diag(&|p| c(-p, 0.0)) * v.adjoint();
        let back = &v * diag(&|p| c(0.0, p).exp()) * v.adjoint();
        if (back - u).iter().all(|z| z.norm() <= TOL.unitarity) {
            return Ok((&g + g.adjoint()) * c(0.5, 0.0));
        }
    }
    Err(Error::Unsupported("no generator found: unitary spectrum defeats the eigenvector pencil".into()))
}

/// Places the ASAP layers of `circuit` in consecutive slots of width `t0`
/// ending at `tau`, one pulse per gate.
pub fn compile_circuit(
    circuit: &Circuit,
    layout: HilbertLayout,
    t0: f64,
    tau: f64,
    shape: PulseShape,
) -> Result<Schedule> {
    if circuit.n_qubits > layout.total_qubits() {
        return Err(Error::DimensionMismatch { expected: layout.total_qubits(), found: circuit.n_qubits });
    }
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(Error::InvalidParameter(format!("pulse width {t0} must be positive")));
    }
    let layers = circuit.layers();
    let depth = layers.len();
    if depth as f64 * t0 > tau * (1.0 + TIME_SLACK) {
        return Err(Error::ScheduleOverflow { depth, width: t0, tau });
    }
    let mut pulses = Vec::with_capacity(circuit.gates.len());
    for (j, layer) in layers.iter().enumerate() {
        let center = tau - (depth - j) as f64 * t0 + 0.5 * t0;
        for &gi in layer {
            let gate = &circuit.gates[gi];
            let g = principal_generator(&gate.unitary())?;
            pulses.push(Pulse::new(shape, center, t0, gate.sites.clone(), g)?.with_gate(gate.clone()));
        }
    }
    Schedule::new(layout, tau, t0, pulses)
}

pub fn compile_recovery(recovery: &RecoveryCircuit, t0: f64, tau: f64, shape: PulseShape) -> Result<Schedule> {
    compile_circuit(&recovery.circuit, recovery.layout(), t0, tau, shape)
}

/// A pulse collapsed to an instantaneous gate at its center.
#[derive(Debug, Clone, Serialize)]
pub struct InstantGate {
    pub time: f64,
    pub sites: Vec<usize>,
    #[serde(skip)]
    pub unitary: CMatrix,
    #[serde(serialize_with = "serialize_gate_label")]
    pub gate: Option<Gate>,
}

fn serialize_gate_label<S: serde::Serializer>(g: &Option<Gate>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match g {
        Some(g) => s.serialize_some(&g.kind.to_string()),
        None => s.serialize_none(),
    }
}

/// Time-ordered instantaneous gates; simultaneous gates appear in site order.
#[derive(Debug, Clone, Serialize)]
pub struct DeltaLimit {
    pub n_qubits: usize,
    pub gates: Vec<InstantGate>,
}

impl DeltaLimit {
    /// The gate list as a circuit; every pulse must carry its gate label.
    pub fn to_circuit(&self) -> Result<Circuit> {
        let gates = self
            .gates
            .iter()
            .map(|g| g.gate.clone().ok_or_else(|| Error::Unsupported("pulse without gate label".into())))
            .collect::<Result<Vec<_>>>()?;
        Circuit::new(self.n_qubits, gates)
    }

    pub fn unitary(&self) -> Result<CMatrix> {
        let d = 1usize << self.n_qubits;
        let mut u = CMatrix::identity(d, d);
        for g in &self.gates {
            LocalIndex::new(&g.sites, self.n_qubits)?.apply_left(&g.unitary, &mut u);
        }
        Ok(u)
    }
}

pub fn delta_limit_schedule(schedule: &Schedule) -> Result<DeltaLimit> {
    let mut order: Vec<&Pulse> = schedule.pulses.iter().collect();
    order.sort_by(|a, b| a.center.total_cmp(&b.center).then(a.sites.cmp(&b.sites)));
    let slack = TIME_SLACK * schedule.tau;
    for (i, a) in order.iter().enumerate() {
        for b in order[i + 1..].iter().take_while(|b| b.center - a.center <= slack) {
            if a.sites.iter().any(|s| b.sites.contains(s)) && !generators_commute(a, b)? {
                return Err(Error::AmbiguousOrder(a.center));
            }
        }
    }
    Ok(DeltaLimit {
        n_qubits: schedule.n_qubits(),
        gates: order
            .into_iter()
            .map(|p| InstantGate { time: p.center, sites: p.sites.clone(), unitary: p.evolution(1.0), gate: p.gate.clone() })
            .collect(),
    })
}

fn generators_commute(a: &Pulse, b: &Pulse) -> Result<bool> {
    let mut union = a.sites.clone();
    union.extend(b.sites.iter().filter(|s| !a.sites.contains(s)));
    let pos = |sites: &[usize]| -> Vec<usize> {
        sites.iter().map(|s| union.iter().position(|u| u == s).expect("site in union")).collect()
    };
    let ha = embed(&a.generator, &pos(&a.sites), union.len())?;
    let hb = embed(&b.generator, &pos(&b.sites), union.len())?;
    let comm = &ha * &hb - &hb * &ha;
    Ok(comm.iter().all(|z| z.norm() <= TOL.hermiticity * 100.0))
}
