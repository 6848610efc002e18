use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::code::{Code, CodeKind};
use super::gates::{perfect5_syndrome_table, Gate, GateKind};
use super::pauli::Pauli;
use crate::error::{Error, Result};
use crate::tensor::{CMatrix, HilbertLayout, LocalIndex};

/// An ordered gate list on a fixed number of qubits.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        for g in &gates {
            if let Some(&s) = g.sites.iter().find(|&&s| s >= n_qubits) {
                return Err(Error::SiteOutOfRange { index: s, qubits: n_qubits });
            }
        }
        Ok(Self { n_qubits, gates })
    }

    /// One gate per line: `NAME site site...`.
    pub fn to_text(&self) -> String {
        self.gates
            .iter()
            .map(|g| {
                let sites: Vec<String> = g.sites.iter().map(|s| s.to_string()).collect();
                format!("{} {}\n", g.kind, sites.join(" "))
            })
            .collect()
    }

    /// Parses [`Circuit::to_text`] output. Blank lines are skipped.
    pub fn parse(text: &str, n_qubits: usize) -> Result<Self> {
        let mut gates = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let parse_err = |message: String| Error::Parse { line: i + 1, message };
            let mut tokens = line.split_whitespace();
            let Some(name) = tokens.next() else { continue };
            let kind: GateKind = name.parse().map_err(|e: Error| parse_err(e.to_string()))?;
            let sites = tokens
                .map(|t| t.parse::<usize>().map_err(|_| parse_err(format!("bad site '{t}'"))))
                .collect::<Result<Vec<_>>>()?;
            gates.push(Gate::new(kind, sites).map_err(|e| parse_err(e.to_string()))?);
        }
        Self::new(n_qubits, gates)
    }

    /// As-soon-as-possible layering: gate indices grouped into layers of
    /// pairwise disjoint gates, preserving order on shared sites.
    pub fn layers(&self) -> Vec<Vec<usize>> {
        let mut ready = vec![0usize; self.n_qubits];
        let mut layers: Vec<Vec<usize>> = Vec::new();
        for (i, g) in self.gates.iter().enumerate() {
            let layer = g.sites.iter().map(|&s| ready[s]).max().unwrap_or(0);
            if layer == layers.len() {
                layers.push(Vec::new());
            }
            layers[layer].push(i);
            for &s in &g.sites {
                ready[s] = layer + 1;
            }
        }
        layers
    }

    pub fn depth(&self) -> usize {
        self.layers().len()
    }

    /// `m <- U m` for the whole circuit.
    pub fn apply_left(&self, m: &mut CMatrix) -> Result<()> {
        for g in &self.gates {
            LocalIndex::new(&g.sites, self.n_qubits)?.apply_left(&g.unitary(), m);
        }
        Ok(())
    }

    /// `m <- U m U^dagger`.
    pub fn conjugate(&self, m: &mut CMatrix) -> Result<()> {
        for g in &self.gates {
            LocalIndex::new(&g.sites, self.n_qubits)?.conjugate(&g.unitary(), m);
        }
        Ok(())
    }

    pub fn unitary(&self) -> Result<CMatrix> {
        let d = 1usize << self.n_qubits;
        let mut u = CMatrix::identity(d, d);
        self.apply_left(&mut u)?;
        Ok(u)
    }

    pub fn inverse(&self) -> Circuit {
        Circuit { n_qubits: self.n_qubits, gates: self.gates.iter().rev().map(Gate::inverse).collect() }
    }
}

impl fmt::Display for Circuit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoveryStyle {
    /// Coherent syndrome extraction onto fresh ancillas, then ancilla-controlled fixes.
    SyndromeCorrect,
    /// Decode to a bare qubit and re-encode; the noiseless action is the identity.
    DecodeReencode,
}

impl fmt::Display for RecoveryStyle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RecoveryStyle::SyndromeCorrect => "syndrome-correct",
            RecoveryStyle::DecodeReencode => "decode-reencode",
        })
    }
}

impl FromStr for RecoveryStyle {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "syndrome-correct" => Ok(RecoveryStyle::SyndromeCorrect),
            "decode-reencode" => Ok(RecoveryStyle::DecodeReencode),
            _ => Err(Error::InvalidParameter(format!("unknown recovery style '{s}'"))),
        }
    }
}

/// A recovery unitary on the register plus a fresh ancilla block.
#[derive(Debug, Clone)]
pub struct RecoveryCircuit {
    pub code: Code,
    pub style: RecoveryStyle,
    pub circuit: Circuit,
    /// Ancilla qubit indices; always directly after the register.
    pub ancilla_block: Vec<usize>,
    unitary: OnceLock<CMatrix>,
}

impl RecoveryCircuit {
    pub fn new(code: Code, style: RecoveryStyle, circuit: Circuit) -> Result<Self> {
        let m = code.n_physical;
        if circuit.n_qubits < m {
            return Err(Error::DimensionMismatch { expected: m, found: circuit.n_qubits });
        }
        HilbertLayout::new(m, circuit.n_qubits - m)?;
        let ancilla_block = (m..circuit.n_qubits).collect();
        Ok(Self { code, style, circuit, ancilla_block, unitary: OnceLock::new() })
    }

    pub fn layout(&self) -> HilbertLayout {
        HilbertLayout { register_qubits: self.code.n_physical, ancilla_qubits: self.ancilla_block.len() }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.circuit.gates
    }

    pub fn depth(&self) -> usize {
        self.circuit.depth()
    }

    /// Full unitary on register and ancillas (computed once).
    pub fn unitary(&self) -> &CMatrix {
        self.unitary.get_or_init(|| self.circuit.unitary().expect("sites validated at construction"))
    }

    /// `V = U (1 (x) |0...0>_A)`, a `d x d_reg` isometry.
    pub fn isometry(&self) -> CMatrix {
        let layout = self.layout();
        let (dr, da) = (layout.register_dim(), layout.ancilla_dim());
        let u = self.unitary();
        CMatrix::from_fn(layout.total_dim(), dr, |i, r| u[(i, r * da)])
    }

    /// Register Kraus operators `K_s = <s|_A V` of the recovery with the
    /// ancilla block traced out afterwards.
    pub fn register_kraus(&self) -> Vec<CMatrix> {
        let layout = self.layout();
        let (dr, da) = (layout.register_dim(), layout.ancilla_dim());
        let u = self.unitary();
        (0..da)
            .map(|s| CMatrix::from_fn(dr, dr, |r, c| u[(r * da + s, c * da)]))
            .filter(|k| k.iter().any(|z| z.norm_sqr() > 0.0))
            .collect()
    }

    /// `rho_reg -> Tr_A V rho_reg V^dagger`.
    pub fn apply_register_channel(&self, rho: &CMatrix) -> CMatrix {
        self.register_kraus().iter().map(|k| k * rho * k.adjoint()).fold(
            CMatrix::zeros(rho.nrows(), rho.ncols()),
            |acc, t| acc + t,
        )
    }
}

/// Standard recovery circuit for a code and style.
pub fn build_recovery(code: &Code, style: RecoveryStyle) -> Result<RecoveryCircuit> {
    let gates = match (code.kind, style) {
        (CodeKind::Repetition(n), RecoveryStyle::SyndromeCorrect) => repetition_syndrome(n)?,
        (CodeKind::Repetition(n), RecoveryStyle::DecodeReencode) => {
            let decode: Vec<Gate> = (1..n).map(|j| Gate::cnot(0, j)).collect();
            decode.iter().cloned().chain(decode.iter().cloned()).collect()
        }
        (CodeKind::Perfect5, RecoveryStyle::SyndromeCorrect) => perfect5_syndrome(code)?,
        (CodeKind::Perfect5, RecoveryStyle::DecodeReencode) => {
            let sites: Vec<usize> = (0..5).collect();
            vec![Gate::new(GateKind::W5, sites.clone())?, Gate::new(GateKind::W5Inv, sites)?]
        }
    };
    let n_qubits = gates.iter().flat_map(|g| g.sites.iter().copied()).max().map_or(code.n_physical, |s| {
        (s + 1).max(code.n_physical)
    });
    RecoveryCircuit::new(code.clone(), style, Circuit::new(n_qubits, gates)?)
}

fn repetition_syndrome(n: usize) -> Result<Vec<Gate>> {
    if n < 3 {
        return Err(Error::Unsupported(format!("syndrome-correct recovery needs repetition-n with n >= 3, got {n}")));
    }
    let ancillas: Vec<usize> = (n..2 * n - 1).collect();
    let mut gates = Vec::new();
    for offset in 0..2 {
        for (i, &a) in ancillas.iter().enumerate() {
            gates.push(Gate::cnot(i + offset, a));
        }
    }
    for q in 0..n {
        let pattern: Vec<bool> = (0..n - 1).map(|i| i == q || i + 1 == q).collect();
        gates.push(Gate::controlled(Pauli::X, &ancillas, &pattern, q)?);
    }
    Ok(gates)
}

fn perfect5_syndrome(code: &Code) -> Result<Vec<Gate>> {
    let ancillas: Vec<usize> = (5..9).collect();
    let mut gates = Vec::new();
    for (g, &a) in code.stabilizers().iter().zip(&ancillas) {
        gates.push(Gate::h(a));
        for (j, p) in g.0.iter().enumerate() {
            if *p != Pauli::I {
                gates.push(Gate::controlled(*p, &[a], &[true], j)?);
            }
        }
        gates.push(Gate::h(a));
    }
    for (s, e) in perfect5_syndrome_table().into_iter().skip(1) {
        let pattern: Vec<bool> = (0..4).map(|i| (s >> (3 - i)) & 1 == 1).collect();
        let (q, p) = e.0.iter().enumerate().find(|(_, p)| **p != Pauli::I).expect("weight-one error");
        gates.push(Gate::controlled(*p, &ancillas, &pattern, q)?);
    }
    Ok(gates)
}
