use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use super::code::Code;
use super::pauli::{Pauli, PauliString};
use crate::error::{Error, Result};
use crate::tensor::{c, CMatrix};

/// Named gates of the recovery circuits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum GateKind {
    X,
    Y,
    Z,
    H,
    Cnot,
    Cz,
    /// Toffoli with both controls on `|1>`.
    Ccx,
    /// Pauli on the last site, applied iff the control sites read `pattern`.
    Controlled { target: Pauli, pattern: Vec<bool> },
    /// Perfect-5 decoder: `E_s |b_L> -> |b> |s>`.
    W5,
    W5Inv,
}

impl GateKind {
    pub fn arity(&self) -> usize {
        match self {
            GateKind::X | GateKind::Y | GateKind::Z | GateKind::H => 1,
            GateKind::Cnot | GateKind::Cz => 2,
            GateKind::Ccx => 3,
            GateKind::Controlled { pattern, .. } => pattern.len() + 1,
            GateKind::W5 | GateKind::W5Inv => 5,
        }
    }

    pub fn is_self_inverse(&self) -> bool {
        !matches!(self, GateKind::W5 | GateKind::W5Inv)
    }

    pub fn inverse(&self) -> GateKind {
        match self {
            GateKind::W5 => GateKind::W5Inv,
            GateKind::W5Inv => GateKind::W5,
            other => other.clone(),
        }
    }

    /// Local unitary; site `0` of the gate is the most significant local bit.
    pub fn unitary(&self) -> CMatrix {
        match self {
            GateKind::X => Pauli::X.matrix(),
            GateKind::Y => Pauli::Y.matrix(),
            GateKind::Z => Pauli::Z.matrix(),
            GateKind::H => hadamard(),
            GateKind::Cnot => controlled(Pauli::X, &[true]),
            GateKind::Cz => controlled(Pauli::Z, &[true]),
            GateKind::Ccx => controlled(Pauli::X, &[true, true]),
            GateKind::Controlled { target, pattern } => controlled(*target, pattern),
            GateKind::W5 => perfect5_decoder().clone(),
            GateKind::W5Inv => perfect5_decoder().adjoint(),
        }
    }
}

fn hadamard() -> CMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CMatrix::from_row_slice(2, 2, &[c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)])
}

fn controlled(target: Pauli, pattern: &[bool]) -> CMatrix {
    let k = pattern.len();
    let d = 2 << k;
    let hit = pattern.iter().fold(0usize, |acc, &b| acc * 2 + b as usize);
    let p = target.matrix();
    let mut u = CMatrix::identity(d, d);
    for a in 0..2 {
        for b in 0..2 {
            u[(2 * hit + a, 2 * hit + b)] = p[(a, b)];
        }
    }
    u
}

/// The 15 single-qubit Paulis on five qubits with their syndromes, plus the
/// identity (syndrome 0), ordered by syndrome index.
pub(crate) fn perfect5_syndrome_table() -> Vec<(usize, PauliString)> {
    let code = Code::perfect5();
    let mut table = vec![(0usize, PauliString(vec![Pauli::I; 5]))];
    for q in 0..5 {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let e = PauliString::single(5, q, p);
            let s = code.syndrome_of(&e).iter().fold(0usize, |acc, &b| acc * 2 + b as usize);
            table.push((s, e));
        }
    }
    table.sort_by_key(|(s, _)| *s);
    table
}

fn perfect5_decoder() -> &'static CMatrix {
    static W: OnceLock<CMatrix> = OnceLock::new();
    W.get_or_init(|| {
        let code = Code::perfect5();
        let mut w = CMatrix::zeros(32, 32);
        for (s, e) in perfect5_syndrome_table() {
            let em = e.matrix();
            for (b, logical) in [&code.logical_zero, &code.logical_one].into_iter().enumerate() {
                let src = &em * logical.amplitudes();
                let row = (b << 4) | s;
                for col in 0..32 {
                    w[(row, col)] = src[col].conj();
                }
            }
        }
        w
    })
}

/// A gate placed on specific qubits.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gate {
    pub kind: GateKind,
    pub sites: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, sites: Vec<usize>) -> Result<Self> {
        if sites.len() != kind.arity() {
            return Err(Error::InvalidParameter(format!(
                "{} takes {} sites, got {}",
                kind,
                kind.arity(),
                sites.len()
            )));
        }
        for (i, s) in sites.iter().enumerate() {
            if sites[..i].contains(s) {
                return Err(Error::DuplicateSite(*s));
            }
        }
        Ok(Self { kind, sites })
    }

    pub fn x(q: usize) -> Self {
        Self { kind: GateKind::X, sites: vec![q] }
    }

    pub fn h(q: usize) -> Self {
        Self { kind: GateKind::H, sites: vec![q] }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self { kind: GateKind::Cnot, sites: vec![control, target] }
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self { kind: GateKind::Cz, sites: vec![a, b] }
    }

    /// Multi-controlled Pauli; two all-ones controls on X become the Toffoli.
    pub fn controlled(target_pauli: Pauli, controls: &[usize], pattern: &[bool], target: usize) -> Result<Self> {
        if controls.len() != pattern.len() || controls.is_empty() {
            return Err(Error::InvalidParameter("control sites and pattern must match".into()));
        }
        let mut sites = controls.to_vec();
        sites.push(target);
        let kind = match (target_pauli, pattern) {
            (Pauli::X, [true]) => GateKind::Cnot,
            (Pauli::Z, [true]) => GateKind::Cz,
            (Pauli::X, [true, true]) => GateKind::Ccx,
            _ => GateKind::Controlled { target: target_pauli, pattern: pattern.to_vec() },
        };
        Self::new(kind, sites)
    }

    pub fn unitary(&self) -> CMatrix {
        self.kind.unitary()
    }

    pub fn inverse(&self) -> Gate {
        Gate { kind: self.kind.inverse(), sites: self.sites.clone() }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateKind::X => f.write_str("X"),
            GateKind::Y => f.write_str("Y"),
            GateKind::Z => f.write_str("Z"),
            GateKind::H => f.write_str("H"),
            GateKind::Cnot => f.write_str("CNOT"),
            GateKind::Cz => f.write_str("CZ"),
            GateKind::Ccx => f.write_str("CCX-coherent"),
            GateKind::Controlled { target, pattern } => {
                write!(f, "MC{}:", target.as_char())?;
                pattern.iter().try_for_each(|&b| f.write_str(if b { "1" } else { "0" }))
            }
            GateKind::W5 => f.write_str("W5"),
            GateKind::W5Inv => f.write_str("W5INV"),
        }
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let kind = match s {
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "H" => GateKind::H,
            "CNOT" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            "CCX-coherent" => GateKind::Ccx,
            "W5" => GateKind::W5,
            "W5INV" => GateKind::W5Inv,
            other => {
                let rest = other
                    .strip_prefix("MC")
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown gate '{other}'")))?;
                let (p, bits) = rest
                    .split_once(':')
                    .ok_or_else(|| Error::InvalidParameter(format!("malformed controlled gate '{other}'")))?;
                let mut chars = p.chars();
                let target = match (chars.next(), chars.next()) {
                    (Some(ch), None) => Pauli::from_char(ch)?,
                    _ => return Err(Error::InvalidParameter(format!("malformed controlled gate '{other}'"))),
                };
                let pattern = bits
                    .chars()
                    .map(|b| match b {
                        '0' => Ok(false),
                        '1' => Ok(true),
                        _ => Err(Error::InvalidParameter(format!("bad control pattern '{bits}'"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                if pattern.is_empty() {
                    return Err(Error::InvalidParameter("empty control pattern".into()));
                }
                GateKind::Controlled { target, pattern }
            }
        };
        Ok(kind)
    }
}
