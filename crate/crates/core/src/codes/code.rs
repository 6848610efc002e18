use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::pauli::{Pauli, PauliString};
use crate::error::{Error, Result};
use crate::tensor::{c, CMatrix, CVector, HilbertLayout, PureState, C64};
use crate::tolerance::TOL;

/// Supported code families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum CodeKind {
    /// `|0...0>`, `|1...1>` on `n` qubits; `n = 1` is a bare qubit.
    Repetition(usize),
    /// The five-qubit perfect code.
    Perfect5,
}

impl fmt::Display for CodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeKind::Repetition(n) => write!(f, "repetition-{n}"),
            CodeKind::Perfect5 => write!(f, "perfect-5"),
        }
    }
}

impl FromStr for CodeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "perfect-5" {
            return Ok(CodeKind::Perfect5);
        }
        s.strip_prefix("repetition-")
            .and_then(|n| n.parse::<usize>().ok())
            .filter(|&n| (1..=TOL.max_qubits).contains(&n))
            .map(CodeKind::Repetition)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown code '{s}'")))
    }
}

impl TryFrom<String> for CodeKind {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<CodeKind> for String {
    fn from(k: CodeKind) -> String {
        k.to_string()
    }
}

pub const PERFECT5_STABILIZERS: [&str; 4] = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"];

/// A two-dimensional code space inside an `n_physical`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct Code {
    pub kind: CodeKind,
    pub n_physical: usize,
    pub logical_zero: PureState,
    pub logical_one: PureState,
}

impl Code {
    pub fn new(kind: CodeKind) -> Result<Self> {
        match kind {
            CodeKind::Repetition(n) => Self::repetition(n),
            CodeKind::Perfect5 => Ok(Self::perfect5()),
        }
    }

    pub fn repetition(n: usize) -> Result<Self> {
        let layout = HilbertLayout::register_only(n)?;
        let d = layout.total_dim();
        Ok(Self {
            kind: CodeKind::Repetition(n),
            n_physical: n,
            logical_zero: PureState::basis(layout, 0)?,
            logical_one: PureState::basis(layout, d - 1)?,
        })
    }

    pub fn perfect5() -> Self {
        let layout = HilbertLayout { register_qubits: 5, ancilla_qubits: 0 };
        let d = 32;
        // Project |00000> onto the joint +1 eigenspace of the stabilizers.
        let mut v = CVector::zeros(d);
        v[0] = c(1.0, 0.0);
        for g in PERFECT5_STABILIZERS {
            let m = PauliString::parse(g).expect("static stabilizer").matrix();
            v = (&v + &m * &v) * c(0.5, 0.0);
        }
        let zero = PureState::normalized(layout, v).expect("nonzero projection");
        let xbar = PauliString(vec![Pauli::X; 5]).matrix();
        let one = PureState::new(layout, &xbar * zero.amplitudes()).expect("unitary image");
        Self { kind: CodeKind::Perfect5, n_physical: 5, logical_zero: zero, logical_one: one }
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    pub fn layout(&self) -> HilbertLayout {
        self.logical_zero.layout()
    }

    /// Stabilizer generators (the code is their joint +1 eigenspace).
    pub fn stabilizers(&self) -> Vec<PauliString> {
        match self.kind {
            CodeKind::Perfect5 => PERFECT5_STABILIZERS
                .iter()
                .map(|g| PauliString::parse(g).expect("static stabilizer"))
                .collect(),
            CodeKind::Repetition(n) => (0..n.saturating_sub(1))
                .map(|i| {
                    let mut v = vec![Pauli::I; n];
                    v[i] = Pauli::Z;
                    v[i + 1] = Pauli::Z;
                    PauliString(v)
                })
                .collect(),
        }
    }

    /// `alpha |0_L> + beta |1_L>`.
    pub fn encode(&self, alpha: C64, beta: C64) -> Result<PureState> {
        let n = alpha.norm_sqr() + beta.norm_sqr();
        if (n - 1.0).abs() > TOL.normalization {
            return Err(Error::InvalidParameter(format!("|alpha|^2 + |beta|^2 = {n} != 1")));
        }
        let v = self.logical_zero.amplitudes() * alpha + self.logical_one.amplitudes() * beta;
        PureState::new(self.layout(), v)
    }

    /// Verification frame `{|0_L>, |1_L>, |+_L>, |i_L>}`.
    pub fn frame(&self) -> Vec<PureState> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [
            (c(1.0, 0.0), c(0.0, 0.0)),
            (c(0.0, 0.0), c(1.0, 0.0)),
            (c(s, 0.0), c(s, 0.0)),
            (c(s, 0.0), c(0.0, s)),
        ]
        .into_iter()
        .map(|(a, b)| self.encode(a, b).expect("normalized frame"))
        .collect()
    }

    pub fn code_projector(&self) -> CMatrix {
        self.logical_zero.projector() + self.logical_one.projector()
    }

    /// `<psi| P_code |psi>`.
    pub fn code_overlap(&self, psi: &PureState) -> f64 {
        self.logical_zero.inner(psi).norm_sqr() + self.logical_one.inner(psi).norm_sqr()
    }

    /// Bit `i` is set iff `error` anticommutes with stabilizer generator `i`.
    pub fn syndrome_of(&self, error: &PauliString) -> Vec<bool> {
        self.stabilizers().iter().map(|g| g.anticommutes(error)).collect()
    }
}
