//! Numerical tolerances shared by every module.

/// Default tolerances. Callers that need looser checks build their own
/// record instead of sprinkling literals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub hermiticity: f64,
    pub trace: f64,
    pub normalization: f64,
    pub positivity_slack: f64,
    pub completeness: f64,
    pub unitarity: f64,
    /// Largest register + ancilla qubit count a dense operator may span.
    pub max_qubits: usize,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        hermiticity: 1e-12,
        trace: 1e-12,
        normalization: 1e-12,
        positivity_slack: 1e-10,
        completeness: 1e-10,
        unitarity: 1e-10,
        max_qubits: 12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

pub const TOL: Tolerances = Tolerances::DEFAULT;
