use thiserror::Error;

/// Errors raised across the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {qubits} qubits exceeds the configured maximum of {max} qubits")]
    DimensionTooLarge { qubits: usize, max: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("qubit index {index} out of range for {qubits} qubits")]
    SiteOutOfRange { index: usize, qubits: usize },

    #[error("duplicate qubit index {0}")]
    DuplicateSite(usize),

    #[error("eigensolver did not converge on a {0}x{0} matrix")]
    EigenNonConvergence(usize),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sample state is not in the code space (overlap {overlap:.3e})")]
    NotInCodeSpace { overlap: f64 },

    #[error("unsupported combination: {0}")]
    Unsupported(String),

    #[error("schedule overflow: circuit depth {depth} x width {width} exceeds period {tau}")]
    ScheduleOverflow { depth: usize, width: f64, tau: f64 },

    #[error("gate is not unitary (residual {0:.3e})")]
    NonUnitary(f64),

    #[error("time {t} outside [0, {tau}]")]
    TimeOutOfRange { t: f64, tau: f64 },

    #[error("ambiguous ordering: non-commuting pulses on overlapping sites share center {0}")]
    AmbiguousOrder(f64),

    #[error("grid too coarse: spacing {spacing:.3e} exceeds {limit:.3e}")]
    GridTooCoarse { spacing: f64, limit: f64 },

    #[error("positivity violated at t={t}: smallest eigenvalue {min_eig:.3e}")]
    PositivityViolation { t: f64, min_eig: f64 },

    #[error("truncation order {order} leaves tail {tail:.3e} above tolerance; need order {required}")]
    TruncationTooLow { order: usize, tail: f64, required: usize },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
