//! Codes, coherent recovery circuits and the correction-property verifier.

mod circuit;
mod code;
mod gates;
mod pauli;
mod verify;

pub use circuit::{build_recovery, Circuit, RecoveryCircuit, RecoveryStyle};
pub use code::{Code, CodeKind, PERFECT5_STABILIZERS};
pub use gates::{Gate, GateKind};
pub use pauli::{Pauli, PauliString};
pub use verify::{
    logical_readout, verify_correction_property, CorrectionReport, LogicalReadout, SampleReport,
    B_FLAG_THRESHOLD,
};
