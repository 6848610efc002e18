//! Dense simulator for quantum error-correction cycles under Markovian
//! noise, in both the discrete-time (instantaneous gate) model and the
//! continuous-time model with finite-width gate pulses.

pub mod bounds;
pub mod codes;
pub mod continuous;
pub mod discrete;
pub mod error;
pub mod harness;
pub mod noise;
pub mod pulse;
pub mod tensor;
pub mod tolerance;

pub use error::{Error, Result};
