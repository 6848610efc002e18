//! Dense complex linear algebra over multi-qubit Hilbert spaces.
//!
//! Basis ordering: qubit 0 is the most significant bit of a basis index, so
//! `|q0 q1 ... q(n-1)>` has index `q0 * 2^(n-1) + ... + q(n-1)`. Register
//! qubits occupy indices `0..M`, ancillas `M..M+A`.

mod local;
mod ops;

pub use local::{replace_qubit, LocalIndex};
pub use ops::{
    adjoint_residual, embed, hermitian_eigen, hermitian_eigenvalues, kron_vec, operator_norm, partial_trace,
    state_fidelity, tensor_product, trace_norm, unitarity_residual,
};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::TOL;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Register/ancilla split of a qubit Hilbert space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HilbertLayout {
    pub register_qubits: usize,
    pub ancilla_qubits: usize,
}

impl HilbertLayout {
    pub fn new(register_qubits: usize, ancilla_qubits: usize) -> Result<Self> {
        let total = register_qubits + ancilla_qubits;
        if total > TOL.max_qubits {
            return Err(Error::DimensionTooLarge { qubits: total, max: TOL.max_qubits });
        }
        Ok(Self { register_qubits, ancilla_qubits })
    }

    pub fn register_only(register_qubits: usize) -> Result<Self> {
        Self::new(register_qubits, 0)
    }

    pub fn total_qubits(&self) -> usize {
        self.register_qubits + self.ancilla_qubits
    }

    pub fn total_dim(&self) -> usize {
        1 << self.total_qubits()
    }

    pub fn register_dim(&self) -> usize {
        1 << self.register_qubits
    }

    pub fn ancilla_dim(&self) -> usize {
        1 << self.ancilla_qubits
    }

    pub fn register_sites(&self) -> Vec<usize> {
        (0..self.register_qubits).collect()
    }

    pub fn ancilla_sites(&self) -> Vec<usize> {
        (self.register_qubits..self.total_qubits()).collect()
    }
}

/// Hermitian, positive, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    layout: HilbertLayout,
    data: CMatrix,
}

impl DensityMatrix {
    /// Validates hermiticity, unit trace and positivity.
    pub fn new(layout: HilbertLayout, data: CMatrix) -> Result<Self> {
        let rho = Self::new_unchecked(layout, data)?;
        rho.validate()?;
        Ok(rho)
    }

    /// Only checks the shape; used inside integrators that monitor positivity themselves.
    pub fn new_unchecked(layout: HilbertLayout, data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::NotSquare { rows: data.nrows(), cols: data.ncols() });
        }
        if data.nrows() != layout.total_dim() {
            return Err(Error::DimensionMismatch { expected: layout.total_dim(), found: data.nrows() });
        }
        Ok(Self { layout, data })
    }

    pub fn from_pure(psi: &PureState) -> Self {
        let a = psi.amplitudes();
        Self { layout: psi.layout(), data: a * a.adjoint() }
    }

    pub fn maximally_mixed(layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        Self { layout, data: CMatrix::identity(d, d) / c(d as f64, 0.0) }
    }

    pub fn validate(&self) -> Result<()> {
        let herm = adjoint_residual(&self.data);
        if herm > TOL.hermiticity.max(1e-12 * self.data.nrows() as f64) {
            return Err(Error::InvalidState(format!("not Hermitian (residual {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > TOL.trace.max(1e-13 * self.data.nrows() as f64) {
            return Err(Error::InvalidState(format!("trace {tr} != 1")));
        }
        let min = self.min_eigenvalue()?;
        if min < -TOL.positivity_slack {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn into_data(self) -> CMatrix {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace().re
    }

    pub fn purity(&self) -> f64 {
        // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        let ev = hermitian_eigenvalues(&self.data)?;
        Ok(ev.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    /// Traces out `over`; the remaining qubits keep their register/ancilla role.
    pub fn partial_trace(&self, over: &[usize]) -> Result<DensityMatrix> {
        let data = partial_trace(&self.data, self.layout.total_qubits(), over)?;
        let reg = (0..self.layout.register_qubits).filter(|q| !over.contains(q)).count();
        let anc = self.layout.ancilla_sites().iter().filter(|q| !over.contains(q)).count();
        Ok(DensityMatrix { layout: HilbertLayout::new(reg, anc)?, data })
    }

    /// Register marginal (ancillas traced out).
    pub fn register_marginal(&self) -> Result<DensityMatrix> {
        self.partial_trace(&self.layout.ancilla_sites())
    }

    /// Appends a fresh `|0...0>` ancilla block of `ancillas` qubits.
    pub fn with_fresh_ancillas(&self, ancillas: usize) -> Result<DensityMatrix> {
        let layout = HilbertLayout::new(self.layout.register_qubits, self.layout.ancilla_qubits + ancillas)?;
        let da = 1 << ancillas;
        let mut zero = CMatrix::zeros(da, da);
        zero[(0, 0)] = c(1.0, 0.0);
        Ok(DensityMatrix { layout, data: tensor_product(&self.data, &zero)? })
    }
}

/// Normalized state vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    layout: HilbertLayout,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(layout: HilbertLayout, amplitudes: CVector) -> Result<Self> {
        if amplitudes.len() != layout.total_dim() {
            return Err(Error::DimensionMismatch { expected: layout.total_dim(), found: amplitudes.len() });
        }
        let norm = amplitudes.norm_squared();
        if (norm - 1.0).abs() > TOL.normalization {
            return Err(Error::InvalidState(format!("squared norm {norm} != 1")));
        }
        Ok(Self { layout, amplitudes })
    }

    /// Normalizes the given vector first.
    pub fn normalized(layout: HilbertLayout, amplitudes: CVector) -> Result<Self> {
        let n = amplitudes.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Self::new(layout, amplitudes / c(n, 0.0))
    }

    pub fn basis(layout: HilbertLayout, index: usize) -> Result<Self> {
        let d = layout.total_dim();
        if index >= d {
            return Err(Error::DimensionMismatch { expected: d, found: index });
        }
        let mut v = CVector::zeros(d);
        v[index] = c(1.0, 0.0);
        Ok(Self { layout, amplitudes: v })
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn projector(&self) -> CMatrix {
        &self.amplitudes * self.amplitudes.adjoint()
    }

    pub fn inner(&self, other: &PureState) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}

/// Operator equal to its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    layout: HilbertLayout,
    data: CMatrix,
}

impl HermitianOperator {
    pub fn new(layout: HilbertLayout, data: CMatrix) -> Result<Self> {
        if data.nrows() != data.ncols() {
            return Err(Error::NotSquare { rows: data.nrows(), cols: data.ncols() });
        }
        if data.nrows() != layout.total_dim() {
            return Err(Error::DimensionMismatch { expected: layout.total_dim(), found: data.nrows() });
        }
        let scale = data.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let r = adjoint_residual(&data);
        if r > TOL.hermiticity * scale {
            return Err(Error::InvalidState(format!("not Hermitian (residual {r:.3e})")));
        }
        Ok(Self { layout, data })
    }

    pub fn zero(layout: HilbertLayout) -> Self {
        let d = layout.total_dim();
        Self { layout, data: CMatrix::zeros(d, d) }
    }

    pub fn layout(&self) -> HilbertLayout {
        self.layout
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }
}

#[cfg(test)]
pub(crate) mod tests_support;
