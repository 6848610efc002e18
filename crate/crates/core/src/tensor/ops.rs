use std::sync::Once;


use super::local::{bit_of, validate_sites, LocalIndex};
use super::{c, CMatrix, CVector, DensityMatrix, PureState, C64};
use crate::error::{Error, Result};
use crate::tolerance::TOL;

fn log2_exact(d: usize) -> Option<usize> {
    d.is_power_of_two().then(|| d.trailing_zeros() as usize)
}

fn square_side(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// Kronecker product `a (x) b`; `a` occupies the more significant qubits.
pub fn tensor_product(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let (da, db) = (square_side(a)?, square_side(b)?);
    let d = da * db;
    let qubits = log2_exact(d).unwrap_or(usize::MAX);
    if d > 1 << TOL.max_qubits {
        return Err(Error::DimensionTooLarge { qubits, max: TOL.max_qubits });
    }
    Ok(a.kronecker(b))
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &CVector, b: &CVector) -> CVector {
    CVector::from_fn(a.len() * b.len(), |i, _| a[i / b.len()] * b[i % b.len()])
}

/// Traces out the qubits in `over` from an `n_qubits` operator.
pub fn partial_trace(m: &CMatrix, n_qubits: usize, over: &[usize]) -> Result<CMatrix> {
    let d = square_side(m)?;
    if d != 1 << n_qubits {
        return Err(Error::DimensionMismatch { expected: 1 << n_qubits, found: d });
    }
    validate_sites(over, n_qubits)?;
    let kept: Vec<usize> = (0..n_qubits).filter(|q| !over.contains(q)).collect();
    let offsets = |sites: &[usize]| -> Vec<usize> {
        let k = sites.len();
        (0..1usize << k)
            .map(|l| {
                sites
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| (l >> (k - 1 - b)) & 1 == 1)
                    .map(|(_, &q)| bit_of(n_qubits, q))
                    .sum()
            })
            .collect()
    };
    let keep_off = offsets(&kept);
    let trace_off = offsets(over);
    let dk = keep_off.len();
    Ok(CMatrix::from_fn(dk, dk, |i, j| {
        trace_off
            .iter()
            .map(|&s| m[(keep_off[i] + s, keep_off[j] + s)])
            .sum()
    }))
}

/// Full-dimension operator acting as `op` on `sites` and identity elsewhere.
pub fn embed(op: &CMatrix, sites: &[usize], n_qubits: usize) -> Result<CMatrix> {
    let side = square_side(op)?;
    if side != 1 << sites.len() {
        return Err(Error::DimensionMismatch { expected: 1 << sites.len(), found: side });
    }
    if n_qubits > TOL.max_qubits {
        return Err(Error::DimensionTooLarge { qubits: n_qubits, max: TOL.max_qubits });
    }
    let idx = LocalIndex::new(sites, n_qubits)?;
    let d = 1 << n_qubits;
    let mut out = CMatrix::identity(d, d);
    idx.apply_left(op, &mut out);
    Ok(out)
}

fn to_faer(m: &CMatrix) -> faer::Mat<C64> {
    // Results must not depend on the thread count.
    static SEQUENTIAL: Once = Once::new();
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

/// Real eigenvalues of a Hermitian matrix, ascending. Only the lower
/// triangle is read after symmetrizing.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Result<Vec<f64>> {
    let d = square_side(m)?;
    let (sym, scale) = normalized_hermitian_part(m);
    let values = match to_faer(&sym).self_adjoint_eigenvalues(faer::Side::Lower) {
        Ok(v) if v.iter().all(|x| x.is_finite()) => v,
        // faer occasionally gives up on sparse, highly degenerate input.
        _ => {
            let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
            v.sort_by(f64::total_cmp);
            v
        }
    };
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNonConvergence(d));
    }
    Ok(values.into_iter().map(|v| v * scale).collect())
}

/// `(m + m^dagger) / 2` divided by its largest entry modulus, and that modulus.
fn normalized_hermitian_part(m: &CMatrix) -> (CMatrix, f64) {
    let sym = (m + m.adjoint()) * c(0.5, 0.0);
    let scale = sym.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if scale > 0.0 && scale.is_finite() {
        (sym * c(1.0 / scale, 0.0), scale)
    } else {
        (sym, 1.0)
    }
}

/// `m = V diag(values) V^dagger` for Hermitian `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let d = square_side(m)?;
    let (sym, scale) = normalized_hermitian_part(m);
    let evd = to_faer(&sym)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|_| Error::EigenNonConvergence(d))?;
    let values: Vec<f64> = evd.S().column_vector().iter().map(|z| z.re * scale).collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNonConvergence(d));
    }
    let u = evd.U();
    Ok((values, CMatrix::from_fn(d, d, |i, j| u[(i, j)])))
}

fn singular_values(m: &CMatrix) -> Result<Vec<f64>> {
    let d = square_side(m)?;
    let values = to_faer(m).singular_values().map_err(|_| Error::EigenNonConvergence(d))?;
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigenNonConvergence(d));
    }
    Ok(values)
}

/// Largest singular value. Hermitian input goes through the eigensolver.
pub fn operator_norm(m: &CMatrix) -> Result<f64> {
    square_side(m)?;
    if m.nrows() == 0 {
        return Ok(0.0);
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let values = if adjoint_residual(m) <= TOL.hermiticity * scale.max(1.0) {
        hermitian_eigenvalues(m)?
    } else {
        singular_values(m)?
    };
    Ok(values.iter().map(|v| v.abs()).fold(0.0, f64::max))
}

/// Sum of singular values.
pub fn trace_norm(m: &CMatrix) -> Result<f64> {
    square_side(m)?;
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let values = if adjoint_residual(m) <= TOL.hermiticity * scale.max(1.0) {
        hermitian_eigenvalues(m)?
    } else {
        singular_values(m)?
    };
    Ok(values.iter().map(|v| v.abs()).sum())
}

/// `<psi| rho |psi>` for states on the same space.
pub fn state_fidelity(psi: &PureState, rho: &DensityMatrix) -> Result<f64> {
    let a = psi.amplitudes();
    if a.len() != rho.data().nrows() {
        return Err(Error::DimensionMismatch { expected: rho.data().nrows(), found: a.len() });
    }
    let z = a.dotc(&(rho.data() * a));
    if z.im.abs() > 1e-12 {
        return Err(Error::InvalidState(format!("fidelity has imaginary part {:.3e}", z.im)));
    }
    Ok(z.re.clamp(0.0, 1.0))
}

/// Max-abs entry of `m - m^dagger`.
pub fn adjoint_residual(m: &CMatrix) -> f64 {
    let d = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in i..d {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Max-abs entry of `u^dagger u - 1`.
pub fn unitarity_residual(u: &CMatrix) -> f64 {
    let d = u.nrows();
    let g = u.adjoint() * u - CMatrix::identity(d, d);
    g.iter().map(|z| z.norm()).fold(0.0, f64::max)
}
