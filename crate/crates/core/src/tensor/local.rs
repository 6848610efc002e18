//! Index bookkeeping for operators acting on a few qubits of a larger
//! register, so that local gates and Kraus operators never need to be
//! materialized at full dimension.
//!
//! Qubit 0 is the most significant bit of a basis index.

use super::{CMatrix, C64};
use crate::error::{Error, Result};

/// Precomputed offsets for an operator on `sites` inside an `n`-qubit space.
#[derive(Debug, Clone)]
pub struct LocalIndex {
    n_qubits: usize,
    sites: Vec<usize>,
    /// Full-space offset of each local basis index (local bit 0 = `sites[0]`, MSB).
    offsets: Vec<usize>,
    /// Full-space indices with zeros on every site bit.
    bases: Vec<usize>,
}

pub(crate) fn bit_of(n_qubits: usize, qubit: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

pub(crate) fn validate_sites(sites: &[usize], n_qubits: usize) -> Result<()> {
    for (i, &s) in sites.iter().enumerate() {
        if s >= n_qubits {
            return Err(Error::SiteOutOfRange { index: s, qubits: n_qubits });
        }
        if sites[..i].contains(&s) {
            return Err(Error::DuplicateSite(s));
        }
    }
    Ok(())
}

impl LocalIndex {
    pub fn new(sites: &[usize], n_qubits: usize) -> Result<Self> {
        validate_sites(sites, n_qubits)?;
        let k = sites.len();
        let offsets = (0..1usize << k)
            .map(|l| {
                sites
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| (l >> (k - 1 - b)) & 1 == 1)
                    .map(|(_, &q)| bit_of(n_qubits, q))
                    .sum()
            })
            .collect();
        let mask: usize = sites.iter().map(|&q| bit_of(n_qubits, q)).sum();
        let bases = (0..1usize << n_qubits).filter(|i| i & mask == 0).collect();
        Ok(Self { n_qubits, sites: sites.to_vec(), offsets, bases })
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits
    }

    pub fn local_dim(&self) -> usize {
        self.offsets.len()
    }

    fn check(&self, op: &CMatrix, rows: usize) {
        assert_eq!(op.nrows(), self.local_dim(), "local operator size");
        assert_eq!(op.ncols(), self.local_dim(), "local operator size");
        assert_eq!(rows, self.dim(), "full-space dimension");
    }

    /// `m <- embed(op) * m`.
    pub fn apply_left(&self, op: &CMatrix, m: &mut CMatrix) {
        self.check(op, m.nrows());
        let ld = self.local_dim();
        let d = self.dim();
        let mut gathered = vec![C64::new(0.0, 0.0); ld];
        let data = m.as_mut_slice();
        for col in data.chunks_mut(d) {
            for &b in &self.bases {
                for (g, &o) in gathered.iter_mut().zip(&self.offsets) {
                    *g = col[b + o];
                }
                for (l, &o) in self.offsets.iter().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, g) in gathered.iter().enumerate() {
                        acc += op[(l, j)] * g;
                    }
                    col[b + o] = acc;
                }
            }
        }
    }

    /// `m <- m * embed(op)`.
    pub fn apply_right(&self, op: &CMatrix, m: &mut CMatrix) {
        self.check(op, m.ncols());
        let ld = self.local_dim();
        let rows = m.nrows();
        let mut buf = vec![C64::new(0.0, 0.0); ld * rows];
        for &b in &self.bases {
            buf.iter_mut().for_each(|x| *x = C64::new(0.0, 0.0));
            for l in 0..ld {
                let out = &mut buf[l * rows..(l + 1) * rows];
                for (j, &oj) in self.offsets.iter().enumerate() {
                    let w = op[(j, l)];
                    if w == C64::new(0.0, 0.0) {
                        continue;
                    }
                    let src = m.column(b + oj);
                    for (o, s) in out.iter_mut().zip(src.iter()) {
                        *o += w * s;
                    }
                }
            }
            for (l, &ol) in self.offsets.iter().enumerate() {
                m.column_mut(b + ol)
                    .iter_mut()
                    .zip(&buf[l * rows..(l + 1) * rows])
                    .for_each(|(dst, src)| *dst = *src);
            }
        }
    }

    /// `m <- embed(op) * m * embed(op)^dagger`.
    pub fn conjugate(&self, op: &CMatrix, m: &mut CMatrix) {
        self.apply_left(op, m);
        self.apply_right(&op.adjoint(), m);
    }

    /// `v <- embed(op) * v` for a state vector.
    pub fn apply_vector(&self, op: &CMatrix, v: &mut [C64]) {
        assert_eq!(v.len(), self.dim(), "full-space dimension");
        let ld = self.local_dim();
        let mut gathered = vec![C64::new(0.0, 0.0); ld];
        for &b in &self.bases {
            for (g, &o) in gathered.iter_mut().zip(&self.offsets) {
                *g = v[b + o];
            }
            for (l, &o) in self.offsets.iter().enumerate() {
                let mut acc = C64::new(0.0, 0.0);
                for (j, g) in gathered.iter().enumerate() {
                    acc += op[(l, j)] * g;
                }
                v[b + o] = acc;
            }
        }
    }
}

/// Applies the single-qubit replacement map `X -> 1/2 Tr_k(X) (x) 1_k` to any
/// square operator on `n_qubits` qubits (no positivity assumed).
pub fn replace_qubit(m: &CMatrix, k: usize, n_qubits: usize) -> CMatrix {
    let bit = bit_of(n_qubits, k);
    let d = m.nrows();
    CMatrix::from_fn(d, d, |i, j| {
        if (i & bit) != (j & bit) {
            return C64::new(0.0, 0.0);
        }
        let (i0, j0) = (i & !bit, j & !bit);
        (m[(i0, j0)] + m[(i0 | bit, j0 | bit)]) * 0.5
    })
}
