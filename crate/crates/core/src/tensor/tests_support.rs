//! Random test fixtures shared by unit tests across modules.

use rand::Rng;

use super::{c, CMatrix};

pub(crate) fn random_matrix(rng: &mut impl Rng, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

pub(crate) fn random_density(rng: &mut impl Rng, d: usize) -> CMatrix {
    let a = random_matrix(rng, d);
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    rho / tr
}

pub(crate) fn random_hermitian(rng: &mut impl Rng, d: usize) -> CMatrix {
    let a = random_matrix(rng, d);
    &a + a.adjoint()
}

pub(crate) fn random_unitary(rng: &mut impl Rng, d: usize) -> CMatrix {
    random_matrix(rng, d).qr().q()
}
