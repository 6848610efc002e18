//! Single-qubit replacement noise, its Lindblad generator, and discrete
//! error maps in Kraus form.
//!
//! Noise acts on register qubits only; ancillas are treated as noiseless.

use crate::error::{Error, Result};
use crate::tensor::{
    c, embed, replace_qubit, tensor_product, trace_norm, CMatrix, DensityMatrix, HilbertLayout,
    LocalIndex,
};
use crate::tolerance::TOL;

fn check_register_qubit(k: usize, layout: &HilbertLayout) -> Result<()> {
    if k >= layout.register_qubits {
        return Err(Error::SiteOutOfRange { index: k, qubits: layout.register_qubits });
    }
    Ok(())
}

/// `|mu><nu|` on one qubit.
pub fn unit_matrix(mu: usize, nu: usize) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    m[(mu, nu)] = c(1.0, 0.0);
    m
}

/// The replacement channel acting on qubit `target`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplacementChannel {
    pub target: usize,
    pub layout: HilbertLayout,
}

impl ReplacementChannel {
    pub fn new(target: usize, layout: HilbertLayout) -> Result<Self> {
        check_register_qubit(target, &layout)?;
        Ok(Self { target, layout })
    }

    /// Four operators `|mu><nu| / sqrt(2)` on the target qubit.
    pub fn local_kraus() -> Vec<CMatrix> {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        [(0, 0), (0, 1), (1, 0), (1, 1)]
            .into_iter()
            .map(|(mu, nu)| unit_matrix(mu, nu) * c(s, 0.0))
            .collect()
    }

    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        replace_qubit(m, self.target, self.layout.total_qubits())
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.layout() != self.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.total_dim(),
                found: rho.layout().total_dim(),
            });
        }
        DensityMatrix::new_unchecked(self.layout, self.apply_matrix(rho.data()))
    }
}

/// `1/2 Tr_k(rho) (x) 1_k`.
pub fn apply_phi(rho: &DensityMatrix, k: usize) -> Result<DensityMatrix> {
    ReplacementChannel::new(k, rho.layout())?.apply(rho)
}

/// A channel given by full-dimension Kraus operators.
#[derive(Debug, Clone)]
pub struct KrausChannel {
    pub layout: HilbertLayout,
    pub operators: Vec<CMatrix>,
}

impl KrausChannel {
    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let d = m.nrows();
        self.operators
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, k| acc + k * m * k.adjoint())
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        DensityMatrix::new_unchecked(self.layout, self.apply_matrix(rho.data()))
    }

    /// Max-abs entry of `sum K^dagger K - 1`.
    pub fn completeness_residual(&self) -> f64 {
        completeness_residual(&self.operators)
    }
}

pub(crate) fn completeness_residual(ops: &[CMatrix]) -> f64 {
    let d = ops.first().map_or(0, |k| k.ncols());
    let sum = ops.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k.adjoint() * k);
    (sum - CMatrix::identity(d, d)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Explicit Kraus form of the replacement channel on qubit `k`.
pub fn kraus_phi(k: usize, layout: HilbertLayout) -> Result<KrausChannel> {
    check_register_qubit(k, &layout)?;
    let n = layout.total_qubits();
    let operators = ReplacementChannel::local_kraus()
        .iter()
        .map(|op| embed(op, &[k], n))
        .collect::<Result<Vec<_>>>()?;
    Ok(KrausChannel { layout, operators })
}

/// `L rho = lambda^2 sum_k (Phi_k rho - rho)` over register qubits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LindbladGenerator {
    pub lambda_sq: f64,
    pub layout: HilbertLayout,
}

impl LindbladGenerator {
    pub fn new(lambda_sq: f64, layout: HilbertLayout) -> Result<Self> {
        if !(lambda_sq >= 0.0 && lambda_sq.is_finite()) {
            return Err(Error::InvalidParameter(format!("decoherence rate {lambda_sq} must be >= 0")));
        }
        Ok(Self { lambda_sq, layout })
    }

    /// Total decay rate `lambda^2 M`.
    pub fn total_rate(&self) -> f64 {
        self.lambda_sq * self.layout.register_qubits as f64
    }

    pub fn apply_matrix(&self, m: &CMatrix) -> CMatrix {
        let n = self.layout.total_qubits();
        let mut out = CMatrix::zeros(m.nrows(), m.ncols());
        for k in 0..self.layout.register_qubits {
            out += replace_qubit(m, k, n) - m;
        }
        out * c(self.lambda_sq, 0.0)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> CMatrix {
        self.apply_matrix(rho.data())
    }

    /// Exact semigroup step `e^{s L}`; the per-qubit generators commute so
    /// this is a product of mixtures `e^{-l s} Id + (1 - e^{-l s}) Phi_k`.
    pub fn evolve_matrix(&self, m: &CMatrix, s: f64) -> CMatrix {
        let keep = (-self.lambda_sq * s).exp();
        if keep == 1.0 {
            return m.clone();
        }
        let n = self.layout.total_qubits();
        let mut out = m.clone();
        for k in 0..self.layout.register_qubits {
            let replaced = replace_qubit(&out, k, n);
            out = out * c(keep, 0.0) + replaced * c(1.0 - keep, 0.0);
        }
        out
    }
}

/// Kraus operators of one error location.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementaryError {
    pub sites: Vec<usize>,
    pub kraus: Vec<CMatrix>,
}

impl ElementaryError {
    pub fn new(sites: Vec<usize>, kraus: Vec<CMatrix>) -> Result<Self> {
        if sites.is_empty() || sites.len() > 2 {
            return Err(Error::InvalidParameter("error locations span 1 or 2 qubits".into()));
        }
        let side = 1 << sites.len();
        if kraus.is_empty() || kraus.iter().any(|k| k.nrows() != side || k.ncols() != side) {
            return Err(Error::DimensionMismatch { expected: side, found: kraus.first().map_or(0, |k| k.nrows()) });
        }
        let r = completeness_residual(&kraus);
        if r > TOL.completeness {
            return Err(Error::InvalidParameter(format!("Kraus operators not trace preserving ({r:.3e})")));
        }
        Ok(Self { sites, kraus })
    }

    /// `(1 - w) Id + w Phi` on one qubit.
    pub fn replacement_mixture(qubit: usize, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidParameter(format!("mixing weight {weight} outside [0,1]")));
        }
        let mut kraus = vec![CMatrix::identity(2, 2) * c((1.0 - weight).sqrt(), 0.0)];
        let s = (weight / 2.0).sqrt();
        for (mu, nu) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            kraus.push(unit_matrix(mu, nu) * c(s, 0.0));
        }
        Self::new(vec![qubit], kraus)
    }

    /// `(1 - w) rho + w X rho X` on one qubit.
    pub fn bit_flip(qubit: usize, weight: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidParameter(format!("flip probability {weight} outside [0,1]")));
        }
        let mut x = CMatrix::zeros(2, 2);
        x[(0, 1)] = c(weight.sqrt(), 0.0);
        x[(1, 0)] = c(weight.sqrt(), 0.0);
        Self::new(vec![qubit], vec![CMatrix::identity(2, 2) * c((1.0 - weight).sqrt(), 0.0), x])
    }

    /// A single Kraus operator (must be unitary), e.g. a deterministic Pauli error.
    pub fn unitary(sites: Vec<usize>, u: CMatrix) -> Result<Self> {
        Self::new(sites, vec![u])
    }

    /// Trace-norm distance between normalized Choi matrices of this map and the identity.
    pub fn deviation_from_identity(&self) -> Result<f64> {
        choi_deviation(&self.kraus)
    }
}

/// Normalized Choi matrix `(1/d) sum_ij |i><j| (x) E(|i><j|)` from local Kraus operators.
pub fn choi_matrix(kraus: &[CMatrix]) -> Result<CMatrix> {
    let d = kraus.first().map_or(1, |k| k.nrows());
    let mut choi = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut eij = CMatrix::zeros(d, d);
            eij[(i, j)] = c(1.0, 0.0);
            let image = kraus.iter().fold(CMatrix::zeros(d, d), |acc, k| acc + k * &eij * k.adjoint());
            choi += tensor_product(&eij, &image)?;
        }
    }
    Ok(choi / c(d as f64, 0.0))
}

/// `|| J(E) - J(Id) ||_1` with normalized Choi matrices; 0 for the identity channel.
///
/// This is a lower bound on the diamond-norm distance, not the diamond norm itself.
pub fn choi_deviation(kraus: &[CMatrix]) -> Result<f64> {
    let d = kraus.first().map_or(1, |k| k.nrows());
    let id = choi_matrix(&[CMatrix::identity(d, d)])?;
    trace_norm(&(choi_matrix(kraus)? - id))
}

/// Composition of elementary error maps, applied in list order.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteErrorMap {
    pub elements: Vec<ElementaryError>,
    /// Largest elementwise deviation from identity (the per-location error bound).
    pub deviation_bound: f64,
}

impl DiscreteErrorMap {
    pub fn new(elements: Vec<ElementaryError>) -> Result<Self> {
        let deviation_bound = elements
            .iter()
            .map(|e| e.deviation_from_identity())
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        Ok(Self { elements, deviation_bound })
    }

    pub fn identity() -> Self {
        Self { elements: Vec::new(), deviation_bound: 0.0 }
    }

    /// `e^{t L}` on every register qubit of an `m`-qubit register.
    pub fn register_noise(lambda_sq: f64, t: f64, register_qubits: usize) -> Result<Self> {
        let w = semigroup_weight(lambda_sq, t)?;
        Self::new(
            (0..register_qubits)
                .map(|k| ElementaryError::replacement_mixture(k, w))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// Independent bit flips with probability `w` on each register qubit.
    pub fn register_bit_flips(w: f64, register_qubits: usize) -> Result<Self> {
        Self::new(
            (0..register_qubits)
                .map(|k| ElementaryError::bit_flip(k, w))
                .collect::<Result<Vec<_>>>()?,
        )
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &DiscreteErrorMap) -> Result<Self> {
        let mut elements = self.elements.clone();
        elements.extend(next.elements.iter().cloned());
        Self::new(elements)
    }

    pub fn is_identity(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn max_site(&self) -> Option<usize> {
        self.elements.iter().flat_map(|e| e.sites.iter().copied()).max()
    }

    /// Applies the map to an operator on `n_qubits` qubits (sites index that space).
    pub fn apply_matrix(&self, m: &CMatrix, n_qubits: usize) -> Result<CMatrix> {
        let mut cur = m.clone();
        for e in &self.elements {
            let idx = LocalIndex::new(&e.sites, n_qubits)?;
            let mut acc = CMatrix::zeros(cur.nrows(), cur.ncols());
            for k in &e.kraus {
                let mut term = cur.clone();
                idx.conjugate(k, &mut term);
                acc += term;
            }
            cur = acc;
        }
        Ok(cur)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        let out = self.apply_matrix(rho.data(), rho.layout().total_qubits())?;
        DensityMatrix::new_unchecked(rho.layout(), out)
    }

    /// Sum of elementwise Choi deviations. Exact for a single location and an
    /// upper bound on the Choi deviation of the composed map otherwise.
    pub fn deviation_from_identity(&self) -> Result<f64> {
        self.elements
            .iter()
            .map(|e| e.deviation_from_identity())
            .sum()
    }
}

fn semigroup_weight(lambda_sq: f64, t: f64) -> Result<f64> {
    if lambda_sq.is_nan() || t.is_nan() || lambda_sq < 0.0 || t < 0.0 {
        return Err(Error::InvalidParameter(format!("rate {lambda_sq} and time {t} must be >= 0")));
    }
    if lambda_sq == 0.0 || t == 0.0 {
        return Ok(0.0);
    }
    Ok(-(-lambda_sq * t).exp_m1())
}

/// Single-qubit channel `e^{t_clock L_k}` as a discrete error map.
pub fn discrete_error_from_time(lambda_sq: f64, t_clock: f64, k: usize) -> Result<DiscreteErrorMap> {
    let w = semigroup_weight(lambda_sq, t_clock)?;
    DiscreteErrorMap::new(vec![ElementaryError::replacement_mixture(k, w)?])
}

/// Deviation of an error map from identity (see [`DiscreteErrorMap::deviation_from_identity`]).
pub fn deviation_from_identity(map: &DiscreteErrorMap) -> Result<f64> {
    map.deviation_from_identity()
}
