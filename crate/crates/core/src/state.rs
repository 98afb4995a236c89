//! Density matrices, bipartite states, and seeded random generators.
//!
//! All generators are deterministic functions of their dimensions and a
//! [`Seed`]. Each call builds its own `ChaCha8Rng` via `seed_from_u64`;
//! Gaussian components are drawn with `rand_distr::StandardNormal`, and a
//! complex Gaussian is `(x + i y) / sqrt(2)`. Streams are reproducible for a
//! given build of this crate, not across implementations.

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matops::{self, c, tol, BipartiteOperator, CMatrix, Hermitian, C64};

/// Maximum `|Tr rho - 1|` accepted for a density matrix.
pub const TRACE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Seed(pub u64);

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Seed {
    /// Child seed for sub-task `index`; a SplitMix64 hash of both values.
    pub fn derive(self, index: u64) -> Seed {
        Seed(splitmix64(self.0 ^ splitmix64(index)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

pub(crate) fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub(crate) fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    // Fill row-major so the stream order does not depend on storage layout.
    let mut m = CMatrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = complex_gaussian(rng);
        }
    }
    m
}

pub(crate) fn gaussian_vector(d: usize, rng: &mut ChaCha8Rng) -> DVector<C64> {
    DVector::from_iterator(d, (0..d).map(|_| complex_gaussian(rng)))
}

/// PSD, unit-trace operator.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(Hermitian);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let h = Hermitian::new(m)?;
        let min = h.min_eigenvalue();
        if min < -tol::PSD {
            return Err(Error::NotPsd { min_eigenvalue: min });
        }
        let tr = matops::trace(h.as_matrix()).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::Normalization { sum: tr });
        }
        Ok(DensityMatrix(h))
    }

    /// `|psi><psi| / <psi|psi>`
    pub fn pure(psi: &DVector<C64>) -> Result<Self> {
        let norm = psi.norm();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::input("state vector must be nonzero and finite"));
        }
        let v = psi / c(norm);
        Ok(DensityMatrix(Hermitian::symmetrize(matops::outer(&v))))
    }

    /// Computational basis state `|i><i|`.
    pub fn basis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(Error::input(format!("basis index {i} out of range for d = {d}")));
        }
        let mut v = DVector::zeros(d);
        v[i] = c(1.0);
        Self::pure(&v)
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix(Hermitian::symmetrize(matops::identity(d) * c(1.0 / d as f64)))
    }

    /// Diagonal state with the given spectrum (must be a distribution).
    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(matops::diag(probs))
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        self.0.as_matrix()
    }

    pub fn hermitian(&self) -> &Hermitian {
        &self.0
    }

    pub fn sqrt(&self) -> Hermitian {
        // Construction guarantees PSD within tolerance.
        matops::psd_sqrt(&self.0).expect("density matrix is PSD")
    }

    pub fn purity(&self) -> f64 {
        matops::trace(&(self.matrix() * self.matrix())).re
    }

    /// `(1 - t) self + t other` for `t` in `[0, 1]`.
    pub fn mix(&self, other: &DensityMatrix, t: f64) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::input(format!("mixing weight {t} outside [0, 1]")));
        }
        let m = self.matrix() * c(1.0 - t) + other.matrix() * c(t);
        Ok(DensityMatrix(Hermitian::symmetrize(m)))
    }
}

/// Density matrix on `G ⊗ H` with `dim G = n`, `dim H = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteState {
    n: usize,
    d: usize,
    state: DensityMatrix,
}

impl BipartiteState {
    pub fn new(state: DensityMatrix, n: usize) -> Result<Self> {
        let total = state.dim();
        if n == 0 || !total.is_multiple_of(n) {
            return Err(Error::input(format!(
                "state of dimension {total} cannot be split with first factor {n}"
            )));
        }
        Ok(Self {
            n,
            d: total / n,
            state,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    /// `Tr_G` of the state.
    pub fn reduced(&self) -> DensityMatrix {
        let a = matops::partial_trace_first(self.state.matrix(), self.n, self.d)
            .expect("split checked at construction");
        DensityMatrix(Hermitian::symmetrize(a))
    }

    pub fn operator(&self) -> BipartiteOperator {
        BipartiteOperator::new(self.state.matrix().clone(), self.n).expect("split checked")
    }
}

/// Rank-one projector onto a normalized complex-Gaussian vector.
pub fn random_pure(d: usize, seed: Seed) -> DensityMatrix {
    let mut rng = seed.rng();
    loop {
        let v = gaussian_vector(d, &mut rng);
        if v.norm() > 0.0 {
            return DensityMatrix::pure(&v).expect("nonzero vector");
        }
    }
}

/// `G G^dagger / Tr(G G^dagger)` with `G` a `d x rank` complex-Gaussian matrix.
pub fn random_mixed(d: usize, rank: usize, seed: Seed) -> Result<DensityMatrix> {
    if rank == 0 || rank > d {
        return Err(Error::input(format!("rank {rank} outside 1..={d}")));
    }
    let mut rng = seed.rng();
    let g = gaussian_matrix(d, rank, &mut rng);
    let w = &g * g.adjoint();
    let tr = matops::trace(&w).re;
    Ok(DensityMatrix(Hermitian::symmetrize(w * c(1.0 / tr))))
}

/// Haar unitary: QR of a Gaussian matrix with the diagonal phases of `R`
/// absorbed into `Q`.
pub fn random_unitary(d: usize, seed: Seed) -> CMatrix {
    let mut rng = seed.rng();
    let g = gaussian_matrix(d, d, &mut rng);
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for j in 0..d {
        let rjj = r[(j, j)];
        let phase = if rjj.norm() > 0.0 { rjj / rjj.norm() } else { c(1.0) };
        let mut col = q.column_mut(j);
        col *= phase;
    }
    q
}

/// `(G + G^dagger) / 2` for a complex-Gaussian `G`.
pub fn random_hermitian(d: usize, seed: Seed) -> Hermitian {
    let mut rng = seed.rng();
    Hermitian::symmetrize(gaussian_matrix(d, d, &mut rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    General,
    Hermitian,
    TracelessHermitian,
}

pub fn random_bipartite_operator(n: usize, d: usize, seed: Seed, kind: OperatorKind) -> BipartiteOperator {
    let dim = n * d;
    let mut rng = seed.rng();
    let g = gaussian_matrix(dim, dim, &mut rng);
    let m = match kind {
        OperatorKind::General => g,
        OperatorKind::Hermitian => Hermitian::symmetrize(g).into_matrix(),
        OperatorKind::TracelessHermitian => traceless(Hermitian::symmetrize(g).into_matrix()),
    };
    BipartiteOperator::new(m, n).expect("valid split")
}

/// Subtract `Tr(A)/dim` times the identity.
pub fn traceless(a: CMatrix) -> CMatrix {
    let dim = a.nrows();
    let shift = matops::trace(&a) / c(dim as f64);
    a - matops::identity(dim) * shift
}

/// Random traceless Hermitian operator of dimension `d`.
pub fn random_traceless_hermitian(d: usize, seed: Seed) -> Hermitian {
    Hermitian::symmetrize(traceless(random_hermitian(d, seed).into_matrix()))
}

/// Random mixed state on `n * d` dimensions with the given split.
pub fn random_bipartite_state(n: usize, d: usize, rank: usize, seed: Seed) -> Result<BipartiteState> {
    BipartiteState::new(random_mixed(n * d, rank, seed)?, n)
}
