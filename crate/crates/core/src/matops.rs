//! Dense complex-matrix kernels.
//!
//! Everything here is a pure function of its arguments. Spectra come from
//! nalgebra's Hermitian eigensolver and SVD; the post-conditions (ordering,
//! clamping, reconstruction residuals) are enforced in this module.
//!
//! Product-space indexing is first-factor major: basis vector `(xi, x)` of
//! `G (dim N) ⊗ H (dim d)` sits at index `xi * d + x`, which is the layout
//! produced by `kronecker`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;

/// Numerical tolerances shared by the kernels.
pub mod tol {
    /// Max entrywise `|H - H^dagger|` accepted as Hermitian.
    pub const HERM: f64 = 1e-9;
    /// Eigenvalues in `[-PSD, 0)` are clamped to zero.
    pub const PSD: f64 = 1e-9;
    /// Frobenius reconstruction residual, scaled by `max(1, ||input||_F)`.
    pub const RECON: f64 = 1e-10;
    /// Equality of values computed along two routes.
    pub const EQ: f64 = 1e-9;
}

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Real diagonal matrix.
pub fn diag(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| c(v)),
    ))
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.diagonal().iter().sum()
}

/// `|v><v|`
pub fn outer(v: &DVector<C64>) -> CMatrix {
    v * v.adjoint()
}

pub fn ensure_finite(a: &CMatrix) -> Result<()> {
    if a.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(Error::input("matrix has non-finite entries"))
    }
}

fn ensure_square(a: &CMatrix) -> Result<usize> {
    if a.nrows() == a.ncols() {
        Ok(a.nrows())
    } else {
        Err(Error::input(format!(
            "expected a square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )))
    }
}

/// Max entrywise `|A - A^dagger|`.
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    let n = a.nrows().min(a.ncols());
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

/// A square matrix known to be Hermitian (stored exactly symmetrized).
#[derive(Debug, Clone, PartialEq)]
pub struct Hermitian(CMatrix);

/// Eigen-decomposition with eigenvalues in descending order; column `i` of
/// `vectors` belongs to `values[i]`.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

impl Hermitian {
    /// Validates Hermiticity within [`tol::HERM`] and symmetrizes.
    pub fn new(a: CMatrix) -> Result<Self> {
        ensure_square(&a)?;
        ensure_finite(&a)?;
        let residual = hermiticity_residual(&a);
        if residual > tol::HERM {
            return Err(Error::NotHermitian { residual });
        }
        Ok(Self::symmetrize(a))
    }

    /// `(A + A^dagger) / 2` without any check.
    pub fn symmetrize(a: CMatrix) -> Self {
        let h = (&a + a.adjoint()) * c(0.5);
        Hermitian(h)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn eigen(&self) -> Eigen {
        let eig = SymmetricEigen::new(self.0.clone());
        let mut order: Vec<usize> = (0..self.dim()).collect();
        // Stable: equal eigenvalues keep solver order.
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let vectors = CMatrix::from_fn(self.dim(), self.dim(), |r, col| {
            eig.eigenvectors[(r, order[col])]
        });
        Eigen { values, vectors }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.eigen().values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().last().copied().unwrap_or(0.0)
    }
}

impl Eigen {
    /// `sum_i f(lambda_i) |v_i><v_i|`
    pub fn reconstruct(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let d = self.vectors.nrows();
        let mut out = CMatrix::zeros(d, d);
        for (i, &lambda) in self.values.iter().enumerate() {
            let w = f(lambda);
            if w != 0.0 {
                let v = self.vectors.column(i).into_owned();
                out += outer(&v) * c(w);
            }
        }
        out
    }

    /// Projector onto the span of the listed eigenvectors.
    pub fn projector(&self, indices: impl IntoIterator<Item = usize>) -> CMatrix {
        let d = self.vectors.nrows();
        let mut out = CMatrix::zeros(d, d);
        for i in indices {
            let v = self.vectors.column(i).into_owned();
            out += outer(&v);
        }
        out
    }
}

/// Operator on `G ⊗ H` with `dim G = n` and `dim H = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteOperator {
    matrix: CMatrix,
    n: usize,
    d: usize,
}

impl BipartiteOperator {
    pub fn new(matrix: CMatrix, n: usize) -> Result<Self> {
        let total = ensure_square(&matrix)?;
        ensure_finite(&matrix)?;
        if n == 0 || total % n != 0 || total == 0 {
            return Err(Error::input(format!(
                "operator of dimension {total} cannot be split with first factor {n}"
            )));
        }
        Ok(Self {
            matrix,
            n,
            d: total / n,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    /// Dimension of the traced-out factor.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of the kept factor.
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn partial_trace(&self) -> CMatrix {
        trace_out_first(&self.matrix, self.n, self.d)
    }
}

fn trace_out_first(m: &CMatrix, n: usize, d: usize) -> CMatrix {
    let mut out = CMatrix::zeros(d, d);
    for xi in 0..n {
        out += m.view((xi * d, xi * d), (d, d));
    }
    out
}

/// `Tr_G` of an `(n d) x (n d)` operator: `A[x,y] = sum_xi At[(xi,x),(xi,y)]`.
pub fn partial_trace_first(at: &CMatrix, n: usize, d: usize) -> Result<CMatrix> {
    if at.nrows() != n * d || at.ncols() != n * d {
        return Err(Error::DimensionMismatch {
            expected: n * d,
            found: at.nrows().max(at.ncols()),
        });
    }
    Ok(trace_out_first(at, n, d))
}

/// `I_n ⊗ a`
pub fn lift_identity(a: &CMatrix, n: usize) -> CMatrix {
    identity(n).kronecker(a)
}

fn sort_descending(mut v: Vec<f64>) -> Vec<f64> {
    // sort_by is stable, so ties keep their original index order.
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Singular values in descending order, `min(rows, cols)` of them.
pub fn singular_values(a: &CMatrix) -> Result<Vec<f64>> {
    ensure_finite(a)?;
    if a.is_empty() {
        return Ok(Vec::new());
    }
    let s = a.clone().svd(false, false).singular_values;
    Ok(sort_descending(s.iter().map(|&x| x.max(0.0)).collect()))
}

/// Sum of the `k` largest singular values. `k = 0` yields 0.
pub fn ky_fan_norm(a: &CMatrix, k: usize) -> Result<f64> {
    let s = singular_values(a)?;
    if k > s.len() {
        return Err(Error::input(format!(
            "Ky Fan index {k} exceeds min(rows, cols) = {}",
            s.len()
        )));
    }
    // Empty float sums are -0.0; normalise the sign.
    Ok(s[..k].iter().sum::<f64>() + 0.0)
}

/// Schatten `q`-norm; pass `f64::INFINITY` for the spectral norm.
pub fn schatten_norm(a: &CMatrix, q: f64) -> Result<f64> {
    if q.is_nan() || q < 1.0 {
        return Err(Error::input(format!("Schatten index must be >= 1, got {q}")));
    }
    let s = singular_values(a)?;
    if q.is_infinite() {
        return Ok(s.first().copied().unwrap_or(0.0));
    }
    Ok(s.iter().map(|x| x.powf(q)).sum::<f64>().powf(1.0 / q))
}

pub fn trace_norm(a: &CMatrix) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

pub fn spectral_norm(a: &CMatrix) -> Result<f64> {
    schatten_norm(a, f64::INFINITY)
}

/// Unitarily invariant norms supported by the equivalence checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "norm", rename_all = "snake_case")]
pub enum NormId {
    /// Finite Schatten index `q >= 1`.
    Schatten { q: f64 },
    KyFan { k: usize },
    Trace,
    Spectral,
    Frobenius,
}

impl NormId {
    pub fn evaluate(&self, a: &CMatrix) -> Result<f64> {
        match *self {
            NormId::Schatten { q } => schatten_norm(a, q),
            NormId::KyFan { k } => {
                if k == 0 {
                    return Err(Error::input("Ky Fan index must be >= 1"));
                }
                ky_fan_norm(a, k)
            }
            NormId::Trace => trace_norm(a),
            NormId::Spectral => spectral_norm(a),
            NormId::Frobenius => schatten_norm(a, 2.0),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            NormId::Schatten { q } => format!("schatten_{q}"),
            NormId::KyFan { k } => format!("kyfan_{k}"),
            NormId::Trace => "trace".into(),
            NormId::Spectral => "spectral".into(),
            NormId::Frobenius => "frobenius".into(),
        }
    }
}

/// `|||Z|||` for `Z = diag(1, 1, 0, ..., 0)` of dimension `dim`.
pub fn z_norm_constant(norm: NormId, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::input("Z = diag(1,1,0,...) needs dimension >= 2"));
    }
    match norm {
        NormId::Schatten { q } => {
            if q.is_nan() || q < 1.0 {
                return Err(Error::input(format!("Schatten index must be >= 1, got {q}")));
            }
            Ok(2f64.powf(1.0 / q))
        }
        NormId::KyFan { k } => {
            if k == 0 || k > dim {
                return Err(Error::input(format!("Ky Fan index {k} outside 1..={dim}")));
            }
            Ok(k.min(2) as f64)
        }
        NormId::Trace => Ok(2.0),
        NormId::Spectral => Ok(1.0),
        NormId::Frobenius => Ok(std::f64::consts::SQRT_2),
    }
}

/// Unique PSD square root. Eigenvalues in `[-tol::PSD, 0)` are clamped.
pub fn psd_sqrt(a: &Hermitian) -> Result<Hermitian> {
    let eig = a.eigen();
    let min = eig.values.last().copied().unwrap_or(0.0);
    if min < -tol::PSD {
        return Err(Error::NotPsd { min_eigenvalue: min });
    }
    Ok(Hermitian::symmetrize(eig.reconstruct(|l| l.max(0.0).sqrt())))
}

/// Square root of `a^dagger a` (right absolute value).
pub fn abs_right(a: &CMatrix) -> Result<Hermitian> {
    psd_sqrt(&Hermitian::symmetrize(a.adjoint() * a))
}

/// Square root of `a a^dagger` (left absolute value).
pub fn abs_left(a: &CMatrix) -> Result<Hermitian> {
    psd_sqrt(&Hermitian::symmetrize(a * a.adjoint()))
}

/// Jordan decomposition `H = pos - neg` with `pos neg = 0`.
pub fn jordan_parts(h: &Hermitian) -> (Hermitian, Hermitian) {
    let eig = h.eigen();
    let pos = eig.reconstruct(|l| l.max(0.0));
    let neg = eig.reconstruct(|l| (-l).max(0.0));
    (Hermitian::symmetrize(pos), Hermitian::symmetrize(neg))
}

/// Orthogonal projectors `P`, `Q` with `rank(P) + rank(Q) <= k` and
/// `Tr[(P - Q) H] = ||H||_(k)`: the `k` eigenvectors of largest `|lambda|`,
/// nonnegative ones into `P`, negative ones into `Q`.
pub fn kyfan_optimal_projectors(h: &Hermitian, k: usize) -> Result<(CMatrix, CMatrix)> {
    let d = h.dim();
    if k == 0 || k > d {
        return Err(Error::input(format!("k = {k} outside 1..={d}")));
    }
    let eig = h.eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.values[j].abs().total_cmp(&eig.values[i].abs()));
    let chosen = &order[..k];
    let p = eig.projector(chosen.iter().copied().filter(|&i| eig.values[i] >= 0.0));
    let q = eig.projector(chosen.iter().copied().filter(|&i| eig.values[i] < 0.0));
    Ok((p, q))
}

/// The two `1 x N^2` block matrices built from an SVD of a bipartite
/// operator. Block `(i, j)` of `left` is `U_ij sqrt(D_jj)` and of `right` is
/// `V_ji^dagger sqrt(D_jj)`, where `At = U D V`.
#[derive(Debug, Clone)]
pub struct LrFactors {
    pub left: CMatrix,
    pub right: CMatrix,
    /// Column block `b` of `left`/`right` holds index pair `block_order[b]`.
    pub block_order: Vec<(usize, usize)>,
    pub residuals: LrResiduals,
}

/// Frobenius residuals of the three reconstruction identities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrResiduals {
    /// `||Tr_G At - L R^dagger||_F`
    pub product: f64,
    /// `||Tr_G |At|_L - L L^dagger||_F`
    pub left: f64,
    /// `||Tr_G |At|_R - R R^dagger||_F`
    pub right: f64,
}

impl LrResiduals {
    pub fn max(&self) -> f64 {
        self.product.max(self.left).max(self.right)
    }
}

/// Reconstruction tolerance applied by [`lr_factorization`] to `at`.
pub fn lr_bound(at: &BipartiteOperator) -> f64 {
    tol::RECON * frobenius(at.matrix()).max(1.0)
}

/// Like [`lr_factorization`] but returns the factors whatever the residuals.
pub fn lr_decompose(at: &BipartiteOperator) -> Result<LrFactors> {
    let (n, d) = (at.n(), at.d());
    let m = at.matrix();
    let svd = m.clone().svd(true, true);
    let u = svd
        .u
        .ok_or_else(|| Error::Internal("SVD did not return U".into()))?;
    // nalgebra returns At = u diag(s) v_t, so v_t plays the role of V.
    let v = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD did not return V".into()))?;
    let s = svd.singular_values;

    let blocks = n * n;
    let mut left = CMatrix::zeros(d, blocks * d);
    let mut right = CMatrix::zeros(d, blocks * d);
    let mut block_order = Vec::with_capacity(blocks);
    for i in 0..n {
        for j in 0..n {
            let b = block_order.len();
            let sqrt_d = diag(
                &(0..d)
                    .map(|x| s[j * d + x].max(0.0).sqrt())
                    .collect::<Vec<_>>(),
            );
            let u_ij = u.view((i * d, j * d), (d, d));
            let v_ji = v.view((j * d, i * d), (d, d));
            left.view_mut((0, b * d), (d, d))
                .copy_from(&(u_ij * &sqrt_d));
            right
                .view_mut((0, b * d), (d, d))
                .copy_from(&(v_ji.adjoint() * &sqrt_d));
            block_order.push((i, j));
        }
    }

    let a = at.partial_trace();
    let a_left = trace_out_first(abs_left(m)?.as_matrix(), n, d);
    let a_right = trace_out_first(abs_right(m)?.as_matrix(), n, d);
    let residuals = LrResiduals {
        product: frobenius(&(&a - &left * right.adjoint())),
        left: frobenius(&(&a_left - &left * left.adjoint())),
        right: frobenius(&(&a_right - &right * right.adjoint())),
    };
    Ok(LrFactors {
        left,
        right,
        block_order,
        residuals,
    })
}

pub fn lr_factorization(at: &BipartiteOperator) -> Result<LrFactors> {
    let f = lr_decompose(at)?;
    let bound = lr_bound(at);
    if f.residuals.max() > bound {
        return Err(Error::Internal(format!(
            "L/R reconstruction residual {:e} exceeds {bound:e}",
            f.residuals.max()
        )));
    }
    Ok(f)
}
