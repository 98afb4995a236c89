//! POVMs, family classification, and outcome statistics.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::classical::Distribution;
use crate::error::{Error, Result};
use crate::matops::{self, tol, CMatrix, Hermitian, C64};
use crate::state::{self, DensityMatrix, Seed};

/// Max `||sum_x A_x - I||_F` accepted for a POVM.
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Slack on the trace comparisons that define the two families.
pub const FAMILY_TOL: f64 = 1e-9;
/// Negative probabilities in `[-OUTCOME_CLAMP, 0)` are clamped to zero.
pub const OUTCOME_CLAMP: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMatrix>,
}

/// POVM family: `A` has every `Tr A_x <= 1` and at most `d^2` outcomes,
/// `B` has every `Tr A_x >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    A,
    B,
}

impl std::str::FromStr for Family {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Family::A),
            "B" | "b" => Ok(Family::B),
            other => Err(Error::input(format!("unknown POVM family `{other}` (expected A or B)"))),
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Family::A => "A",
            Family::B => "B",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyTag {
    pub in_a: bool,
    pub in_b: bool,
}

impl FamilyTag {
    pub fn contains(&self, family: Family) -> bool {
        match family {
            Family::A => self.in_a,
            Family::B => self.in_b,
        }
    }
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::input("a POVM needs at least one element"))?;
        let dim = first.nrows();
        let mut sum = CMatrix::zeros(dim, dim);
        let mut checked = Vec::with_capacity(elements.len());
        for e in elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.nrows().max(e.ncols()),
                });
            }
            let h = Hermitian::new(e)?;
            let min = h.min_eigenvalue();
            if min < -tol::PSD {
                return Err(Error::NotPsd { min_eigenvalue: min });
            }
            sum += h.as_matrix();
            checked.push(h.into_matrix());
        }
        let residual = matops::frobenius(&(sum - matops::identity(dim)));
        if residual > COMPLETENESS_TOL {
            return Err(Error::input(format!(
                "POVM elements do not sum to the identity (residual {residual:e})"
            )));
        }
        Ok(Self {
            dim,
            elements: checked,
        })
    }

    /// `A_x = S^{-1/2} |v_x><v_x| S^{-1/2}` with `S = sum_x |v_x><v_x|`.
    pub fn from_vectors(vectors: &[DVector<C64>]) -> Result<Self> {
        let dim = vectors
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::input("need at least one generating vector"))?;
        let ws = completed_vectors(vectors)?;
        Self::new(ws.iter().map(matops::outer).collect()).inspect(|p| debug_assert_eq!(p.dim, dim))
    }

    /// PVM onto the columns of a unitary.
    pub fn from_basis(u: &CMatrix) -> Result<Self> {
        let cols: Vec<DVector<C64>> = (0..u.ncols()).map(|j| u.column(j).into_owned()).collect();
        Self::new(cols.iter().map(matops::outer).collect())
    }

    pub fn computational(d: usize) -> Self {
        Self::from_basis(&matops::identity(d)).expect("identity columns form a PVM")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn traces(&self) -> Vec<f64> {
        self.elements.iter().map(|e| matops::trace(e).re).collect()
    }

    /// Drops elements with (numerically) zero trace.
    pub fn without_null_outcomes(&self) -> Povm {
        let elements: Vec<CMatrix> = self
            .elements
            .iter()
            .filter(|e| matops::trace(e).re > 1e-12)
            .cloned()
            .collect();
        if elements.is_empty() {
            return self.clone();
        }
        Povm {
            dim: self.dim,
            elements,
        }
    }
}

/// `S^{-1/2} v_x` for every generating vector.
pub(crate) fn completed_vectors(vectors: &[DVector<C64>]) -> Result<Vec<DVector<C64>>> {
    let dim = vectors[0].len();
    let mut s = CMatrix::zeros(dim, dim);
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        s += matops::outer(v);
    }
    let eig = Hermitian::symmetrize(s).eigen();
    let largest = eig.values.first().copied().unwrap_or(0.0);
    let smallest = eig.values.last().copied().unwrap_or(0.0);
    if !(largest > 0.0) || smallest <= 1e-12 * largest {
        return Err(Error::input("generating vectors do not span the space"));
    }
    let inv_sqrt = eig.reconstruct(|l| 1.0 / l.sqrt());
    Ok(vectors.iter().map(|v| &inv_sqrt * v).collect())
}

pub fn classify(povm: &Povm) -> FamilyTag {
    let traces = povm.traces();
    let d = povm.dim();
    FamilyTag {
        in_a: traces.iter().all(|&t| t <= 1.0 + FAMILY_TOL) && traces.len() <= d * d,
        in_b: traces.iter().all(|&t| t >= 1.0 - FAMILY_TOL),
    }
}

/// `p(x) = Tr(rho A_x)`.
pub fn outcome_distribution(rho: &DensityMatrix, povm: &Povm) -> Result<Distribution> {
    if rho.dim() != povm.dim() {
        return Err(Error::DimensionMismatch {
            expected: povm.dim(),
            found: rho.dim(),
        });
    }
    let mut probs = Vec::with_capacity(povm.len());
    for e in povm.elements() {
        let p = matops::trace(&(rho.matrix() * e)).re;
        if p < -OUTCOME_CLAMP {
            return Err(Error::input(format!("negative outcome probability {p:e}")));
        }
        probs.push(p.max(0.0));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > COMPLETENESS_TOL {
        return Err(Error::Normalization { sum });
    }
    Distribution::new(probs.iter().map(|p| p / sum).collect())
}

/// Random rank-one POVM with `m` outcomes, `d <= m <= d^2`.
pub fn random_rank_one_povm(d: usize, m: usize, seed: Seed) -> Result<Povm> {
    if d == 0 || m < d || m > d * d {
        return Err(Error::input(format!("need d <= m <= d^2, got d = {d}, m = {m}")));
    }
    for attempt in 0.. {
        let mut rng = seed.derive(attempt).rng();
        let vs: Vec<DVector<C64>> = (0..m).map(|_| state::gaussian_vector(d, &mut rng)).collect();
        if let Ok(p) = Povm::from_vectors(&vs) {
            return Ok(p);
        }
    }
    unreachable!()
}

/// Rank-one PVM onto the columns of a Haar unitary.
pub fn random_pvm(d: usize, seed: Seed) -> Povm {
    Povm::from_basis(&state::random_unitary(d, seed)).expect("unitary columns form a PVM")
}

/// Sums elements within each part; parts must cover every outcome once.
pub fn coarse_grain(povm: &Povm, partition: &[Vec<usize>]) -> Result<Povm> {
    validate_partition(partition, povm.len())?;
    let elements = partition
        .iter()
        .map(|part| {
            part.iter()
                .fold(CMatrix::zeros(povm.dim(), povm.dim()), |acc, &i| acc + &povm.elements()[i])
        })
        .collect();
    Ok(Povm {
        dim: povm.dim(),
        elements,
    })
}

pub(crate) fn validate_partition(partition: &[Vec<usize>], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for part in partition {
        if part.is_empty() {
            return Err(Error::input("partition has an empty part"));
        }
        for &i in part {
            if i >= n || seen[i] {
                return Err(Error::input(format!("partition index {i} repeated or out of range")));
            }
            seen[i] = true;
        }
    }
    if seen.iter().any(|s| !s) {
        return Err(Error::input("partition does not cover every outcome"));
    }
    Ok(())
}

/// All set partitions of `0..n` in a fixed (restricted-growth) order.
pub fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn rec(i: usize, n: usize, labels: &mut Vec<usize>, out: &mut Vec<Vec<Vec<usize>>>) {
        if i == n {
            let blocks = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut parts = vec![Vec::new(); blocks];
            for (idx, &l) in labels.iter().enumerate() {
                parts[l].push(idx);
            }
            out.push(parts);
            return;
        }
        let next = labels.iter().copied().max().map_or(0, |m| m + 1);
        for l in 0..=next {
            labels.push(l);
            rec(i + 1, n, labels, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, &mut Vec::with_capacity(n), &mut out);
    out
}

/// `{I_n ⊗ A_x}` on the product space.
pub fn lift(povm: &Povm, n: usize) -> Result<Povm> {
    if n == 0 {
        return Err(Error::input("lift needs n >= 1"));
    }
    Ok(Povm {
        dim: n * povm.dim(),
        elements: povm
            .elements()
            .iter()
            .map(|e| matops::lift_identity(e, n))
            .collect(),
    })
}

/// Eigen-decomposition of `rho0 - rho1` and the indices of the eigenvalues
/// assigned to the positive Helstrom projector (`lambda >= -tol::EQ`).
pub(crate) fn helstrom_split(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<(matops::Eigen, Vec<usize>)> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            found: rho1.dim(),
        });
    }
    let diff = Hermitian::symmetrize(rho0.matrix() - rho1.matrix());
    let eig = diff.eigen();
    let pos = (0..eig.values.len()).filter(|&i| eig.values[i] >= -tol::EQ).collect();
    Ok((eig, pos))
}

/// Two-outcome PVM `{P+, I - P+}` minimizing the error probability.
pub fn helstrom_pvm(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<Povm> {
    let (eig, pos) = helstrom_split(rho0, rho1)?;
    let neg: Vec<usize> = (0..eig.values.len()).filter(|i| !pos.contains(i)).collect();
    let p_plus = eig.projector(pos);
    let p_minus = eig.projector(neg);
    Ok(Povm {
        dim: rho0.dim(),
        elements: vec![p_plus, p_minus],
    })
}
