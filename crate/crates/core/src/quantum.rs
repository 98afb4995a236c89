//! Quantum partitioned measures and the Shannon-distinguishability
//! estimator.
//!
//! The partitioned trace distance `D_k = ||rho0 - rho1||_(k) / 2` and the
//! partial fidelity `F_k` (sum of the `d - k` smallest singular values of
//! `sqrt(rho0) sqrt(rho1)`) have closed forms. The Shannon
//! distinguishability over a POVM family does not, so [`estimate_sd_k`]
//! runs a seeded multi-start local search and returns the best POVM found.
//! The reported value is always the exact `SD_k` of that POVM, i.e. a
//! certified lower bound on the supremum over the family.

use nalgebra::DVector;
use rayon::prelude::*;

use crate::classical::{self, pe_classical, sd_k_classical, Distribution};
use crate::error::{Error, Result};
use crate::matops::{self, c, CMatrix, Hermitian, C64};
use crate::measurement::{self, coarse_grain, outcome_distribution, Family, Povm};
use crate::state::{self, DensityMatrix, Seed};

fn same_dim(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<usize> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho0.dim(),
            found: rho1.dim(),
        });
    }
    Ok(rho0.dim())
}

/// `||rho0 - rho1||_(k) / 2` for `0 <= k <= d`.
pub fn partitioned_trace_distance(rho0: &DensityMatrix, rho1: &DensityMatrix, k: usize) -> Result<f64> {
    same_dim(rho0, rho1)?;
    Ok(0.5 * matops::ky_fan_norm(&(rho0.matrix() - rho1.matrix()), k)?)
}

pub fn trace_distance(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    let d = same_dim(rho0, rho1)?;
    partitioned_trace_distance(rho0, rho1, d)
}

/// `sqrt(rho0) sqrt(rho1)`
pub fn sqrt_product(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<CMatrix> {
    same_dim(rho0, rho1)?;
    Ok(rho0.sqrt().as_matrix() * rho1.sqrt().as_matrix())
}

/// Uhlmann fidelity `Tr|sqrt(rho0) sqrt(rho1)|`.
pub fn fidelity(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    matops::trace_norm(&sqrt_product(rho0, rho1)?)
}

/// `F_k`: the `d - k` smallest singular values of `sqrt(rho0) sqrt(rho1)`.
///
/// Computed both as a tail sum and as `F_0 - ||.||_(k)`; disagreement
/// beyond [`matops::tol::EQ`] is reported as an internal error.
pub fn partial_fidelity(rho0: &DensityMatrix, rho1: &DensityMatrix, k: usize) -> Result<f64> {
    let d = same_dim(rho0, rho1)?;
    if k > d {
        return Err(Error::input(format!("k = {k} exceeds dimension {d}")));
    }
    let prod = sqrt_product(rho0, rho1)?;
    let s = matops::singular_values(&prod)?;
    let tail: f64 = s[k..].iter().sum();
    let via_kyfan = s.iter().sum::<f64>() - matops::ky_fan_norm(&prod, k)?;
    if (tail - via_kyfan).abs() > matops::tol::EQ {
        return Err(Error::Internal(format!(
            "partial fidelity routes disagree: {tail} vs {via_kyfan}"
        )));
    }
    Ok(tail)
}

/// Minimal error probability `(1 - D_tr) / 2`.
pub fn pe_quantum(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    Ok(0.5 * (1.0 - trace_distance(rho0, rho1)?))
}

/// PE of the statistics induced by the Helstrom PVM.
pub fn helstrom_pe(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    let h = measurement::helstrom_pvm(rho0, rho1)?;
    pe_classical(&outcome_distribution(rho0, &h)?, &outcome_distribution(rho1, &h)?)
}

pub fn induced_pair(rho0: &DensityMatrix, rho1: &DensityMatrix, povm: &Povm) -> Result<(Distribution, Distribution)> {
    Ok((outcome_distribution(rho0, povm)?, outcome_distribution(rho1, povm)?))
}

/// `SD_k` of the statistics induced by `povm`; `k` clamps to the outcome count.
pub fn sd_k_povm(rho0: &DensityMatrix, rho1: &DensityMatrix, povm: &Povm, k: usize) -> Result<f64> {
    let (p0, p1) = induced_pair(rho0, rho1, povm)?;
    sd_k_classical(&p0, &p1, k.min(p0.len()))
}

pub fn sd_povm(rho0: &DensityMatrix, rho1: &DensityMatrix, povm: &Povm) -> Result<f64> {
    sd_k_povm(rho0, rho1, povm, povm.len())
}

/// Best POVM found by [`estimate_sd_k`] together with its exact `SD_k`.
#[derive(Debug, Clone)]
pub struct SdEstimate {
    pub value: f64,
    pub best_povm: Povm,
    pub family: Family,
    /// Requested `k`; `None` for the full sum.
    pub k: Option<usize>,
    pub budget: usize,
    pub seed: Seed,
    /// Position of the winning start in the schedule.
    pub start_index: usize,
}

/// Refinement schedule for each start.
#[derive(Debug, Clone, Copy)]
pub struct RefineSchedule {
    pub initial_step: f64,
    pub factor: f64,
    pub min_step: f64,
    pub perturbations: usize,
    /// Rounds allowed at one step size before it is reduced anyway.
    pub max_rounds_per_step: usize,
}

impl Default for RefineSchedule {
    fn default() -> Self {
        Self {
            initial_step: 0.2,
            factor: 0.5,
            min_step: 1e-4,
            perturbations: 8,
            max_rounds_per_step: 25,
        }
    }
}

/// A search point: rank-one generating vectors, optionally grouped into
/// coarse-grained outcomes (family B only).
#[derive(Debug, Clone)]
struct Candidate {
    vectors: Vec<DVector<C64>>,
    partition: Option<Vec<Vec<usize>>>,
}

impl Candidate {
    fn basis(u: &CMatrix, partition: Option<Vec<Vec<usize>>>) -> Self {
        Candidate {
            vectors: (0..u.ncols()).map(|j| u.column(j).into_owned()).collect(),
            partition,
        }
    }

    fn povm(&self) -> Result<Povm> {
        let fine = Povm::from_vectors(&self.vectors)?;
        match &self.partition {
            Some(p) => coarse_grain(&fine, p),
            None => Ok(fine),
        }
    }
}

struct Objective<'a> {
    rho0: &'a CMatrix,
    rho1: &'a CMatrix,
    k: usize,
}

impl Objective<'_> {
    /// `SD_k` of the candidate and its completed (tight-frame) vectors.
    fn eval(&self, cand: &Candidate) -> Option<(f64, Vec<DVector<C64>>)> {
        let ws = measurement::completed_vectors(&cand.vectors).ok()?;
        let expect = |rho: &CMatrix, w: &DVector<C64>| (w.adjoint() * rho * w)[(0, 0)].re.max(0.0);
        let fine0: Vec<f64> = ws.iter().map(|w| expect(self.rho0, w)).collect();
        let fine1: Vec<f64> = ws.iter().map(|w| expect(self.rho1, w)).collect();
        let (p0, p1) = match &cand.partition {
            Some(parts) => (
                parts.iter().map(|p| p.iter().map(|&i| fine0[i]).sum()).collect(),
                parts.iter().map(|p| p.iter().map(|&i| fine1[i]).sum()).collect(),
            ),
            None => (fine0, fine1),
        };
        Some((classical::sd_k_raw(&p0, &p1, self.k), ws))
    }
}

fn refine(start: Candidate, objective: &Objective<'_>, schedule: &RefineSchedule, seed: Seed) -> Candidate {
    let Some((mut best, ws)) = objective.eval(&start) else {
        return start;
    };
    let mut current = Candidate {
        vectors: ws,
        partition: start.partition,
    };
    let mut rng = seed.rng();
    let d = current.vectors[0].len();
    let mut step = schedule.initial_step;
    let mut rounds = 0;
    while step >= schedule.min_step {
        let mut improved = false;
        for x in 0..current.vectors.len() {
            let scale = current.vectors[x].norm().max(1e-3);
            for _ in 0..schedule.perturbations {
                let g = state::gaussian_vector(d, &mut rng);
                let gn = g.norm();
                if gn == 0.0 {
                    continue;
                }
                let mut trial = current.clone();
                trial.vectors[x] += g * c(step * scale / gn);
                if let Some((value, ws)) = objective.eval(&trial) {
                    if value > best {
                        best = value;
                        current = Candidate {
                            vectors: ws,
                            partition: trial.partition,
                        };
                        improved = true;
                    }
                }
            }
        }
        rounds += 1;
        if !improved || rounds >= schedule.max_rounds_per_step {
            step *= schedule.factor;
            rounds = 0;
        }
    }
    current
}

/// Eigenbasis of `sqrt(rho1)^+ sqrt(sqrt(rho1) rho0 sqrt(rho1)) sqrt(rho1)^+`;
/// measuring in it makes the classical fidelity equal `F_0` when `rho1` is
/// invertible.
fn fidelity_basis(rho0: &DensityMatrix, rho1: &DensityMatrix) -> CMatrix {
    let s1 = rho1.sqrt();
    let inner = Hermitian::symmetrize(s1.as_matrix() * rho0.matrix() * s1.as_matrix());
    let mid = matops::psd_sqrt(&inner).unwrap_or(inner);
    let eig = s1.eigen();
    let pinv = eig.reconstruct(|l| if l > 1e-12 { 1.0 / l } else { 0.0 });
    let m = Hermitian::symmetrize(&pinv * mid.as_matrix() * &pinv);
    m.eigen().vectors
}

fn nonempty(parts: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    parts.into_iter().filter(|p| !p.is_empty()).collect()
}

/// The deterministic prefix of the start schedule.
fn mandatory_starts(rho0: &DensityMatrix, rho1: &DensityMatrix, family: Family) -> Result<Vec<Candidate>> {
    let (diff_eig, pos) = measurement::helstrom_split(rho0, rho1)?;
    let d = rho0.dim();
    let neg: Vec<usize> = (0..d).filter(|i| !pos.contains(i)).collect();
    let bases = [
        diff_eig.vectors.clone(),
        rho0.hermitian().eigen().vectors,
        rho1.hermitian().eigen().vectors,
        fidelity_basis(rho0, rho1),
    ];
    let mut starts = Vec::new();
    if family == Family::B {
        starts.push(Candidate::basis(&diff_eig.vectors, Some(nonempty(vec![pos, neg]))));
    }
    starts.extend(bases.iter().map(|u| Candidate::basis(u, None)));
    Ok(starts)
}

fn random_start(d: usize, family: Family, index: usize, seed: Seed) -> Candidate {
    match family {
        Family::B => {
            let partitions = measurement::set_partitions(d);
            let u = state::random_unitary(d, seed);
            let p = partitions[index % partitions.len()].clone();
            let partition = if p.len() == d { None } else { Some(p) };
            Candidate::basis(&u, partition)
        }
        Family::A => {
            let span = d * d - d + 1;
            // Sweep m = d+1, ..., d^2, d, d+1, ... so that every outcome
            // count appears early in the schedule.
            let m = d + (index + 1) % span;
            let mut rng = seed.rng();
            Candidate {
                vectors: (0..m).map(|_| state::gaussian_vector(d, &mut rng)).collect(),
                partition: None,
            }
        }
    }
}

/// Multi-start search for `SD_k` over a POVM family.
///
/// Start `i` of the schedule is deterministic: Helstrom PVM (family B only),
/// then the eigenbases of `rho0 - rho1`, `rho0`, `rho1`, and the
/// fidelity-attaining basis, then random starts seeded by `seed.derive(i)`.
/// The first `budget` starts are refined and the best exact value wins,
/// ties going to the lowest start index.
pub fn estimate_sd_k(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
    k: usize,
    family: Family,
    budget: usize,
    seed: Seed,
) -> Result<SdEstimate> {
    estimate_with(rho0, rho1, Some(k), family, budget, seed, &RefineSchedule::default())
}

/// Full Shannon distinguishability over a family (all outcomes summed).
pub fn estimate_sd(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
    family: Family,
    budget: usize,
    seed: Seed,
) -> Result<SdEstimate> {
    estimate_with(rho0, rho1, None, family, budget, seed, &RefineSchedule::default())
}

pub fn estimate_with(
    rho0: &DensityMatrix,
    rho1: &DensityMatrix,
    k: Option<usize>,
    family: Family,
    budget: usize,
    seed: Seed,
    schedule: &RefineSchedule,
) -> Result<SdEstimate> {
    let d = same_dim(rho0, rho1)?;
    if budget == 0 {
        return Err(Error::input("estimator budget must be at least 1"));
    }
    let k_eff = k.unwrap_or(usize::MAX);
    let mandatory = mandatory_starts(rho0, rho1, family)?;
    let n_mandatory = mandatory.len();
    let objective = Objective {
        rho0: rho0.matrix(),
        rho1: rho1.matrix(),
        k: k_eff,
    };

    let results: Vec<Result<(f64, Povm)>> = (0..budget)
        .into_par_iter()
        .map(|i| {
            let start = if i < n_mandatory {
                mandatory[i].clone()
            } else {
                random_start(d, family, i - n_mandatory, seed.derive(2 * i as u64))
            };
            let refined = refine(start.clone(), &objective, schedule, seed.derive(2 * i as u64 + 1));
            let povm = refined.povm().or_else(|_| start.povm())?;
            let value = sd_k_povm(rho0, rho1, &povm, k_eff)?;
            Ok((value, povm))
        })
        .collect();

    let mut best: Option<(usize, f64, Povm)> = None;
    for (i, r) in results.into_iter().enumerate() {
        let (value, povm) = r?;
        if best.as_ref().is_none_or(|(_, v, _)| value > *v) {
            best = Some((i, value, povm));
        }
    }
    let (start_index, value, best_povm) = best.expect("budget >= 1");
    Ok(SdEstimate {
        value,
        best_povm,
        family,
        k,
        budget,
        seed,
        start_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{f_k_classical, j_func};
    use crate::measurement::classify;
    use crate::state::{random_mixed, random_pure};

    pub(crate) fn qubit_pvm(theta: f64, phi: f64) -> Povm {
        let (s, co) = (theta / 2.0).sin_cos();
        let e = C64::from_polar(1.0, phi);
        let up = DVector::from_vec(vec![c(co), e * s]);
        let down = DVector::from_vec(vec![-e.conj() * s, c(co)]);
        Povm::new(vec![matops::outer(&up), matops::outer(&down)]).unwrap()
    }

    fn grid_max(r0: &DensityMatrix, r1: &DensityMatrix, k: usize) -> f64 {
        let mut best = 0.0f64;
        for i in 0..64 {
            for j in 0..32 {
                let pvm = qubit_pvm(
                    std::f64::consts::PI * i as f64 / 63.0,
                    2.0 * std::f64::consts::PI * j as f64 / 32.0,
                );
                best = best.max(sd_k_povm(r0, r1, &pvm, k).unwrap());
            }
        }
        best
    }

    fn orthogonal_pair() -> (DensityMatrix, DensityMatrix) {
        (DensityMatrix::basis(2, 0).unwrap(), DensityMatrix::basis(2, 1).unwrap())
    }

    #[test]
    fn partitioned_distance_examples() {
        let (a, b) = orthogonal_pair();
        assert!((partitioned_trace_distance(&a, &b, 1).unwrap() - 0.5).abs() < 1e-12);
        assert!((partitioned_trace_distance(&a, &b, 2).unwrap() - 1.0).abs() < 1e-12);
        let r = random_mixed(3, 3, Seed(1)).unwrap();
        for k in 0..=3 {
            assert_eq!(partitioned_trace_distance(&r, &r, k).unwrap(), 0.0);
        }
        assert!(partitioned_trace_distance(&a, &r, 1).is_err());
    }

    #[test]
    fn distance_attained_by_eigenbasis_pvm() {
        for s in 0..20 {
            let r0 = random_mixed(4, 1 + s as usize % 4, Seed(s)).unwrap();
            let r1 = random_mixed(4, 4, Seed(s + 100)).unwrap();
            let (eig, _) = measurement::helstrom_split(&r0, &r1).unwrap();
            let pvm = Povm::from_basis(&eig.vectors).unwrap();
            let (p0, p1) = induced_pair(&r0, &r1, &pvm).unwrap();
            for k in 0..=4 {
                let dk = classical::d_k_classical(&p0, &p1, k).unwrap();
                assert!((dk - partitioned_trace_distance(&r0, &r1, k).unwrap()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fidelity_examples() {
        for d in 2..=4 {
            let m = DensityMatrix::maximally_mixed(d);
            for k in 0..=d {
                let f = partial_fidelity(&m, &m, k).unwrap();
                assert!((f - (d - k) as f64 / d as f64).abs() < 1e-12);
            }
        }
        let (a, b) = orthogonal_pair();
        for k in 0..=2 {
            assert!(partial_fidelity(&a, &b, k).unwrap().abs() < 1e-12);
        }
        let s0 = [0.5, 0.3, 0.2];
        let s1 = [0.1, 0.6, 0.3];
        let r0 = DensityMatrix::diagonal(&s0).unwrap();
        let r1 = DensityMatrix::diagonal(&s1).unwrap();
        let p0 = Distribution::new(s0.to_vec()).unwrap();
        let p1 = Distribution::new(s1.to_vec()).unwrap();
        for k in 0..=3 {
            let q = partial_fidelity(&r0, &r1, k).unwrap();
            assert!((q - f_k_classical(&p0, &p1, k).unwrap()).abs() < 1e-12);
        }
        assert!((fidelity(&r0, &r1).unwrap() - partial_fidelity(&r0, &r1, 0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn pe_examples() {
        let r = random_mixed(2, 2, Seed(3)).unwrap();
        assert!((pe_quantum(&r, &r).unwrap() - 0.5).abs() < 1e-12);
        let (a, b) = orthogonal_pair();
        assert!(pe_quantum(&a, &b).unwrap().abs() < 1e-12);
        for s in 0..20 {
            let r0 = random_mixed(2, 1 + s as usize % 2, Seed(s)).unwrap();
            let r1 = random_mixed(2, 2, Seed(s + 7)).unwrap();
            assert!((pe_quantum(&r0, &r1).unwrap() - helstrom_pe(&r0, &r1).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn sd_povm_examples() {
        let r = random_mixed(3, 2, Seed(2)).unwrap();
        let p = measurement::random_rank_one_povm(3, 5, Seed(3)).unwrap();
        assert_eq!(sd_k_povm(&r, &r, &p, 3).unwrap(), 0.0);
        let (a, b) = orthogonal_pair();
        assert!((sd_k_povm(&a, &b, &Povm::computational(2), 2).unwrap() - 1.0).abs() < 1e-12);
        let r1 = random_mixed(3, 3, Seed(9)).unwrap();
        for k in 0..=7 {
            let (p0, p1) = induced_pair(&r, &r1, &p).unwrap();
            let direct = sd_k_classical(&p0, &p1, k.min(5)).unwrap();
            assert!((sd_k_povm(&r, &r1, &p, k).unwrap() - direct).abs() < 1e-15);
        }
    }

    #[test]
    fn estimator_extremes() {
        let (a, b) = orthogonal_pair();
        for budget in [1, 3, 8] {
            let est = estimate_sd_k(&a, &b, 2, Family::B, budget, Seed(0)).unwrap();
            assert!((est.value - 1.0).abs() < 1e-9);
            let full = estimate_sd(&a, &b, Family::A, budget, Seed(0)).unwrap();
            assert!((full.value - 1.0).abs() < 1e-9);
        }
        let r = random_mixed(3, 3, Seed(5)).unwrap();
        assert_eq!(estimate_sd(&r, &r, Family::A, 4, Seed(1)).unwrap().value, 0.0);
        assert!(estimate_sd(&r, &r, Family::A, 0, Seed(1)).is_err());
    }

    #[test]
    fn estimator_value_is_exact_and_in_family() {
        let r0 = random_mixed(3, 2, Seed(10)).unwrap();
        let r1 = random_mixed(3, 3, Seed(11)).unwrap();
        for family in [Family::A, Family::B] {
            for k in [1, 2, 3] {
                let est = estimate_sd_k(&r0, &r1, k, family, 8, Seed(4)).unwrap();
                let again = sd_k_povm(&r0, &r1, &est.best_povm, k).unwrap();
                assert_eq!(est.value, again);
                assert!(classify(&est.best_povm).contains(family));
            }
        }
    }

    #[test]
    fn estimator_beats_grid_and_respects_sandwich() {
        for s in 0..6 {
            let r0 = random_mixed(2, 1 + s as usize % 2, Seed(s)).unwrap();
            let r1 = random_mixed(2, 2, Seed(s + 40)).unwrap();
            let est = estimate_sd_k(&r0, &r1, 2, Family::B, 64, Seed(s)).unwrap();
            let grid = grid_max(&r0, &r1, 2);
            let dtr = trace_distance(&r0, &r1).unwrap();
            assert!(est.value >= grid - 1e-9, "estimate {} < grid {}", est.value, grid);
            assert!(est.value <= dtr + 1e-9);

            let full = estimate_sd(&r0, &r1, Family::A, 64, Seed(s)).unwrap();
            let lower = (1.0 - fidelity(&r0, &r1).unwrap()).max(j_func(pe_quantum(&r0, &r1).unwrap()).unwrap());
            assert!(full.value >= lower - 1e-9, "estimate {} < lower {}", full.value, lower);
            assert!(full.value <= dtr + 1e-9);
        }
    }

    #[test]
    fn estimator_is_budget_monotone_and_deterministic() {
        let r0 = random_pure(3, Seed(20));
        let r1 = random_mixed(3, 2, Seed(21)).unwrap();
        let small = estimate_sd_k(&r0, &r1, 2, Family::A, 6, Seed(9)).unwrap();
        let large = estimate_sd_k(&r0, &r1, 2, Family::A, 12, Seed(9)).unwrap();
        assert!(large.value >= small.value);
        let repeat = estimate_sd_k(&r0, &r1, 2, Family::A, 6, Seed(9)).unwrap();
        assert_eq!(small.value, repeat.value);
        assert_eq!(small.start_index, repeat.start_index);
    }
}
