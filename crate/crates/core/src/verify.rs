//! Randomized verification suites.
//!
//! Every check is a pair of functions: a generator that draws a
//! [`Witness`] from a per-trial seed, and an evaluator that maps a witness to
//! a signed slack (`RHS - LHS`, negative means violated). The runner only
//! ever evaluates the witness it would serialize, so a recorded failure
//! replays exactly through [`replay`].

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{self, d_k_classical, f_k_classical, j_func, sd_k_classical, Distribution};
use crate::error::{Error, Result};
use crate::io::{MatrixFile, PovmFile, VERSION};
use crate::matops::{self, BipartiteOperator, Hermitian, NormId};
use crate::measurement::{self, classify, coarse_grain, lift, Family, Povm};
use crate::quantum::{self, induced_pair, partial_fidelity, partitioned_trace_distance, sd_k_povm};
use crate::state::{self, BipartiteState, DensityMatrix, OperatorKind, Seed};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub master_seed: Seed,
    pub trials: usize,
    pub dims: Vec<usize>,
    pub bipartite_n: Vec<usize>,
    /// Estimator starts for the checks that run the SD search.
    pub budget: usize,
    pub slack: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            master_seed: Seed(20_240_917),
            trials: 500,
            dims: vec![2, 3, 4],
            bipartite_n: vec![2, 3],
            budget: 2,
            slack: 1e-7,
        }
    }
}

impl SuiteConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::input("trials must be at least 1"));
        }
        if self.dims.is_empty() || self.dims.iter().any(|&d| d < 2) {
            return Err(Error::input("dims must be a nonempty list of values >= 2"));
        }
        if self.bipartite_n.is_empty() || self.bipartite_n.contains(&0) {
            return Err(Error::input("bipartite_n must be a nonempty list of values >= 1"));
        }
        if self.budget == 0 {
            return Err(Error::input("budget must be at least 1"));
        }
        if !self.slack.is_finite() {
            return Err(Error::input("slack must be finite"));
        }
        Ok(())
    }
}

/// Serializable inputs of one trial.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub matrices: BTreeMap<String, MatrixFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub povm: Option<PovmFile>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub vectors: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub ints: BTreeMap<String, u64>,
}

impl Witness {
    fn with_matrix(mut self, name: &str, m: MatrixFile) -> Self {
        self.matrices.insert(name.into(), m);
        self
    }

    fn with_state(self, name: &str, rho: &DensityMatrix) -> Self {
        self.with_matrix(name, MatrixFile::from_matrix(rho.matrix()))
    }

    fn with_bipartite(self, name: &str, s: &BipartiteState) -> Self {
        let mut m = MatrixFile::from_matrix(s.state().matrix());
        m.split_n = Some(s.n());
        self.with_matrix(name, m)
    }

    fn with_povm(mut self, povm: &Povm) -> Self {
        self.povm = Some(PovmFile::from_povm(povm));
        self
    }

    fn with_vector(mut self, name: &str, v: Vec<f64>) -> Self {
        self.vectors.insert(name.into(), v);
        self
    }

    fn with_int(mut self, name: &str, v: u64) -> Self {
        self.ints.insert(name.into(), v);
        self
    }

    fn matrix(&self, name: &str) -> Result<&MatrixFile> {
        self.matrices
            .get(name)
            .ok_or_else(|| Error::parse(name, "missing from witness"))
    }

    fn density(&self, name: &str) -> Result<DensityMatrix> {
        self.matrix(name)?.to_density()
    }

    fn bipartite_state(&self, name: &str) -> Result<BipartiteState> {
        let m = self.matrix(name)?;
        let n = m
            .split_n
            .ok_or_else(|| Error::parse("split_N", format!("missing on {name}")))?;
        BipartiteState::new(m.to_density()?, n)
    }

    fn operator(&self, name: &str) -> Result<BipartiteOperator> {
        self.matrix(name)?.to_bipartite()
    }

    fn hermitian(&self, name: &str) -> Result<Hermitian> {
        Hermitian::new(self.matrix(name)?.to_matrix()?)
    }

    fn povm(&self) -> Result<Povm> {
        self.povm
            .as_ref()
            .ok_or_else(|| Error::parse("povm", "missing from witness"))?
            .to_povm()
    }

    fn vector(&self, name: &str) -> Result<&[f64]> {
        self.vectors
            .get(name)
            .map(Vec::as_slice)
            .ok_or_else(|| Error::parse(name, "missing from witness"))
    }

    fn int(&self, name: &str) -> Result<u64> {
        self.ints
            .get(name)
            .copied()
            .ok_or_else(|| Error::parse(name, "missing from witness"))
    }

    fn pair(&self) -> Result<(DensityMatrix, DensityMatrix)> {
        Ok((self.density("rho0")?, self.density("rho1")?))
    }

    fn bipartite_pair(&self) -> Result<(BipartiteState, BipartiteState)> {
        Ok((self.bipartite_state("rho0_tilde")?, self.bipartite_state("rho1_tilde")?))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureWitness {
    pub trial: usize,
    /// `None` when evaluation itself failed; see `error`.
    pub slack: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub input: Witness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    /// Hard checks decide the overall verdict; the rest are warnings.
    pub hard: bool,
    /// A trial passes iff its slack is at least `-tolerance`.
    pub tolerance: f64,
    pub trials: usize,
    pub passes: usize,
    pub errors: usize,
    pub worst_slack: Option<f64>,
    pub passed: bool,
    pub witness: Option<FailureWitness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub version: String,
    pub config: SuiteConfig,
    pub checks: Vec<CheckResult>,
    pub hard_failures: usize,
    pub warnings: usize,
    pub passed: bool,
}

impl VerificationReport {
    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

// ---------------------------------------------------------------------------
// Single-instance checks.

/// `||At||_(Nk) - ||Tr_G At||_(k)`
pub fn check_lemma1(at: &BipartiteOperator, k: usize) -> Result<f64> {
    if k == 0 || k > at.d() {
        return Err(Error::input(format!("k = {k} outside 1..={}", at.d())));
    }
    let a = at.partial_trace();
    Ok(matops::ky_fan_norm(at.matrix(), at.n() * k)? - matops::ky_fan_norm(&a, k)?)
}

/// Smallest slack among `||A||_inf <= ||At||_(N) <= N ||At||_inf`,
/// `||A||_inf <= N ||At||_inf` and `||A||_F <= sqrt(N) ||At||_F`.
pub fn check_kyfan_strengthening(at: &BipartiteOperator) -> Result<f64> {
    let n = at.n() as f64;
    let a = at.partial_trace();
    let a_inf = matops::spectral_norm(&a)?;
    let at_inf = matops::spectral_norm(at.matrix())?;
    let at_n = matops::ky_fan_norm(at.matrix(), at.n())?;
    let slacks = [
        at_n - a_inf,
        n * at_inf - at_n,
        n * at_inf - a_inf,
        n.sqrt() * matops::frobenius(at.matrix()) - matops::frobenius(&a),
    ];
    Ok(slacks.into_iter().fold(f64::INFINITY, f64::min))
}

/// `(D_(Nk)(rt) - D_k(r), F_k(r) - F_(Nk)(rt))` for `0 <= k <= d`.
pub fn check_partial_trace_monotonicity(
    rho0: &BipartiteState,
    rho1: &BipartiteState,
    k: usize,
) -> Result<(f64, f64)> {
    if rho0.n() != rho1.n() || rho0.d() != rho1.d() {
        return Err(Error::DimensionMismatch {
            expected: rho0.state().dim(),
            found: rho1.state().dim(),
        });
    }
    let n = rho0.n();
    let (r0, r1) = (rho0.reduced(), rho1.reduced());
    let dist = partitioned_trace_distance(rho0.state(), rho1.state(), n * k)?
        - partitioned_trace_distance(&r0, &r1, k)?;
    let fid = partial_fidelity(&r0, &r1, k)? - partial_fidelity(rho0.state(), rho1.state(), n * k)?;
    Ok((dist, fid))
}

/// Slacks of the upper bounds applicable to one POVM at one `k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremSlacks {
    /// `min(D_k - SD_k, 1 - F_k - D_k)` on the induced distributions.
    pub chain: f64,
    /// `D_k(rho) - SD_k`, family A only.
    pub dk_bound: Option<f64>,
    /// `1 - F_k(rho) - SD_k`, family B only.
    pub fidelity_bound: Option<f64>,
}

pub fn check_theorems(rho0: &DensityMatrix, rho1: &DensityMatrix, k: usize, povm: &Povm) -> Result<TheoremSlacks> {
    let (p0, p1) = induced_pair(rho0, rho1, povm)?;
    let kc = k.min(p0.len());
    let sd = sd_k_classical(&p0, &p1, kc)?;
    let dk = d_k_classical(&p0, &p1, kc)?;
    let fk = f_k_classical(&p0, &p1, kc)?;
    let chain = (dk - sd).min(1.0 - fk - dk);
    let tag = classify(povm);
    let d = rho0.dim();
    let quantum_k = k <= d;
    let dk_bound = if tag.in_a && quantum_k {
        Some(partitioned_trace_distance(rho0, rho1, k)? - sd)
    } else {
        None
    };
    let fidelity_bound = if tag.in_b && quantum_k {
        Some(1.0 - partial_fidelity(rho0, rho1, k)? - sd)
    } else {
        None
    };
    Ok(TheoremSlacks {
        chain,
        dk_bound,
        fidelity_bound,
    })
}

/// Bipartite forms: `D_(kN)(rt) - SD_k(r)` for family A and the gap
/// `|SD_k(r; A) - SD_k(rt; I (x) A)|` for family B.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BipartiteSlacks {
    pub dk_bound: Option<f64>,
    pub lifted_gap: Option<f64>,
}

pub fn check_theorems_bipartite(
    rho0: &BipartiteState,
    rho1: &BipartiteState,
    k: usize,
    povm: &Povm,
) -> Result<BipartiteSlacks> {
    let n = rho0.n();
    let (r0, r1) = (rho0.reduced(), rho1.reduced());
    let sd = sd_k_povm(&r0, &r1, povm, k)?;
    let tag = classify(povm);
    let dk_bound = if tag.in_a && k <= rho0.d() {
        Some(partitioned_trace_distance(rho0.state(), rho1.state(), k * n)? - sd)
    } else {
        None
    };
    let lifted_gap = if tag.in_b {
        let lifted = lift(povm, n)?;
        Some((sd - sd_k_povm(rho0.state(), rho1.state(), &lifted, k)?).abs())
    } else {
        None
    };
    Ok(BipartiteSlacks { dk_bound, lifted_gap })
}

/// Submajorization slacks of the term vector `(p0 + p1) J`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorizationSlacks {
    /// Against `s(rho0 - rho1)`, family A only.
    pub family_a: Option<f64>,
    /// Against `2 s(sqrt(rho0) sqrt(rho1))`, family B only.
    pub family_b: Option<f64>,
}

pub fn check_majorization(rho0: &DensityMatrix, rho1: &DensityMatrix, povm: &Povm) -> Result<MajorizationSlacks> {
    let (p0, p1) = induced_pair(rho0, rho1, povm)?;
    // sd_terms are p(x) J with p = (p0 + p1) / 2.
    let terms: Vec<f64> = classical::sd_terms(&p0, &p1)?.iter().map(|t| 2.0 * t).collect();
    let tag = classify(povm);
    let family_a = if tag.in_a {
        let s = matops::singular_values(&(rho0.matrix() - rho1.matrix()))?;
        Some(classical::submajorization_slack(&terms, &s))
    } else {
        None
    };
    let family_b = if tag.in_b {
        let s = matops::singular_values(&quantum::sqrt_product(rho0, rho1)?)?;
        let doubled: Vec<f64> = s.iter().map(|x| 2.0 * x).collect();
        Some(classical::submajorization_slack(&terms, &doubled))
    } else {
        None
    };
    Ok(MajorizationSlacks { family_a, family_b })
}

/// `min(|||A||| / |||Z||| - ||A||_inf, |||Z||| ||A||_tr / 2 - |||A|||)` for
/// traceless Hermitian `A`.
pub fn check_norm_equivalence(a: &Hermitian, norm: NormId) -> Result<f64> {
    let tr = matops::trace(a.as_matrix());
    if tr.norm() > 1e-10 {
        return Err(Error::input(format!("operator is not traceless (trace {tr})")));
    }
    let m = a.as_matrix();
    let z = matops::z_norm_constant(norm, a.dim())?;
    let value = norm.evaluate(m)?;
    let first = value / z - matops::spectral_norm(m)?;
    let second = 0.5 * z * matops::trace_norm(m)? - value;
    Ok(first.min(second))
}

// ---------------------------------------------------------------------------
// Check registry.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    /// `slack >= -config.slack`
    Inequality,
    /// `slack = -|difference| >= -min(config.slack, 1e-9)`
    Equality,
    /// `slack = bound - residual >= -min(config.slack, 0)`
    Residual,
}

struct Ctx {
    seed: Seed,
    trial: usize,
    d: usize,
    n: usize,
    budget: usize,
}

struct CheckDef {
    name: &'static str,
    hard: bool,
    kind: Kind,
    /// Fixed trial count overriding the config (grid checks).
    fixed_trials: Option<usize>,
    generate: fn(&Ctx) -> Result<Witness>,
    evaluate: fn(&Witness) -> Result<f64>,
}

const fn check(
    name: &'static str,
    kind: Kind,
    generate: fn(&Ctx) -> Result<Witness>,
    evaluate: fn(&Witness) -> Result<f64>,
) -> CheckDef {
    CheckDef {
        name,
        hard: true,
        kind,
        fixed_trials: None,
        generate,
        evaluate,
    }
}

const J_GRID: usize = 101;

const CHECKS: &[CheckDef] = &[
    check("kyfan_partial_trace_general", Kind::Inequality, |c| gen_operator(c, OperatorKind::General), eval_kyfan_partial_trace),
    check("kyfan_partial_trace_hermitian", Kind::Inequality, |c| gen_operator(c, OperatorKind::Hermitian), eval_kyfan_partial_trace),
    check(
        "kyfan_partial_trace_traceless",
        Kind::Inequality,
        |c| gen_operator(c, OperatorKind::TracelessHermitian),
        eval_kyfan_partial_trace,
    ),
    check("kyfan_strengthening", Kind::Inequality, gen_operator_any, eval_kyfan_strengthening),
    check("lr_factorization", Kind::Residual, gen_operator_any, eval_lr_residual),
    check("lr_cauchy_schwarz", Kind::Inequality, gen_operator_any, eval_lr_cauchy_schwarz),
    check("kyfan_projectors", Kind::Equality, gen_hermitian, eval_kyfan_projectors),
    check("partial_trace_distance", Kind::Inequality, gen_bipartite_pair, eval_partial_trace_distance),
    check("partial_trace_fidelity", Kind::Inequality, gen_bipartite_pair, eval_partial_trace_fidelity),
    check("marginal_distance", Kind::Inequality, gen_joint, eval_marginal_distance),
    check("classical_chain", Kind::Inequality, gen_pair_any_povm, eval_classical_chain),
    check("sdk_below_dk", Kind::Inequality, |c| gen_pair_povm(c, Family::A), eval_sdk_dk),
    check("sdk_below_dk_bipartite", Kind::Inequality, |c| gen_bipartite_povm(c, Family::A), eval_sdk_dk_bipartite),
    check("sdk_below_infidelity", Kind::Inequality, |c| gen_pair_povm(c, Family::B), eval_sdk_fidelity),
    check("lifted_statistics", Kind::Equality, |c| gen_bipartite_povm(c, Family::B), eval_lifted),
    check("sdk_above_helstrom", Kind::Inequality, gen_pair_budget, eval_sdk_helstrom),
    check("dk_above_fidelity_floor", Kind::Inequality, gen_pair, eval_dk_fidelity_floor),
    CheckDef {
        hard: false,
        ..check("sdk_above_fidelity_floor", Kind::Inequality, gen_pair_budget, eval_sdk_fidelity_floor)
    },
    check("majorization_family_a", Kind::Inequality, |c| gen_pair_povm(c, Family::A), eval_majorization_a),
    check("majorization_family_b", Kind::Inequality, |c| gen_pair_povm(c, Family::B), eval_majorization_b),
    check("norm_equivalence_schatten_1", Kind::Inequality, gen_traceless, |w| {
        eval_norm(w, NormId::Schatten { q: 1.0 })
    }),
    check("norm_equivalence_schatten_2", Kind::Inequality, gen_traceless, |w| {
        eval_norm(w, NormId::Schatten { q: 2.0 })
    }),
    check("norm_equivalence_schatten_inf", Kind::Inequality, gen_traceless, |w| {
        eval_norm(w, NormId::Schatten { q: f64::INFINITY })
    }),
    check("norm_equivalence_kyfan", Kind::Inequality, gen_traceless_k, eval_norm_kyfan),
    check("partial_sum_bound", Kind::Inequality, gen_values, eval_partial_sum),
    CheckDef {
        fixed_trials: Some(J_GRID),
        ..check("j_upper", Kind::Inequality, gen_grid_point, eval_j_upper)
    },
    CheckDef {
        fixed_trials: Some(J_GRID),
        ..check("j_lower", Kind::Inequality, gen_grid_point, eval_j_lower)
    },
    check("helstrom_identity", Kind::Equality, gen_pair, eval_helstrom_identity),
];

/// Names of all checks in report order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|c| c.name).collect()
}

/// Re-evaluates a serialized witness.
pub fn replay(name: &str, witness: &Witness) -> Result<f64> {
    let def = CHECKS
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| Error::input(format!("unknown check `{name}`")))?;
    (def.evaluate)(witness)
}

// ---------------------------------------------------------------------------
// Generators.

fn pick_rank(d: usize, seed: Seed) -> usize {
    seed.rng().random_range(1..=d)
}

fn gen_state(d: usize, seed: Seed) -> Result<DensityMatrix> {
    state::random_mixed(d, pick_rank(d, seed.derive(0)), seed.derive(1))
}

fn gen_bipartite_state(n: usize, d: usize, seed: Seed) -> Result<BipartiteState> {
    state::random_bipartite_state(n, d, pick_rank(n * d, seed.derive(0)), seed.derive(1))
}

fn gen_povm(d: usize, family: Family, seed: Seed) -> Result<Povm> {
    let mut rng = seed.rng();
    match family {
        Family::A => {
            let m = rng.random_range(d..=d * d);
            measurement::random_rank_one_povm(d, m, seed.derive(1))
        }
        Family::B => {
            let pvm = measurement::random_pvm(d, seed.derive(1));
            let partitions = measurement::set_partitions(d);
            let p = &partitions[rng.random_range(0..partitions.len())];
            coarse_grain(&pvm, p)
        }
    }
}

/// Scaled to unit trace norm so slacks are on a common scale.
fn unit_trace_norm(m: matops::CMatrix) -> Result<matops::CMatrix> {
    let t = matops::trace_norm(&m)?;
    Ok(if t > 0.0 { m / matops::c(t) } else { m })
}

fn gen_operator(ctx: &Ctx, kind: OperatorKind) -> Result<Witness> {
    let at = state::random_bipartite_operator(ctx.n, ctx.d, ctx.seed, kind);
    let at = BipartiteOperator::new(unit_trace_norm(at.into_matrix())?, ctx.n)?;
    Ok(Witness::default().with_matrix("at", MatrixFile::bipartite(&at)))
}

fn gen_operator_any(ctx: &Ctx) -> Result<Witness> {
    let kinds = [
        OperatorKind::General,
        OperatorKind::Hermitian,
        OperatorKind::TracelessHermitian,
    ];
    gen_operator(ctx, kinds[ctx.trial % kinds.len()])
}

fn gen_hermitian(ctx: &Ctx) -> Result<Witness> {
    let h = state::random_hermitian(ctx.d, ctx.seed);
    Ok(Witness::default().with_matrix("h", MatrixFile::from_matrix(h.as_matrix())))
}

fn gen_traceless(ctx: &Ctx) -> Result<Witness> {
    let a = state::random_traceless_hermitian(ctx.d, ctx.seed);
    let a = state::traceless(unit_trace_norm(a.into_matrix())?);
    Ok(Witness::default().with_matrix("a", MatrixFile::from_matrix(&a)))
}

fn gen_traceless_k(ctx: &Ctx) -> Result<Witness> {
    let k = ctx.seed.derive(7).rng().random_range(1..=ctx.d);
    Ok(gen_traceless(ctx)?.with_int("k", k as u64))
}

fn gen_pair(ctx: &Ctx) -> Result<Witness> {
    let r0 = gen_state(ctx.d, ctx.seed.derive(0))?;
    let r1 = gen_state(ctx.d, ctx.seed.derive(1))?;
    Ok(Witness::default().with_state("rho0", &r0).with_state("rho1", &r1))
}

fn gen_pair_budget(ctx: &Ctx) -> Result<Witness> {
    Ok(gen_pair(ctx)?
        .with_int("budget", ctx.budget as u64)
        .with_int("seed", ctx.seed.derive(3).0))
}

fn gen_pair_povm(ctx: &Ctx, family: Family) -> Result<Witness> {
    let povm = gen_povm(ctx.d, family, ctx.seed.derive(2))?;
    Ok(gen_pair(ctx)?.with_povm(&povm))
}

fn gen_pair_any_povm(ctx: &Ctx) -> Result<Witness> {
    let family = if ctx.trial.is_multiple_of(2) { Family::A } else { Family::B };
    gen_pair_povm(ctx, family)
}

fn gen_bipartite_pair(ctx: &Ctx) -> Result<Witness> {
    let s0 = gen_bipartite_state(ctx.n, ctx.d, ctx.seed.derive(0))?;
    let s1 = gen_bipartite_state(ctx.n, ctx.d, ctx.seed.derive(1))?;
    Ok(Witness::default()
        .with_bipartite("rho0_tilde", &s0)
        .with_bipartite("rho1_tilde", &s1))
}

fn gen_bipartite_povm(ctx: &Ctx, family: Family) -> Result<Witness> {
    let povm = gen_povm(ctx.d, family, ctx.seed.derive(2))?;
    Ok(gen_bipartite_pair(ctx)?.with_povm(&povm))
}

/// Two joint distributions over `(xi, x)`, `xi < N`, `x < d`, stored
/// `xi`-major: the diagonals of random states on the product space.
fn gen_joint(ctx: &Ctx) -> Result<Witness> {
    let diag = |s: Seed| -> Result<Vec<f64>> {
        let r = gen_state(ctx.n * ctx.d, s)?;
        Ok((0..r.dim()).map(|i| r.matrix()[(i, i)].re).collect())
    };
    Ok(Witness::default()
        .with_vector("joint0", diag(ctx.seed.derive(0))?)
        .with_vector("joint1", diag(ctx.seed.derive(1))?)
        .with_int("n", ctx.n as u64))
}

fn gen_values(ctx: &Ctx) -> Result<Witness> {
    let mut rng = ctx.seed.rng();
    let len = rng.random_range(1..=16);
    let values: Vec<f64> = (0..len)
        .map(|_| {
            // A share of exact zeros exercises ties in the sort.
            if rng.random_bool(0.2) {
                0.0
            } else {
                -rng.random::<f64>().ln()
            }
        })
        .collect();
    let m = rng.random_range(0..=len);
    Ok(Witness::default().with_vector("values", values).with_int("m", m as u64))
}

fn gen_grid_point(ctx: &Ctx) -> Result<Witness> {
    let r = ctx.trial as f64 / (J_GRID - 1) as f64;
    Ok(Witness::default().with_vector("r", vec![r]))
}

// ---------------------------------------------------------------------------
// Evaluators.

fn min_over(range: impl IntoIterator<Item = usize>, mut f: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let mut worst = f64::INFINITY;
    for k in range {
        worst = worst.min(f(k)?);
    }
    Ok(worst)
}

fn require(value: Option<f64>, what: &str) -> Result<f64> {
    value.ok_or_else(|| Error::input(format!("witness POVM is not in {what}")))
}

fn eval_kyfan_partial_trace(w: &Witness) -> Result<f64> {
    let at = w.operator("at")?;
    min_over(1..=at.d(), |k| check_lemma1(&at, k))
}

fn eval_kyfan_strengthening(w: &Witness) -> Result<f64> {
    check_kyfan_strengthening(&w.operator("at")?)
}

fn eval_lr_residual(w: &Witness) -> Result<f64> {
    let at = w.operator("at")?;
    let f = matops::lr_decompose(&at)?;
    Ok(matops::lr_bound(&at) - f.residuals.max())
}

/// `||LR^+||_(k) <= sqrt(||LL^+||_(k) ||RR^+||_(k)) <= max(..) <= ||At||_(Nk)`
fn eval_lr_cauchy_schwarz(w: &Witness) -> Result<f64> {
    let at = w.operator("at")?;
    let f = matops::lr_decompose(&at)?;
    let lr = &f.left * f.right.adjoint();
    let ll = &f.left * f.left.adjoint();
    let rr = &f.right * f.right.adjoint();
    min_over(1..=at.d(), |k| {
        let lhs = matops::ky_fan_norm(&lr, k)?;
        let nl = matops::ky_fan_norm(&ll, k)?;
        let nr = matops::ky_fan_norm(&rr, k)?;
        let gm = (nl * nr).sqrt();
        let mx = nl.max(nr);
        let top = matops::ky_fan_norm(at.matrix(), at.n() * k)?;
        Ok((gm - lhs).min(mx - gm).min(top - mx))
    })
}

fn eval_kyfan_projectors(w: &Witness) -> Result<f64> {
    let h = w.hermitian("h")?;
    min_over(1..=h.dim(), |k| {
        let (p, q) = matops::kyfan_optimal_projectors(&h, k)?;
        let attained = matops::trace(&((p - q) * h.as_matrix())).re;
        Ok(-(attained - matops::ky_fan_norm(h.as_matrix(), k)?).abs())
    })
}

fn eval_partial_trace_distance(w: &Witness) -> Result<f64> {
    let (s0, s1) = w.bipartite_pair()?;
    min_over(0..=s0.d(), |k| Ok(check_partial_trace_monotonicity(&s0, &s1, k)?.0))
}

fn eval_partial_trace_fidelity(w: &Witness) -> Result<f64> {
    let (s0, s1) = w.bipartite_pair()?;
    min_over(0..=s0.d(), |k| Ok(check_partial_trace_monotonicity(&s0, &s1, k)?.1))
}

fn eval_marginal_distance(w: &Witness) -> Result<f64> {
    let j0 = Distribution::new(w.vector("joint0")?.to_vec())?;
    let j1 = Distribution::new(w.vector("joint1")?.to_vec())?;
    let n = w.int("n")? as usize;
    if n == 0 || j0.len() != j1.len() || j0.len() % n != 0 {
        return Err(Error::input("joint distributions do not split into N blocks"));
    }
    let m = j0.len() / n;
    let marginal = |j: &Distribution| -> Result<Distribution> {
        Distribution::new((0..m).map(|x| (0..n).map(|xi| j.probs()[xi * m + x]).sum()).collect())
    };
    let (p0, p1) = (marginal(&j0)?, marginal(&j1)?);
    min_over(0..=m, |k| Ok(d_k_classical(&j0, &j1, k * n)? - d_k_classical(&p0, &p1, k)?))
}

fn eval_classical_chain(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    let povm = w.povm()?;
    min_over(0..=povm.len(), |k| Ok(check_theorems(&r0, &r1, k, &povm)?.chain))
}

fn eval_sdk_dk(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    let povm = w.povm()?;
    min_over(0..=r0.dim(), |k| require(check_theorems(&r0, &r1, k, &povm)?.dk_bound, "family A"))
}

fn eval_sdk_fidelity(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    let povm = w.povm()?;
    min_over(0..=r0.dim(), |k| require(check_theorems(&r0, &r1, k, &povm)?.fidelity_bound, "family B"))
}

fn eval_sdk_dk_bipartite(w: &Witness) -> Result<f64> {
    let (s0, s1) = w.bipartite_pair()?;
    let povm = w.povm()?;
    min_over(0..=s0.d(), |k| {
        require(check_theorems_bipartite(&s0, &s1, k, &povm)?.dk_bound, "family A")
    })
}

fn eval_lifted(w: &Witness) -> Result<f64> {
    let (s0, s1) = w.bipartite_pair()?;
    let povm = w.povm()?;
    min_over(0..=s0.d(), |k| {
        Ok(-require(check_theorems_bipartite(&s0, &s1, k, &povm)?.lifted_gap, "family B")?)
    })
}

fn estimator_params(w: &Witness) -> Result<(usize, Seed)> {
    Ok((w.int("budget")? as usize, Seed(w.int("seed")?)))
}

/// `SD_k^B estimate - (k/d) J(PE)`
fn eval_sdk_helstrom(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    let (budget, seed) = estimator_params(w)?;
    let d = r0.dim();
    let jpe = j_func(quantum::pe_quantum(&r0, &r1)?.clamp(0.0, 1.0))?;
    min_over(1..=d, |k| {
        let est = quantum::estimate_sd_k(&r0, &r1, k, Family::B, budget, seed)?;
        Ok(est.value - k as f64 / d as f64 * jpe)
    })
}

fn fidelity_floor(r0: &DensityMatrix, r1: &DensityMatrix, k: usize) -> Result<f64> {
    let d = r0.dim() as f64;
    Ok(k as f64 / (d * d) * (1.0 - quantum::fidelity(r0, r1)?))
}

/// `D_k - (k/d^2)(1 - F_0)`
fn eval_dk_fidelity_floor(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    min_over(0..=r0.dim(), |k| {
        Ok(partitioned_trace_distance(&r0, &r1, k)? - fidelity_floor(&r0, &r1, k)?)
    })
}

/// `SD_k^A estimate - (k/d^2)(1 - F_0)`; a shortfall may be search failure.
fn eval_sdk_fidelity_floor(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    let (budget, seed) = estimator_params(w)?;
    min_over(1..=r0.dim(), |k| {
        let est = quantum::estimate_sd_k(&r0, &r1, k, Family::A, budget, seed)?;
        Ok(est.value - fidelity_floor(&r0, &r1, k)?)
    })
}

fn eval_majorization_a(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    require(check_majorization(&r0, &r1, &w.povm()?)?.family_a, "family A")
}

fn eval_majorization_b(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    require(check_majorization(&r0, &r1, &w.povm()?)?.family_b, "family B")
}

fn eval_norm(w: &Witness, norm: NormId) -> Result<f64> {
    check_norm_equivalence(&w.hermitian("a")?, norm)
}

fn eval_norm_kyfan(w: &Witness) -> Result<f64> {
    let k = w.int("k")? as usize;
    eval_norm(w, NormId::KyFan { k })
}

fn eval_partial_sum(w: &Witness) -> Result<f64> {
    let values = w.vector("values")?;
    let m = w.int("m")? as usize;
    min_over(0..=m, |k| classical::partial_sum_slack(values, k, m))
}

fn grid_r(w: &Witness) -> Result<f64> {
    w.vector("r")?
        .first()
        .copied()
        .ok_or_else(|| Error::parse("r", "empty"))
}

/// `|2r - 1| - J(r)`
fn eval_j_upper(w: &Witness) -> Result<f64> {
    let r = grid_r(w)?;
    Ok((2.0 * r - 1.0).abs() - j_func(r)?)
}

/// `J(r) - (2 / ln 2)(r - 1/2)^2`
fn eval_j_lower(w: &Witness) -> Result<f64> {
    let r = grid_r(w)?;
    Ok(j_func(r)? - 2.0 / std::f64::consts::LN_2 * (r - 0.5).powi(2))
}

fn eval_helstrom_identity(w: &Witness) -> Result<f64> {
    let (r0, r1) = w.pair()?;
    Ok(-(quantum::helstrom_pe(&r0, &r1)? - quantum::pe_quantum(&r0, &r1)?).abs())
}

// ---------------------------------------------------------------------------
// Runner.

fn tolerance(kind: Kind, slack: f64) -> f64 {
    match kind {
        Kind::Inequality => slack,
        Kind::Equality => slack.min(matops::tol::EQ),
        Kind::Residual => slack.min(0.0),
    }
}

struct TrialOutcome {
    slack: Result<f64>,
    witness: Witness,
}

/// Runs every check. Trials execute in parallel on the current rayon pool;
/// results are reduced in (check, trial) order so the report does not
/// depend on scheduling.
pub fn run_suite(config: &SuiteConfig) -> Result<VerificationReport> {
    config.validate()?;
    let jobs: Vec<(usize, usize)> = CHECKS
        .iter()
        .enumerate()
        .flat_map(|(ci, def)| (0..def.fixed_trials.unwrap_or(config.trials)).map(move |t| (ci, t)))
        .collect();

    let outcomes: Vec<Result<TrialOutcome>> = jobs
        .par_iter()
        .map(|&(ci, t)| {
            let def = &CHECKS[ci];
            let ctx = Ctx {
                seed: config.master_seed.derive(ci as u64).derive(t as u64),
                trial: t,
                d: config.dims[t % config.dims.len()],
                n: config.bipartite_n[(t / config.dims.len()) % config.bipartite_n.len()],
                budget: config.budget,
            };
            let witness = (def.generate)(&ctx)
                .map_err(|e| Error::Internal(format!("{}: trial {t}: generator failed: {e}", def.name)))?;
            Ok(TrialOutcome {
                slack: (def.evaluate)(&witness),
                witness,
            })
        })
        .collect();

    let mut checks: Vec<CheckResult> = CHECKS
        .iter()
        .map(|def| CheckResult {
            name: def.name.to_string(),
            hard: def.hard,
            tolerance: tolerance(def.kind, config.slack),
            trials: 0,
            passes: 0,
            errors: 0,
            worst_slack: None,
            passed: true,
            witness: None,
        })
        .collect();

    for (&(ci, t), outcome) in jobs.iter().zip(outcomes) {
        let outcome = outcome?;
        let result = &mut checks[ci];
        result.trials += 1;
        let (ok, slack, error) = match outcome.slack {
            Ok(s) => {
                result.worst_slack = Some(result.worst_slack.map_or(s, |w| w.min(s)));
                (s >= -result.tolerance, Some(s), None)
            }
            Err(e) => {
                result.errors += 1;
                (false, None, Some(e.to_string()))
            }
        };
        if ok {
            result.passes += 1;
        } else {
            result.passed = false;
            if result.witness.is_none() {
                result.witness = Some(FailureWitness {
                    trial: t,
                    slack,
                    error,
                    input: outcome.witness,
                });
            }
        }
    }

    let hard_failures = checks.iter().filter(|c| c.hard && !c.passed).count();
    let warnings = checks.iter().filter(|c| !c.hard && !c.passed).count();
    Ok(VerificationReport {
        version: VERSION.to_string(),
        config: config.clone(),
        checks,
        hard_failures,
        warnings,
        passed: hard_failures == 0,
    })
}
