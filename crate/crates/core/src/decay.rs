//! Exponential indistinguishability of parametric state-pair families.
//!
//! A family assigns a pair `(rho0(n), rho1(n))` to each `n = 1, ..., n_max`.
//! For a measure sequence `m_n` the empirical rate is
//! `max_{n >= n0} m_n^(1/n)`: the smallest `eps` with `m_n <= eps^n` on the
//! computed tail. [`check_equivalence`] evaluates several measures on one
//! family and verifies the constant-absorption chains linking their rates.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{MatrixFile, VERSION};
use crate::matops::{self, NormId};
use crate::measurement::Family;
use crate::quantum;
use crate::state::{DensityMatrix, Seed};

const RATE_TOL: f64 = 1e-9;
const ENVELOPE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyKind {
    /// `rho0(n) = rho0`, `rho1(n) = (1 - eps^n) rho0 + eps^n sigma`
    Interpolation,
    /// `rho0(n) = (1 - eps) rho0 + eps I/d`, `rho1(n) = (1 - eps) sigma + eps I/d`
    /// for every `n`: a constant, nonzero gap.
    DepolarizingGap,
    /// Explicit pairs, `pairs[n - 1]` for index `n`.
    Custom,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairFile {
    pub rho0: MatrixFile,
    pub rho1: MatrixFile,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilySpec {
    pub kind: FamilyKind,
    pub d: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho0: Option<MatrixFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<MatrixFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairs: Vec<PairFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
}

impl FamilySpec {
    pub fn interpolation(rho0: &DensityMatrix, sigma: &DensityMatrix, epsilon: f64, n_max: usize) -> Self {
        Self::parametric(FamilyKind::Interpolation, rho0, sigma, epsilon, n_max)
    }

    pub fn depolarizing_gap(rho0: &DensityMatrix, sigma: &DensityMatrix, epsilon: f64, n_max: usize) -> Self {
        Self::parametric(FamilyKind::DepolarizingGap, rho0, sigma, epsilon, n_max)
    }

    pub fn custom(pairs: &[(DensityMatrix, DensityMatrix)]) -> Self {
        FamilySpec {
            kind: FamilyKind::Custom,
            d: pairs.first().map_or(0, |p| p.0.dim()),
            rho0: None,
            sigma: None,
            epsilon: None,
            pairs: pairs
                .iter()
                .map(|(a, b)| PairFile {
                    rho0: MatrixFile::from_matrix(a.matrix()),
                    rho1: MatrixFile::from_matrix(b.matrix()),
                })
                .collect(),
            n_max: Some(pairs.len()),
        }
    }

    fn parametric(kind: FamilyKind, rho0: &DensityMatrix, sigma: &DensityMatrix, epsilon: f64, n_max: usize) -> Self {
        FamilySpec {
            kind,
            d: rho0.dim(),
            rho0: Some(MatrixFile::from_matrix(rho0.matrix())),
            sigma: Some(MatrixFile::from_matrix(sigma.matrix())),
            epsilon: Some(epsilon),
            pairs: Vec::new(),
            n_max: Some(n_max),
        }
    }

    /// Validates the spec and materializes its base states.
    pub fn resolve(&self) -> Result<ResolvedFamily> {
        let load = |m: &Option<MatrixFile>, field: &str| -> Result<DensityMatrix> {
            let rho = m
                .as_ref()
                .ok_or_else(|| Error::parse(field, format!("required for {:?} families", self.kind)))?
                .to_density()?;
            if rho.dim() != self.d {
                return Err(Error::DimensionMismatch {
                    expected: self.d,
                    found: rho.dim(),
                });
            }
            Ok(rho)
        };
        let inner = match self.kind {
            FamilyKind::Interpolation | FamilyKind::DepolarizingGap => {
                let eps = self
                    .epsilon
                    .ok_or_else(|| Error::parse("epsilon", "required for parametric families"))?;
                if !(eps > 0.0 && eps < 1.0) {
                    return Err(Error::parse("epsilon", format!("{eps} is outside (0, 1)")));
                }
                let rho0 = load(&self.rho0, "rho0")?;
                let sigma = load(&self.sigma, "sigma")?;
                if self.kind == FamilyKind::Interpolation {
                    Inner::Interpolation { rho0, sigma, eps }
                } else {
                    let mixed = DensityMatrix::maximally_mixed(self.d);
                    Inner::Constant(rho0.mix(&mixed, eps)?, sigma.mix(&mixed, eps)?)
                }
            }
            FamilyKind::Custom => {
                if self.pairs.is_empty() {
                    return Err(Error::parse("pairs", "custom families need at least one pair"));
                }
                let pairs = self
                    .pairs
                    .iter()
                    .map(|p| Ok((load(&Some(p.rho0.clone()), "rho0")?, load(&Some(p.rho1.clone()), "rho1")?)))
                    .collect::<Result<Vec<_>>>()?;
                Inner::Custom(pairs)
            }
        };
        Ok(ResolvedFamily { d: self.d, inner })
    }
}

#[derive(Debug, Clone)]
enum Inner {
    Interpolation {
        rho0: DensityMatrix,
        sigma: DensityMatrix,
        eps: f64,
    },
    Constant(DensityMatrix, DensityMatrix),
    Custom(Vec<(DensityMatrix, DensityMatrix)>),
}

#[derive(Debug, Clone)]
pub struct ResolvedFamily {
    d: usize,
    inner: Inner,
}

impl ResolvedFamily {
    pub fn dim(&self) -> usize {
        self.d
    }

    /// Largest supported `n`, if bounded.
    pub fn max_index(&self) -> Option<usize> {
        match &self.inner {
            Inner::Custom(p) => Some(p.len()),
            _ => None,
        }
    }

    pub fn pair(&self, n: usize) -> Result<(DensityMatrix, DensityMatrix)> {
        if n == 0 {
            return Err(Error::input("family index starts at n = 1"));
        }
        match &self.inner {
            Inner::Interpolation { rho0, sigma, eps } => {
                // rho0 + t (sigma - rho0) keeps rho1 - rho0 exactly zero
                // when sigma equals rho0.
                let t = eps.powi(n as i32);
                let rho1 = rho0.matrix() + (sigma.matrix() - rho0.matrix()) * matops::c(t);
                Ok((rho0.clone(), DensityMatrix::new(rho1)?))
            }
            Inner::Constant(a, b) => Ok((a.clone(), b.clone())),
            Inner::Custom(pairs) => pairs
                .get(n - 1)
                .cloned()
                .ok_or_else(|| Error::input(format!("custom family has no pair for n = {n}"))),
        }
    }
}

/// Parsed from `dtr`, `dk:K`, `sd:A`, `sdk:B:K`, `pegap`, `infid`, `schatten:Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureId {
    Dtr,
    Dk(usize),
    Sd(Family),
    Sdk(Family, usize),
    /// `1/2 - PE`
    PeGap,
    /// `1 - F_0`
    Infidelity,
    /// `||rho0 - rho1||_q`
    Schatten(f64),
}

impl FromStr for MeasureId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::input(format!("unknown measure `{s}`"));
        let int = |t: &str| t.parse::<usize>().map_err(|_| bad());
        let parts: Vec<&str> = s.trim().split(':').collect();
        Ok(match parts.as_slice() {
            ["dtr"] => MeasureId::Dtr,
            ["dk", k] => MeasureId::Dk(int(k)?),
            ["sd", f] => MeasureId::Sd(f.parse().map_err(|_| bad())?),
            ["sdk", f, k] => MeasureId::Sdk(f.parse().map_err(|_| bad())?, int(k)?),
            ["pegap"] => MeasureId::PeGap,
            ["infid"] => MeasureId::Infidelity,
            ["schatten", q] => {
                let q = if *q == "inf" {
                    f64::INFINITY
                } else {
                    q.parse::<f64>().map_err(|_| bad())?
                };
                if !(q >= 1.0) {
                    return Err(bad());
                }
                MeasureId::Schatten(q)
            }
            _ => return Err(bad()),
        })
    }
}

impl fmt::Display for MeasureId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MeasureId::Dtr => write!(f, "dtr"),
            MeasureId::Dk(k) => write!(f, "dk:{k}"),
            MeasureId::Sd(fam) => write!(f, "sd:{fam}"),
            MeasureId::Sdk(fam, k) => write!(f, "sdk:{fam}:{k}"),
            MeasureId::PeGap => write!(f, "pegap"),
            MeasureId::Infidelity => write!(f, "infid"),
            MeasureId::Schatten(q) if q.is_infinite() => write!(f, "schatten:inf"),
            MeasureId::Schatten(q) => write!(f, "schatten:{q}"),
        }
    }
}

pub fn parse_measures(list: &str) -> Result<Vec<MeasureId>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Settings for the estimator-backed measures.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSettings {
    pub budget: usize,
    pub seed: Seed,
}

impl Default for EstimatorSettings {
    fn default() -> Self {
        Self {
            budget: 8,
            seed: Seed(7),
        }
    }
}

fn evaluate(measure: MeasureId, r0: &DensityMatrix, r1: &DensityMatrix, est: EstimatorSettings, n: usize) -> Result<f64> {
    let seed = est.seed.derive(n as u64);
    Ok(match measure {
        MeasureId::Dtr => quantum::trace_distance(r0, r1)?,
        MeasureId::Dk(k) => quantum::partitioned_trace_distance(r0, r1, k)?,
        MeasureId::Sd(fam) => quantum::estimate_sd(r0, r1, fam, est.budget, seed)?.value,
        MeasureId::Sdk(fam, k) => quantum::estimate_sd_k(r0, r1, k, fam, est.budget, seed)?.value,
        MeasureId::PeGap => 0.5 - quantum::pe_quantum(r0, r1)?,
        MeasureId::Infidelity => (1.0 - quantum::fidelity(r0, r1)?).max(0.0),
        MeasureId::Schatten(q) => matops::schatten_norm(&(r0.matrix() - r1.matrix()), q)?,
    })
}

/// `m_n` for `n = 1, ..., n_max`. Estimator measures reseed per `n`.
pub fn measure_sequence(
    family: &ResolvedFamily,
    measure: MeasureId,
    n_max: usize,
    est: EstimatorSettings,
) -> Result<Vec<f64>> {
    if let Some(limit) = family.max_index() {
        if n_max > limit {
            return Err(Error::input(format!("n_max = {n_max} exceeds the {limit} pairs of the family")));
        }
    }
    (1..=n_max)
        .into_par_iter()
        .map(|n| {
            let (r0, r1) = family.pair(n)?;
            evaluate(measure, &r0, &r1, est, n)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayRate {
    /// `max_{n >= n0} m_n^(1/n)`
    pub rate: f64,
    /// `rate < 1 - 1e-9` and no shape warning, or a degenerate sequence.
    pub indistinguishable: bool,
    /// Most consecutive tail ratios are `>= 1 - 1e-9`: the sequence is not
    /// decaying even if the finite-horizon rate is below one.
    pub shape_warning: bool,
    /// Every tail value is zero.
    pub degenerate: bool,
    pub n0: usize,
    pub n_max: usize,
    /// `exp(slope)` of a least-squares fit of `ln m_n` on the positive tail.
    pub log_fit: Option<f64>,
}

/// Rate of `values[i] = m_(i+1)` over the tail `n >= n0`.
pub fn decay_rate(values: &[f64], n0: usize) -> Result<DecayRate> {
    let n0 = n0.max(1);
    if n0 > values.len() {
        return Err(Error::input(format!(
            "empty tail: n0 = {n0} but only {} values",
            values.len()
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= -ENVELOPE_TOL)) {
        return Err(Error::input(format!("measure values must be nonnegative, got {v}")));
    }
    let tail: Vec<(usize, f64)> = (n0..=values.len()).map(|n| (n, values[n - 1].max(0.0))).collect();
    let rate = tail
        .iter()
        .map(|&(n, m)| if m > 0.0 { m.powf(1.0 / n as f64) } else { 0.0 })
        .fold(0.0, f64::max);
    let degenerate = tail.iter().all(|&(_, m)| m == 0.0);

    let ratios: Vec<f64> = tail
        .windows(2)
        .filter(|w| w[0].1 > 0.0)
        .map(|w| w[1].1 / w[0].1)
        .collect();
    let flat = ratios.iter().filter(|&&r| r >= 1.0 - RATE_TOL).count();
    let shape_warning = !ratios.is_empty() && 2 * flat > ratios.len();

    let positive: Vec<(f64, f64)> = tail
        .iter()
        .filter(|(_, m)| *m > 0.0)
        .map(|&(n, m)| (n as f64, m.ln()))
        .collect();
    let log_fit = if positive.len() >= 2 {
        let len = positive.len() as f64;
        let mx = positive.iter().map(|p| p.0).sum::<f64>() / len;
        let my = positive.iter().map(|p| p.1).sum::<f64>() / len;
        let sxy: f64 = positive.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = positive.iter().map(|p| (p.0 - mx).powi(2)).sum();
        Some((sxy / sxx).exp())
    } else {
        None
    };

    Ok(DecayRate {
        rate,
        indistinguishable: degenerate || (rate < 1.0 - RATE_TOL && !shape_warning),
        shape_warning,
        degenerate,
        n0,
        n_max: values.len(),
        log_fit,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Absorbed {
    /// `C^(1/n) eps`
    pub epsilon: f64,
    /// Smallest `n >= 1` with `C^(1/n) eps < 1`.
    pub n: usize,
}

/// Folds a constant into the base: `C eps^m <= (C^(1/n) eps)^m` for `m >= n`.
///
/// Constants below one are raised to one first; `(C eps)^m` would not
/// dominate `C eps^m` past `m = 1`.
pub fn absorb_constant(c: f64, eps: f64) -> Result<Absorbed> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::input(format!("epsilon = {eps} is outside (0, 1)")));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::input(format!("constant must be positive and finite, got {c}")));
    }
    let c = c.max(1.0);
    let base = |n: usize| c.powf(1.0 / n as f64) * eps;
    let mut n = if c <= 1.0 {
        1
    } else {
        (c.ln() / -eps.ln()).floor() as usize + 1
    };
    // The closed form can be off by one when the log ratio is an integer.
    while base(n) >= 1.0 {
        n += 1;
    }
    while n > 1 && base(n - 1) < 1.0 {
        n -= 1;
    }
    Ok(Absorbed { epsilon: base(n), n })
}

/// `C = d / k0`
pub fn absorb_dim_ratio(d: usize, k0: usize, eps: f64) -> Result<Absorbed> {
    if k0 == 0 || k0 > d {
        return Err(Error::input(format!("k0 = {k0} outside 1..={d}")));
    }
    absorb_constant(d as f64 / k0 as f64, eps)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureDecay {
    pub measure: String,
    pub values: Vec<f64>,
    #[serde(flatten)]
    pub rate: DecayRate,
}

/// Numerical check of one constant-absorption step: `target(n) <= factor *
/// eps'^(n * power)` for every computed `n >= max(n0, n')`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub name: String,
    pub source: String,
    pub target: String,
    pub source_rate: f64,
    pub constant: f64,
    pub absorbed: Option<Absorbed>,
    pub from_n: usize,
    /// `min_n (envelope - target)`; `None` when the source rate is not below one.
    pub worst_slack: Option<f64>,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub version: String,
    pub family: FamilySpec,
    pub estimator: EstimatorSettings,
    pub n0: usize,
    pub n_max: usize,
    pub measures: Vec<MeasureDecay>,
    /// All sequences vanish identically.
    pub degenerate: bool,
    /// Either every measure is indistinguishable or none is.
    pub equivalence_holds: bool,
    pub chains: Vec<ChainCheck>,
    pub passed: bool,
}

impl DecayReport {
    pub fn measure(&self, name: &str) -> Option<&MeasureDecay> {
        self.measures.iter().find(|m| m.measure == name)
    }
}

struct Envelope<'a> {
    name: &'a str,
    source: &'a MeasureDecay,
    target_name: String,
    target: &'a [f64],
    constant: f64,
    /// Envelope is `factor * (eps'^power)^n`.
    factor: f64,
    power: f64,
}

fn envelope_check(e: Envelope<'_>, n0: usize) -> Result<ChainCheck> {
    let src = e.source.rate.rate;
    let mut out = ChainCheck {
        name: e.name.to_string(),
        source: e.source.measure.clone(),
        target: e.target_name,
        source_rate: src,
        constant: e.constant,
        absorbed: None,
        from_n: n0,
        worst_slack: None,
        holds: true,
    };
    if e.source.rate.degenerate {
        let worst = e.target.iter().skip(n0 - 1).fold(f64::INFINITY, |w, &t| w.min(-t));
        out.worst_slack = Some(worst);
        out.holds = worst >= -ENVELOPE_TOL;
        return Ok(out);
    }
    if !(src < 1.0) {
        // Nothing to propagate.
        return Ok(out);
    }
    let absorbed = absorb_constant(e.constant, src)?;
    let from = n0.max(absorbed.n);
    out.absorbed = Some(absorbed);
    out.from_n = from;
    let mut worst = f64::INFINITY;
    for n in from..=e.target.len() {
        let env = e.factor * (absorbed.epsilon.powf(e.power)).powi(n as i32);
        worst = worst.min(env - e.target[n - 1]);
    }
    if worst.is_finite() {
        out.worst_slack = Some(worst);
        out.holds = worst >= -ENVELOPE_TOL;
    }
    Ok(out)
}

/// Computes every requested measure on `n = 1..=n_max`, their rates over
/// `n >= n0`, and the absorption chains:
///
/// - `dk:K` rate and `C = d/K` bound the trace distance;
/// - an `SD^B` rate (`sd:B` or `sdk:B:K`) with `C = d/K` bounds `J(PE)`,
///   hence `1/2 - PE <= sqrt(ln 2 / 2) (sqrt eps')^n`;
/// - each `schatten:Q` sequence is bounded from the trace-distance rate
///   with `C = |||Z|||`, and conversely bounds the trace distance with
///   `C = d / (2 |||Z|||)`.
pub fn check_equivalence(
    spec: &FamilySpec,
    measures: &[MeasureId],
    n_max: usize,
    n0: usize,
    est: EstimatorSettings,
) -> Result<DecayReport> {
    let family = spec.resolve()?;
    let d = family.dim();
    if n_max == 0 || n0 == 0 || n0 > n_max {
        return Err(Error::input(format!("need 1 <= n0 <= n_max, got n0 = {n0}, n_max = {n_max}")));
    }
    for m in measures {
        let k = match m {
            MeasureId::Dk(k) | MeasureId::Sdk(_, k) => *k,
            _ => 1,
        };
        let limit = if matches!(m, MeasureId::Sdk(Family::A, _)) { d * d } else { d };
        if k == 0 || k > limit {
            return Err(Error::input(format!("{m}: k must lie in 1..={limit}")));
        }
    }

    let decay = |m: MeasureId| -> Result<MeasureDecay> {
        let values = measure_sequence(&family, m, n_max, est)?;
        let rate = decay_rate(&values, n0)?;
        Ok(MeasureDecay {
            measure: m.to_string(),
            values,
            rate,
        })
    };
    let table = measures.iter().map(|&m| decay(m)).collect::<Result<Vec<_>>>()?;
    let dtr = match table.iter().find(|m| m.measure == "dtr") {
        Some(m) => m.clone(),
        None => decay(MeasureId::Dtr)?,
    };
    let pe_gap = measure_sequence(&family, MeasureId::PeGap, n_max, est)?;

    let mut chains = Vec::new();
    for (m, row) in measures.iter().zip(&table) {
        match *m {
            MeasureId::Dk(k) if k < d => chains.push(envelope_check(
                Envelope {
                    name: "dk_to_dtr",
                    source: row,
                    target_name: "dtr".into(),
                    target: &dtr.values,
                    constant: d as f64 / k as f64,
                    factor: 1.0,
                    power: 1.0,
                },
                n0,
            )?),
            MeasureId::Sd(Family::B) | MeasureId::Sdk(Family::B, _) => {
                let k = if let MeasureId::Sdk(_, k) = m { *k } else { d };
                chains.push(envelope_check(
                    Envelope {
                        name: "sdb_to_pegap",
                        source: row,
                        target_name: "pegap".into(),
                        target: &pe_gap,
                        constant: d as f64 / k as f64,
                        factor: (std::f64::consts::LN_2 / 2.0).sqrt(),
                        power: 0.5,
                    },
                    n0,
                )?);
            }
            MeasureId::Schatten(q) => {
                let z = matops::z_norm_constant(NormId::Schatten { q }, d)?;
                chains.push(envelope_check(
                    Envelope {
                        name: "dtr_to_schatten",
                        source: &dtr,
                        target_name: row.measure.clone(),
                        target: &row.values,
                        constant: z,
                        factor: 1.0,
                        power: 1.0,
                    },
                    n0,
                )?);
                chains.push(envelope_check(
                    Envelope {
                        name: "schatten_to_dtr",
                        source: row,
                        target_name: "dtr".into(),
                        target: &dtr.values,
                        constant: d as f64 / (2.0 * z),
                        factor: 1.0,
                        power: 1.0,
                    },
                    n0,
                )?);
            }
            _ => {}
        }
    }

    let degenerate = table.iter().all(|m| m.rate.degenerate) && dtr.rate.degenerate;
    let any = table.iter().any(|m| m.rate.indistinguishable);
    let all = table.iter().all(|m| m.rate.indistinguishable);
    let equivalence_holds = all || !any;
    let passed = equivalence_holds && chains.iter().all(|c| c.holds);
    Ok(DecayReport {
        version: VERSION.to_string(),
        family: FamilySpec {
            n_max: Some(n_max),
            ..spec.clone()
        },
        estimator: est,
        n0,
        n_max,
        measures: table,
        degenerate,
        equivalence_holds,
        chains,
        passed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::random_mixed;

    fn qubit_family(eps: f64) -> FamilySpec {
        FamilySpec::interpolation(
            &DensityMatrix::basis(2, 0).unwrap(),
            &DensityMatrix::basis(2, 1).unwrap(),
            eps,
            40,
        )
    }

    #[test]
    fn geometric_rates() {
        let v: Vec<f64> = (1..=30).map(|n| 0.7f64.powi(n)).collect();
        let r = decay_rate(&v, 1).unwrap();
        assert!((r.rate - 0.7).abs() < 1e-12);
        assert!(r.indistinguishable && !r.shape_warning);
        assert!((r.log_fit.unwrap() - 0.7).abs() < 1e-12);

        let v: Vec<f64> = (1..=40).map(|n| 2.0 * 0.7f64.powi(n)).collect();
        let r = decay_rate(&v, 10).unwrap();
        assert!((r.rate - 2f64.powf(0.1) * 0.7).abs() < 1e-12);
        // 2^(1/10) 0.7 = 0.7503...
        assert!(r.rate > 0.7 && r.rate < 0.751 && r.indistinguishable);
    }

    #[test]
    fn constant_sequence_warns() {
        let v = vec![0.3; 40];
        let r = decay_rate(&v, 10).unwrap();
        // Finite-horizon maximum sits at the last index.
        assert!((r.rate - 0.3f64.powf(1.0 / 40.0)).abs() < 1e-12);
        assert!(r.shape_warning && !r.indistinguishable);
    }

    #[test]
    fn decay_rate_edges() {
        let r = decay_rate(&[0.0; 5], 2).unwrap();
        assert!(r.degenerate && r.indistinguishable && r.rate == 0.0);
        assert!(decay_rate(&[0.1, 0.2], 3).is_err());
        assert!(decay_rate(&[0.1, -0.2], 1).is_err());
    }

    #[test]
    fn absorb_examples() {
        let a = absorb_constant(1.0, 0.6).unwrap();
        assert_eq!(a.n, 1);
        assert!((a.epsilon - 0.6).abs() < 1e-15);
        let a = absorb_dim_ratio(4, 1, 0.5).unwrap();
        assert_eq!(a.n, 3);
        assert!((a.epsilon - 4f64.powf(1.0 / 3.0) * 0.5).abs() < 1e-15);
        let a = absorb_constant(2.0, 0.9).unwrap();
        assert_eq!(a.n, 7);
        assert!(a.epsilon < 1.0);
        let a = absorb_constant(0.5, 0.8).unwrap();
        assert_eq!((a.n, a.epsilon), (1, 0.8));
        assert!(absorb_constant(2.0, 1.0).is_err());
        assert!(absorb_constant(0.0, 0.5).is_err());
    }

    #[test]
    fn absorb_matches_closed_form_and_is_minimal() {
        for &c in &[1.5, 2.0, 3.0, 4.0, 10.0, 16.0] {
            for &eps in &[0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
                let a = absorb_constant(c, eps).unwrap();
                let formula = (c.ln() / -eps.ln()).floor() as usize + 1;
                assert!(a.epsilon < 1.0);
                assert!(a.n == 1 || c.powf(1.0 / (a.n - 1) as f64) * eps >= 1.0);
                // Exact-integer log ratios are the only place rounding bites.
                assert!(a.n == formula || (c.ln() / -eps.ln()).fract().abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interpolation_trace_distance_is_geometric() {
        let r0 = random_mixed(3, 2, Seed(1)).unwrap();
        let sigma = random_mixed(3, 3, Seed(2)).unwrap();
        let spec = FamilySpec::interpolation(&r0, &sigma, 0.6, 20);
        let fam = spec.resolve().unwrap();
        let base = quantum::trace_distance(&r0, &sigma).unwrap();
        let v = measure_sequence(&fam, MeasureId::Dtr, 20, EstimatorSettings::default()).unwrap();
        for (i, m) in v.iter().enumerate() {
            let expect = 0.6f64.powi(i as i32 + 1) * base;
            assert!((m - expect).abs() <= 1e-14, "{m} vs {expect}");
        }
    }

    #[test]
    fn identical_and_custom_families() {
        let r = random_mixed(2, 2, Seed(4)).unwrap();
        let spec = FamilySpec::interpolation(&r, &r, 0.5, 10);
        let rep = check_equivalence(&spec, &parse_measures("dtr,dk:1,infid").unwrap(), 10, 3, EstimatorSettings::default()).unwrap();
        assert!(rep.degenerate && rep.passed);
        assert!(rep.measures.iter().all(|m| m.values.iter().all(|&v| v.abs() < 1e-12)));

        let s = random_mixed(2, 1, Seed(5)).unwrap();
        let spec = FamilySpec::custom(&vec![(r.clone(), s.clone()); 6]);
        let fam = spec.resolve().unwrap();
        let v = measure_sequence(&fam, MeasureId::Dk(1), 6, EstimatorSettings::default()).unwrap();
        assert!(v.windows(2).all(|w| w[0] == w[1]));
        assert!(measure_sequence(&fam, MeasureId::Dk(1), 7, EstimatorSettings::default()).is_err());
    }

    #[test]
    fn constant_gap_is_never_indistinguishable() {
        let spec = FamilySpec::depolarizing_gap(
            &DensityMatrix::basis(2, 0).unwrap(),
            &DensityMatrix::basis(2, 1).unwrap(),
            0.3,
            20,
        );
        let rep = check_equivalence(&spec, &parse_measures("dtr,dk:1,sd:B,pegap,infid").unwrap(), 20, 5, EstimatorSettings { budget: 4, seed: Seed(1) }).unwrap();
        assert!(rep.measures.iter().all(|m| !m.rate.indistinguishable));
        assert!(rep.equivalence_holds && rep.passed);
    }

    #[test]
    fn interpolation_equivalence() {
        let rep = check_equivalence(
            &qubit_family(0.7),
            &parse_measures("dtr,dk:1,sdk:A:1,sdk:B:1,sd:A,sd:B,infid,pegap,schatten:2,schatten:inf").unwrap(),
            40,
            10,
            EstimatorSettings { budget: 4, seed: Seed(3) },
        )
        .unwrap();
        assert!(rep.passed, "{:#?}", rep.chains);
        let dtr = rep.measure("dtr").unwrap();
        assert!((dtr.rate.rate - 0.7).abs() <= 0.02);
        for m in &rep.measures {
            assert!(m.rate.indistinguishable, "{}", m.measure);
        }
    }

    #[test]
    fn measure_ids_round_trip() {
        for s in ["dtr", "dk:2", "sd:A", "sdk:B:3", "pegap", "infid", "schatten:2", "schatten:inf"] {
            assert_eq!(s.parse::<MeasureId>().unwrap().to_string(), s);
        }
        for bad in ["", "dk", "sd:C", "schatten:0.5", "fk:1"] {
            assert!(bad.parse::<MeasureId>().is_err(), "{bad}");
        }
    }
}
