//! Distribution-level measures.
//!
//! Logarithms are base two. The partitioned measures select `k` outcomes by
//! sorting per-outcome terms instead of enumerating subsets; every objective
//! is a sum of nonnegative per-outcome terms, so the two agree.

use serde::{Deserialize, Serialize};
use std::f64::consts::LN_2;

use crate::error::{Error, Result};

/// Max `|sum - 1|` accepted for a distribution.
pub const NORM_TOL: f64 = 1e-8;
/// Entries in `[-CLAMP_TOL, 0)` are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-12;
/// Slack used by the boolean majorization and partial-sum predicates.
pub const PREFIX_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::input("distribution needs at least one outcome"));
        }
        let mut probs = probs;
        for p in probs.iter_mut() {
            if !p.is_finite() || *p < -CLAMP_TOL {
                return Err(Error::input(format!("invalid probability {p}")));
            }
            if *p < 0.0 {
                *p = 0.0;
            }
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization { sum });
        }
        Ok(Self { probs })
    }

    pub fn uniform(n: usize) -> Result<Self> {
        Self::new(vec![1.0 / n as f64; n])
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Joint distribution `p(b, x)`, row `b`, column `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    table: Vec<Vec<f64>>,
}

impl JointDistribution {
    pub fn new(table: Vec<Vec<f64>>) -> Result<Self> {
        let cols = table.first().map(Vec::len).unwrap_or(0);
        if cols == 0 || table.iter().any(|r| r.len() != cols) {
            return Err(Error::input("joint table must be rectangular and nonempty"));
        }
        let mut table = table;
        for p in table.iter_mut().flatten() {
            if !p.is_finite() || *p < -CLAMP_TOL {
                return Err(Error::input(format!("invalid probability {p}")));
            }
            *p = p.max(0.0);
        }
        let sum: f64 = table.iter().flatten().sum();
        if (sum - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization { sum });
        }
        Ok(Self { table })
    }

    /// Equiprobable binary input: `p(b, x) = p_b(x) / 2`.
    pub fn binary_input(p0: &Distribution, p1: &Distribution) -> Result<Self> {
        same_len(p0, p1)?;
        Self::new(vec![
            p0.probs().iter().map(|p| p / 2.0).collect(),
            p1.probs().iter().map(|p| p / 2.0).collect(),
        ])
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    pub fn marginal_b(&self) -> Vec<f64> {
        self.table.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        let cols = self.table[0].len();
        (0..cols)
            .map(|x| self.table.iter().map(|r| r[x]).sum())
            .collect()
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        p * p.log2()
    } else {
        0.0
    }
}

pub fn shannon_entropy(probs: &[f64]) -> f64 {
    -probs.iter().map(|&p| plogp(p)).sum::<f64>()
}

fn check_unit(p: f64) -> Result<f64> {
    if !p.is_finite() || !(-CLAMP_TOL..=1.0 + CLAMP_TOL).contains(&p) {
        return Err(Error::input(format!("argument {p} outside [0, 1]")));
    }
    Ok(p.clamp(0.0, 1.0))
}

/// `h(p) = -p log p - (1 - p) log(1 - p)`
pub fn binary_entropy(p: f64) -> Result<f64> {
    let p = check_unit(p)?;
    Ok(-plogp(p) - plogp(1.0 - p))
}

/// `J(p) = 1 - h(p)`.
pub fn j_func(p: f64) -> Result<f64> {
    Ok(j_unchecked(check_unit(p)?))
}

// Evaluated as [p ln(2p) + (1-p) ln(2(1-p))] / ln 2 through ln_1p so that
// values near p = 1/2 keep their relative precision.
fn j_unchecked(p: f64) -> f64 {
    let q = 1.0 - p;
    let a = if p > 0.0 { p * (2.0 * p - 1.0).ln_1p() } else { 0.0 };
    let b = if q > 0.0 { q * (2.0 * q - 1.0).ln_1p() } else { 0.0 };
    ((a + b) / LN_2).max(0.0)
}

/// `H(B|X) = -sum p(b,x) log p_x(b)`
pub fn conditional_entropy(joint: &JointDistribution) -> f64 {
    let px = joint.marginal_x();
    let mut h = 0.0;
    for row in joint.table() {
        for (x, &pbx) in row.iter().enumerate() {
            if pbx > 0.0 {
                h -= pbx * (pbx / px[x]).log2();
            }
        }
    }
    h
}

/// `I(B;X) = H(B) + H(X) - H(B,X)`, clamped at zero.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let hb = shannon_entropy(&joint.marginal_b());
    let hx = shannon_entropy(&joint.marginal_x());
    let hbx: f64 = -joint.table().iter().flatten().map(|&p| plogp(p)).sum::<f64>();
    (hb + hx - hbx).max(0.0)
}

fn same_len(p0: &Distribution, p1: &Distribution) -> Result<()> {
    if p0.len() != p1.len() {
        return Err(Error::DimensionMismatch {
            expected: p0.len(),
            found: p1.len(),
        });
    }
    Ok(())
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k > n {
        return Err(Error::input(format!("k = {k} exceeds outcome count {n}")));
    }
    Ok(())
}

/// Sum of the `k` largest entries (stable tie-break by index).
fn top_k_sum(mut terms: Vec<f64>, k: usize) -> f64 {
    terms.sort_by(|a, b| b.total_cmp(a));
    terms[..k].iter().sum()
}

/// Per-outcome contributions `p(x) J(p_x(0))`, with `p(x) = (p0 + p1) / 2`.
pub fn sd_terms_raw(p0: &[f64], p1: &[f64]) -> Vec<f64> {
    p0.iter()
        .zip(p1)
        .map(|(&a, &b)| {
            let s = a + b;
            if s > 0.0 {
                0.5 * s * j_unchecked((a / s).clamp(0.0, 1.0))
            } else {
                0.0
            }
        })
        .collect()
}

pub fn sd_terms(p0: &Distribution, p1: &Distribution) -> Result<Vec<f64>> {
    same_len(p0, p1)?;
    Ok(sd_terms_raw(p0.probs(), p1.probs()))
}

/// Shannon distinguishability: mutual information of an equiprobable binary
/// input with the outcome.
pub fn sd_classical(p0: &Distribution, p1: &Distribution) -> Result<f64> {
    Ok(sd_terms(p0, p1)?.iter().sum())
}

/// Sum of the `k` largest Shannon-distinguishability terms.
pub fn sd_k_classical(p0: &Distribution, p1: &Distribution, k: usize) -> Result<f64> {
    let terms = sd_terms(p0, p1)?;
    check_k(k, terms.len())?;
    Ok(top_k_sum(terms, k))
}

pub(crate) fn sd_k_raw(p0: &[f64], p1: &[f64], k: usize) -> f64 {
    let terms = sd_terms_raw(p0, p1);
    let k = k.min(terms.len());
    top_k_sum(terms, k)
}

/// `sum_x |p0(x) - p1(x)| / 2`
pub fn total_variation(p0: &Distribution, p1: &Distribution) -> Result<f64> {
    same_len(p0, p1)?;
    Ok(0.5 * p0.probs().iter().zip(p1.probs()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Sum of the `k` largest `|p0(x) - p1(x)| / 2`.
pub fn d_k_classical(p0: &Distribution, p1: &Distribution, k: usize) -> Result<f64> {
    same_len(p0, p1)?;
    check_k(k, p0.len())?;
    let terms = p0
        .probs()
        .iter()
        .zip(p1.probs())
        .map(|(a, b)| 0.5 * (a - b).abs())
        .collect();
    Ok(top_k_sum(terms, k))
}

/// Sum of the `#X - k` smallest `sqrt(p0(x) p1(x))`.
pub fn f_k_classical(p0: &Distribution, p1: &Distribution, k: usize) -> Result<f64> {
    same_len(p0, p1)?;
    check_k(k, p0.len())?;
    let mut terms: Vec<f64> = p0
        .probs()
        .iter()
        .zip(p1.probs())
        .map(|(a, b)| (a * b).sqrt())
        .collect();
    terms.sort_by(|a, b| a.total_cmp(b));
    Ok(terms[..p0.len() - k].iter().sum())
}

/// `sum_x min(p0(x), p1(x)) / 2`
pub fn pe_classical(p0: &Distribution, p1: &Distribution) -> Result<f64> {
    same_len(p0, p1)?;
    Ok(0.5 * p0.probs().iter().zip(p1.probs()).map(|(a, b)| a.min(*b)).sum::<f64>())
}

fn padded_descending(v: &[f64], len: usize) -> Vec<f64> {
    let mut out = v.to_vec();
    out.resize(len, 0.0);
    out.sort_by(|a, b| b.total_cmp(a));
    out
}

/// `min_k (R_k - Q_k)` over descending prefix sums, shorter vector padded
/// with zeros. Nonnegative iff `q` is weakly submajorized by `r`.
pub fn submajorization_slack(q: &[f64], r: &[f64]) -> f64 {
    let len = q.len().max(r.len());
    let q = padded_descending(q, len);
    let r = padded_descending(r, len);
    let (mut sq, mut sr) = (0.0, 0.0);
    let mut slack = f64::INFINITY;
    for i in 0..len {
        sq += q[i];
        sr += r[i];
        slack = slack.min(sr - sq);
    }
    if len == 0 {
        0.0
    } else {
        slack
    }
}

/// Weak submajorization `q ≺_w r` up to [`PREFIX_TOL`].
pub fn weak_submajorize(q: &[f64], r: &[f64]) -> bool {
    submajorization_slack(q, r) >= -PREFIX_TOL
}

/// `m Q_k - k Q_m` for descending partial sums `Q` of `values`.
pub fn partial_sum_slack(values: &[f64], k: usize, m: usize) -> Result<f64> {
    if k > m || m > values.len() {
        return Err(Error::input(format!(
            "need 0 <= k <= m <= {}, got k = {k}, m = {m}",
            values.len()
        )));
    }
    let sorted = padded_descending(values, values.len());
    let qk: f64 = sorted[..k].iter().sum();
    let qm: f64 = sorted[..m].iter().sum();
    Ok(m as f64 * qk - k as f64 * qm)
}

/// `m Q_k >= k Q_m` up to [`PREFIX_TOL`].
pub fn partial_sum_bound_check(values: &[f64], k: usize, m: usize) -> Result<bool> {
    Ok(partial_sum_slack(values, k, m)? >= -PREFIX_TOL)
}
