//! Multiplicity corrections for families of local tests.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::permutation::{local_point_test, PermutationPlan, TestOutcome};
use crate::regressors::EstimatorConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Correction {
    /// Reject where the raw p-value is below alpha.
    None,
    Bonferroni,
    /// Step-up familywise error control.
    Hochberg,
    /// Step-up false discovery rate control.
    BenjaminiHochberg,
}

impl fmt::Display for Correction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Correction::None => "none",
            Correction::Bonferroni => "bonferroni",
            Correction::Hochberg => "hochberg",
            Correction::BenjaminiHochberg => "bh",
        })
    }
}

impl FromStr for Correction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_', ' '], "").as_str() {
            "none" => Ok(Correction::None),
            "bonferroni" => Ok(Correction::Bonferroni),
            "hochberg" => Ok(Correction::Hochberg),
            "bh" | "fdr" | "benjaminihochberg" => Ok(Correction::BenjaminiHochberg),
            _ => Err(Error::InvalidParameter(format!("unknown correction '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdjustedDecisions {
    pub raw_p: Vec<f64>,
    pub method: Correction,
    pub alpha: f64,
    pub reject: Vec<bool>,
}

fn check(p: &[f64], alpha: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::InvalidParameter("no p-values to adjust".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    if let Some(i) = p.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::InvalidParameter(format!("p-value {} at index {i} is outside [0, 1]", p[i])));
    }
    Ok(())
}

/// Indices sorting `p` ascending, ties by original index.
fn ascending(p: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..p.len()).collect();
    order.sort_by(|&a, &b| p[a].total_cmp(&p[b]).then(a.cmp(&b)));
    order
}

/// Reject the `j*` smallest p-values, `j*` the largest 1-based rank with
/// `p_(j) <= threshold(j)`.
fn step_up(p: &[f64], alpha: f64, method: Correction, threshold: impl Fn(usize) -> f64) -> Result<AdjustedDecisions> {
    check(p, alpha)?;
    let order = ascending(p);
    let cutoff = (1..=p.len()).rev().find(|&j| p[order[j - 1]] <= threshold(j)).unwrap_or(0);
    let mut reject = vec![false; p.len()];
    for &i in &order[..cutoff] {
        reject[i] = true;
    }
    Ok(AdjustedDecisions { raw_p: p.to_vec(), method, alpha, reject })
}

pub fn hochberg(p: &[f64], alpha: f64) -> Result<AdjustedDecisions> {
    let k = p.len();
    step_up(p, alpha, Correction::Hochberg, |j| alpha / (k - j + 1) as f64)
}

pub fn benjamini_hochberg(p: &[f64], alpha: f64) -> Result<AdjustedDecisions> {
    let k = p.len() as f64;
    step_up(p, alpha, Correction::BenjaminiHochberg, |j| j as f64 * alpha / k)
}

pub fn bonferroni(p: &[f64], alpha: f64) -> Result<AdjustedDecisions> {
    check(p, alpha)?;
    let cut = alpha / p.len() as f64;
    Ok(AdjustedDecisions { raw_p: p.to_vec(), method: Correction::Bonferroni, alpha, reject: p.iter().map(|&v| v <= cut).collect() })
}

pub fn uncorrected(p: &[f64], alpha: f64) -> Result<AdjustedDecisions> {
    check(p, alpha)?;
    Ok(AdjustedDecisions { raw_p: p.to_vec(), method: Correction::None, alpha, reject: p.iter().map(|&v| v < alpha).collect() })
}

pub fn adjust(p: &[f64], alpha: f64, method: Correction) -> Result<AdjustedDecisions> {
    match method {
        Correction::None => uncorrected(p, alpha),
        Correction::Bonferroni => bonferroni(p, alpha),
        Correction::Hochberg => hochberg(p, alpha),
        Correction::BenjaminiHochberg => benjamini_hochberg(p, alpha),
    }
}

/// `ceil(n^(2 / (i + 2)))`, clipped to `[1, n - 1]`.
pub fn adaptive_k(n: usize, i: usize) -> usize {
    let v = (n as f64).powf(2.0 / (i as f64 + 2.0));
    // Shave a relative epsilon so exact powers are not rounded up.
    let k = (v * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    k.clamp(1, n.saturating_sub(1).max(1))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveOutcome {
    /// Neighbour count used for candidate dimension `i = 1..=D`.
    pub k: Vec<usize>,
    /// Local kNN test for each candidate dimension, each at level `alpha / D`.
    pub tests: Vec<TestOutcome>,
    pub alpha: f64,
    /// True if any candidate test rejects.
    pub reject: bool,
}

/// Local kNN test at `x` aggregated over candidate intrinsic dimensions
/// `1..=D` with a Bonferroni split of `alpha`. All candidates share the
/// permutations of `plan`.
pub fn dimension_adaptive_knn(data: &LabeledDataset, x: &[f64], alpha: f64, plan: &PermutationPlan) -> Result<AdaptiveOutcome> {
    let dims = data.dim();
    if dims == 0 {
        return Err(Error::InvalidParameter("data has no features".into()));
    }
    let level = alpha / dims as f64;
    let ks: Vec<usize> = (1..=dims).map(|i| adaptive_k(data.n(), i)).collect();
    let tests = ks
        .iter()
        .map(|&k| local_point_test(data, x, &EstimatorConfig::Knn { k }, plan, level))
        .collect::<Result<Vec<_>>>()?;
    let reject = tests.iter().any(|t| t.reject);
    Ok(AdaptiveOutcome { k: ks, tests, alpha, reject })
}
