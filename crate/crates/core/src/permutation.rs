//! Permutation calibration of global and local statistics.
//!
//! Replicate `b` relabels the rows with a permutation drawn from its own
//! random stream (a child seed of the plan seed), so outcomes do not depend
//! on how replicates are spread across workers.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{count_ones, FeatureMatrix, LabeledDataset};
use crate::error::{Error, Result};
use crate::multitest::{adjust, Correction};
use crate::regressors::EstimatorConfig;
use crate::teststats::{eval_joint, split_indices, LocalStat, Predictor, Queries, StatKind, StatisticSpec};
use crate::{par, rng};

/// Largest sample size accepted for exhaustive enumeration (`10! = 3628800`).
pub const MAX_EXHAUSTIVE_N: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PermutationScope {
    AllLabels,
    /// Permute only the training half of the split statistic.
    FirstHalfLabels,
}

impl fmt::Display for PermutationScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PermutationScope::AllLabels => "all",
            PermutationScope::FirstHalfLabels => "first-half",
        })
    }
}

impl FromStr for PermutationScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "all" | "alllabels" => Ok(PermutationScope::AllLabels),
            "firsthalf" | "firsthalflabels" => Ok(PermutationScope::FirstHalfLabels),
            _ => Err(Error::InvalidParameter(format!("unknown permutation scope '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationPlan {
    /// Number of random replicates `B`; ignored when `exhaustive` is set.
    pub permutations: usize,
    pub seed: u64,
    pub scope: PermutationScope,
    /// `0` picks the worker count automatically, `1` runs sequentially.
    pub workers: usize,
    /// Use every one of the `n!` orderings as a replicate.
    pub exhaustive: bool,
}

impl PermutationPlan {
    pub fn new(permutations: usize, seed: u64) -> Self {
        Self { permutations, seed, scope: PermutationScope::AllLabels, workers: 0, exhaustive: false }
    }

    /// All `n!` permutations of the rows, in lexicographic order.
    pub fn exhaustive() -> Self {
        Self { exhaustive: true, ..Self::new(1, 0) }
    }

    pub fn with_scope(mut self, scope: PermutationScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    /// Number of replicates for a sample of size `n`.
    pub fn replicates(&self, n: usize) -> Result<usize> {
        if self.exhaustive {
            if n > MAX_EXHAUSTIVE_N {
                return Err(Error::InvalidParameter(format!(
                    "exhaustive enumeration supports n <= {MAX_EXHAUSTIVE_N}, got {n}"
                )));
            }
            Ok((1..=n).product())
        } else if self.permutations == 0 {
            Err(Error::InvalidParameter("the number of permutations must be at least 1".into()))
        } else {
            Ok(self.permutations)
        }
    }

    /// Label vector of replicate `b`. `positions` restricts the shuffle to
    /// those rows; the others keep their labels.
    pub fn permuted_labels(&self, labels: &[u8], b: usize, positions: Option<&[usize]>) -> Vec<u8> {
        let mut out = labels.to_vec();
        if self.exhaustive {
            let perm = nth_permutation(labels.len(), b);
            for (o, &p) in out.iter_mut().zip(&perm) {
                *o = labels[p];
            }
            return out;
        }
        let mut rng = rng::child_rng(self.seed, b as u64);
        match positions {
            None => out.shuffle(&mut rng),
            Some(pos) => {
                let mut vals: Vec<u8> = pos.iter().map(|&i| labels[i]).collect();
                vals.shuffle(&mut rng);
                for (&i, v) in pos.iter().zip(vals) {
                    out[i] = v;
                }
            }
        }
        out
    }
}

/// The `index`-th permutation of `0..n` in lexicographic order.
pub fn nth_permutation(n: usize, mut index: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut fact: Vec<usize> = vec![1; n + 1];
    for i in 1..=n {
        fact[i] = fact[i - 1].saturating_mul(i);
    }
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let j = index / fact[i];
        index %= fact[i];
        out.push(pool.remove(j));
    }
    out
}

/// Relative gap below which a replicate ties the observed value. Equal
/// statistics reached through different label vectors (mirror-image
/// neighbour counts, say) can differ in the last bits.
pub const TIE_RTOL: f64 = 1e-10;

/// Strict exceedance `T_b > T_obs`, with ties up to [`TIE_RTOL`].
#[inline]
pub fn exceeds(replicate: f64, observed: f64) -> bool {
    replicate - observed > TIE_RTOL * observed.abs()
}

/// `(1 + #{b : T_b > T_obs}) / (B + 1)`.
pub fn p_value(observed: f64, replicates: &[f64]) -> f64 {
    let exceed = replicates.iter().filter(|&&t| exceeds(t, observed)).count();
    (1 + exceed) as f64 / (replicates.len() + 1) as f64
}

/// The `ceil((1 - alpha)(B + 1))`-th smallest replicate, clamped to the
/// sample. Returns `+inf` when that rank exceeds `B`, i.e. when no observed
/// value can be extreme enough.
pub fn permutation_quantile(replicates: &[f64], alpha: f64) -> Result<f64> {
    if replicates.is_empty() {
        return Err(Error::InvalidParameter("no replicates".into()));
    }
    let b = replicates.len();
    let rank = ((1.0 - alpha) * (b + 1) as f64 - 1e-9).ceil().max(1.0) as usize;
    if rank > b {
        return Ok(f64::INFINITY);
    }
    let mut sorted = replicates.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[rank - 1])
}

/// True when no permutation can change the label vector, so every replicate
/// reproduces the observed statistic.
fn labels_fixed(labels: &[u8], positions: Option<&[usize]>) -> bool {
    match positions {
        None => labels.windows(2).all(|w| w[0] == w[1]),
        Some(pos) => pos.windows(2).all(|w| labels[w[0]] == labels[w[1]]),
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("alpha = {alpha} must lie in (0, 1)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: String,
    pub observed: f64,
    pub permutations: usize,
    pub replicates: Vec<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    pub seed: u64,
}

impl TestOutcome {
    pub fn from_replicates(statistic: String, observed: f64, replicates: Vec<f64>, alpha: f64, seed: u64) -> Self {
        let p = p_value(observed, &replicates);
        Self {
            statistic,
            observed,
            permutations: replicates.len(),
            replicates,
            p_value: p,
            alpha,
            reject: p < alpha,
            seed,
        }
    }

    /// Report `p = 1` for a permutation distribution that is a point mass at
    /// the observed value. The counting rule would give `1 / (B + 1)` here.
    fn point_mass(mut self) -> Self {
        self.p_value = 1.0;
        self.reject = false;
        self
    }
}

/// Permutation test of a global statistic. The estimator is refit for every
/// replicate; label-independent work (smoother weights, pairwise matrices,
/// forest column orderings) is done once.
pub fn global_test(data: &LabeledDataset, stat: &StatisticSpec, plan: &PermutationPlan, alpha: f64) -> Result<TestOutcome> {
    let mut out = global_tests(data, std::slice::from_ref(stat), plan, alpha)?;
    Ok(out.remove(0))
}

/// Permutation tests of several statistics on one dataset, all calibrated
/// with the same `B` relabellings. Statistics backed by the same forest
/// share each replicate's fit.
pub fn global_tests(
    data: &LabeledDataset,
    stats: &[StatisticSpec],
    plan: &PermutationPlan,
    alpha: f64,
) -> Result<Vec<TestOutcome>> {
    check_alpha(alpha)?;
    if stats.is_empty() {
        return Err(Error::InvalidParameter("no statistics requested".into()));
    }
    if stats.iter().any(|s| s.kind() == StatKind::LocalReg) {
        return Err(Error::InvalidParameter("the local statistic needs test points; use the local test".into()));
    }
    let positions = match plan.scope {
        PermutationScope::AllLabels => None,
        PermutationScope::FirstHalfLabels => match stats {
            [s] if s.kind() == StatKind::GlobalRegSplit => {
                Some(split_indices(data.labels(), data.scheme(), s.split_seed())?.0)
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "first-half permutation applies to a single split statistic only".into(),
                ))
            }
        },
    };
    let b = plan.replicates(data.n())?;
    let prepared = stats.iter().map(|s| s.prepare(data)).collect::<Result<Vec<_>>>()?;
    let observed = eval_joint(&prepared, data.labels())?;
    let per_replicate = par::try_map_indexed(b, plan.workers, |i| {
        let labels = plan.permuted_labels(data.labels(), i, positions.as_deref());
        eval_joint(&prepared, &labels).map_err(|e| Error::Replicate { index: i, source: Box::new(e) })
    })?;
    let fixed = labels_fixed(data.labels(), positions.as_deref());
    Ok(stats
        .iter()
        .enumerate()
        .map(|(j, s)| {
            let reps = per_replicate.iter().map(|r| r[j]).collect();
            let out = TestOutcome::from_replicates(s.label(), observed[j], reps, alpha, plan.seed);
            if fixed {
                out.point_mass()
            } else {
                out
            }
        })
        .collect())
}

/// One test point of a local test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalPoint {
    pub statistic: f64,
    pub estimate: f64,
    pub sign: i8,
    pub p_value: f64,
    pub reject: bool,
}

impl LocalPoint {
    /// `red` where group 1 is significantly denser, `blue` where group 0 is,
    /// `gray` otherwise.
    pub fn color(&self) -> &'static str {
        match (self.reject, self.sign) {
            (true, s) if s > 0 => "red",
            (true, s) if s < 0 => "blue",
            _ => "gray",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalTestReport {
    pub estimator: String,
    pub pi1: f64,
    pub permutations: usize,
    pub alpha: f64,
    pub correction: Correction,
    pub seed: u64,
    pub points: Vec<LocalPoint>,
}

impl LocalTestReport {
    pub fn p_values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.p_value).collect()
    }

    /// Counts of (red, blue, gray) points.
    pub fn color_counts(&self) -> (usize, usize, usize) {
        self.points.iter().fold((0, 0, 0), |(r, b, g), p| match p.color() {
            "red" => (r + 1, b, g),
            "blue" => (r, b + 1, g),
            _ => (r, b, g + 1),
        })
    }
}

/// Local permutation test at every row of `points`. All points share the
/// same `B` relabellings; each replicate refits the estimator once.
pub fn local_test(
    data: &LabeledDataset,
    points: &FeatureMatrix,
    estimator: &EstimatorConfig,
    plan: &PermutationPlan,
    alpha: f64,
    correction: Correction,
) -> Result<LocalTestReport> {
    let (observed, exceed, b) = local_counts(data, points, estimator, plan)?;
    let fixed = labels_fixed(data.labels(), None);
    let pvals: Vec<f64> =
        exceed.iter().map(|&c| if fixed { 1.0 } else { (1 + c) as f64 / (b + 1) as f64 }).collect();
    let decisions = adjust(&pvals, alpha, correction)?;
    let points = observed
        .into_iter()
        .zip(pvals)
        .zip(decisions.reject)
        .map(|((s, p), reject)| LocalPoint { statistic: s.value, estimate: s.estimate, sign: s.sign, p_value: p, reject })
        .collect();
    Ok(LocalTestReport {
        estimator: estimator.name().to_string(),
        pi1: data.pi1(),
        permutations: b,
        alpha,
        correction,
        seed: plan.seed,
        points,
    })
}

fn local_setup(
    data: &LabeledDataset,
    points: &FeatureMatrix,
    estimator: &EstimatorConfig,
    plan: &PermutationPlan,
) -> Result<(Predictor, usize)> {
    if points.rows() == 0 {
        return Err(Error::InvalidParameter("no test points".into()));
    }
    if points.cols() != data.dim() {
        return Err(Error::InvalidParameter(format!(
            "test points have dimension {}, data has {}",
            points.cols(),
            data.dim()
        )));
    }
    if plan.scope != PermutationScope::AllLabels {
        return Err(Error::InvalidParameter("local tests permute all labels".into()));
    }
    let b = plan.replicates(data.n())?;
    let pred = Predictor::new(estimator, data.shared_features(), Queries::Points(Arc::new(points.clone())))?;
    Ok((pred, b))
}

fn local_stats(pred: &Predictor, labels: &[u8]) -> Result<Vec<LocalStat>> {
    let pi1 = count_ones(labels) as f64 / labels.len() as f64;
    Ok(pred.predict(labels)?.into_iter().map(|m| LocalStat::new(m, pi1)).collect())
}

/// Observed local statistics and, per point, the number of replicates that
/// strictly exceed them. Counts are integers, so the chunked reduction is
/// exact for any worker count.
fn local_counts(
    data: &LabeledDataset,
    points: &FeatureMatrix,
    estimator: &EstimatorConfig,
    plan: &PermutationPlan,
) -> Result<(Vec<LocalStat>, Vec<u64>, usize)> {
    let (pred, b) = local_setup(data, points, estimator, plan)?;
    let observed = local_stats(&pred, data.labels())?;
    let obs: Vec<f64> = observed.iter().map(|s| s.value).collect();
    let workers = par::resolve_workers(plan.workers);
    let chunks = par::chunk_ranges(b, workers * 4);
    let partial = par::try_map_indexed(chunks.len(), workers, |c| {
        let mut counts = vec![0u64; obs.len()];
        for i in chunks[c].clone() {
            let labels = plan.permuted_labels(data.labels(), i, None);
            let stats = local_stats(&pred, &labels).map_err(|e| Error::Replicate { index: i, source: Box::new(e) })?;
            for ((count, s), &o) in counts.iter_mut().zip(&stats).zip(&obs) {
                *count += u64::from(exceeds(s.value, o));
            }
        }
        Ok::<_, Error>(counts)
    })?;
    let mut exceed = vec![0u64; obs.len()];
    for counts in partial {
        for (e, c) in exceed.iter_mut().zip(counts) {
            *e += c;
        }
    }
    Ok((observed, exceed, b))
}

/// Local test at a single point, keeping every replicate value.
pub fn local_point_test(
    data: &LabeledDataset,
    x: &[f64],
    estimator: &EstimatorConfig,
    plan: &PermutationPlan,
    alpha: f64,
) -> Result<TestOutcome> {
    check_alpha(alpha)?;
    let point = FeatureMatrix::new(x.to_vec(), 1, x.len())?;
    let (pred, b) = local_setup(data, &point, estimator, plan)?;
    let observed = local_stats(&pred, data.labels())?[0].value;
    let replicates = par::try_map_indexed(b, plan.workers, |i| {
        let labels = plan.permuted_labels(data.labels(), i, None);
        local_stats(&pred, &labels)
            .map(|s| s[0].value)
            .map_err(|e| Error::Replicate { index: i, source: Box::new(e) })
    })?;
    let label = format!("{}[{}]", StatKind::LocalReg, estimator.name());
    let out = TestOutcome::from_replicates(label, observed, replicates, alpha, plan.seed);
    Ok(if labels_fixed(data.labels(), None) { out.point_mass() } else { out })
}
