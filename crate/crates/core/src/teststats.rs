//! Scalar two-sample statistics.
//!
//! The regression statistics compare a fitted `m(x)` with the overall
//! fraction of label 1. Hotelling's T², MMD and the energy distance are the
//! classical benchmarks. Every statistic can be *prepared* once for a fixed
//! feature matrix and then evaluated for many label vectors, which is how the
//! permutation engine uses them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::dataset::{count_ones, sq_dist, FeatureMatrix, LabeledDataset, Scheme};
use crate::error::{Error, Result};
use crate::regressors::{
    self, fit_kernel, fit_knn, fit_lda, lda, EstimatorConfig, ForestModel, ForestTrainer, RegressionModel, SparseWeights,
};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StatKind {
    /// Mean squared deviation of in-sample fitted values from the label mean.
    GlobalReg,
    /// Fit on one half, evaluate on the other.
    GlobalRegSplit,
    /// Squared deviation at a single query point.
    LocalReg,
    /// `GlobalReg` with Fisher's LDA as the estimator.
    LdaReg,
    AccuracyInSample,
    AccuracyOob,
    AccuracyCrossVal,
    Hotelling,
    Mmd,
    Energy,
}

impl StatKind {
    pub const ALL: [StatKind; 10] = [
        StatKind::GlobalReg,
        StatKind::GlobalRegSplit,
        StatKind::LocalReg,
        StatKind::LdaReg,
        StatKind::AccuracyInSample,
        StatKind::AccuracyOob,
        StatKind::AccuracyCrossVal,
        StatKind::Hotelling,
        StatKind::Mmd,
        StatKind::Energy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StatKind::GlobalReg => "global_reg",
            StatKind::GlobalRegSplit => "global_reg_split",
            StatKind::LocalReg => "local_reg",
            StatKind::LdaReg => "lda_reg",
            StatKind::AccuracyInSample => "accuracy_in_sample",
            StatKind::AccuracyOob => "accuracy_oob",
            StatKind::AccuracyCrossVal => "accuracy_cross_val",
            StatKind::Hotelling => "hotelling",
            StatKind::Mmd => "mmd",
            StatKind::Energy => "energy",
        }
    }

    pub fn needs_estimator(self) -> bool {
        matches!(
            self,
            StatKind::GlobalReg
                | StatKind::GlobalRegSplit
                | StatKind::LocalReg
                | StatKind::AccuracyInSample
                | StatKind::AccuracyOob
                | StatKind::AccuracyCrossVal
        )
    }
}

impl fmt::Display for StatKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StatKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        StatKind::ALL
            .into_iter()
            .find(|k| k.name().replace('_', "") == key)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown statistic '{s}'")))
    }
}

/// A statistic together with the estimator it needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatisticSpec {
    kind: StatKind,
    estimator: Option<EstimatorConfig>,
    /// Seed for the random halves used by the split and cross-validated statistics.
    split_seed: u64,
}

impl StatisticSpec {
    pub fn new(kind: StatKind, estimator: Option<EstimatorConfig>) -> Result<Self> {
        match (&estimator, kind.needs_estimator()) {
            (None, true) => return Err(Error::InvalidParameter(format!("statistic {kind} needs an estimator"))),
            (Some(_), false) => {
                return Err(Error::InvalidParameter(format!("statistic {kind} does not take an estimator")))
            }
            _ => {}
        }
        if kind == StatKind::AccuracyOob && !matches!(estimator, Some(EstimatorConfig::Forest(_))) {
            return Err(Error::Unsupported { op: "out-of-bag accuracy", model: "non-forest estimator" });
        }
        Ok(Self { kind, estimator, split_seed: 0 })
    }

    pub fn global_reg(estimator: EstimatorConfig) -> Self {
        Self { kind: StatKind::GlobalReg, estimator: Some(estimator), split_seed: 0 }
    }

    pub fn local_reg(estimator: EstimatorConfig) -> Self {
        Self { kind: StatKind::LocalReg, estimator: Some(estimator), split_seed: 0 }
    }

    pub fn simple(kind: StatKind) -> Result<Self> {
        Self::new(kind, None)
    }

    pub fn with_split_seed(mut self, seed: u64) -> Self {
        self.split_seed = seed;
        self
    }

    pub fn kind(&self) -> StatKind {
        self.kind
    }

    pub fn estimator(&self) -> Option<&EstimatorConfig> {
        self.estimator.as_ref()
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed
    }

    /// Short label such as `global_reg[knn]`.
    pub fn label(&self) -> String {
        match &self.estimator {
            Some(e) => format!("{}[{}]", self.kind, e.name()),
            None => self.kind.to_string(),
        }
    }

    /// Check the estimator parameters against the data shape.
    pub fn validate_for(&self, data: &LabeledDataset) -> Result<()> {
        if let Some(e) = &self.estimator {
            let n = match self.kind {
                StatKind::GlobalRegSplit | StatKind::AccuracyCrossVal => data.n() / 2,
                _ => data.n(),
            };
            e.validate(n, data.dim())?;
        }
        Ok(())
    }

    /// Evaluate on `data` as given.
    pub fn compute(&self, data: &LabeledDataset) -> Result<f64> {
        self.prepare(data)?.eval(data.labels())
    }

    /// Precompute everything that depends on the features only.
    pub fn prepare(&self, data: &LabeledDataset) -> Result<PreparedStatistic> {
        self.validate_for(data)?;
        let x = data.shared_features();
        let engine = match self.kind {
            StatKind::GlobalReg | StatKind::AccuracyInSample | StatKind::AccuracyOob => {
                Engine::InSample(Predictor::new(self.estimator.as_ref().unwrap(), x, Queries::InSample)?)
            }
            StatKind::LdaReg => Engine::InSample(Predictor::new(&EstimatorConfig::Lda, x, Queries::InSample)?),
            StatKind::GlobalRegSplit => {
                let (train, eval) = split_indices(data.labels(), data.scheme(), self.split_seed)?;
                let pred = Predictor::for_rows(self.estimator.as_ref().unwrap(), data.features(), &train, &eval)?;
                Engine::Split { train, pred }
            }
            StatKind::AccuracyCrossVal => {
                let (a, b) = split_indices(data.labels(), data.scheme(), self.split_seed)?;
                let cfg = self.estimator.as_ref().unwrap();
                let ab = Predictor::for_rows(cfg, data.features(), &a, &b)?;
                let ba = Predictor::for_rows(cfg, data.features(), &b, &a)?;
                Engine::CrossVal { folds: [(a.clone(), b.clone(), ab), (b, a, ba)] }
            }
            StatKind::Hotelling => Engine::Hotelling(Arc::clone(x)),
            StatKind::Mmd => Engine::Pairwise(mmd_kernel_matrix(data.features())?),
            StatKind::Energy => Engine::Pairwise(distance_matrix(data.features())),
            StatKind::LocalReg => {
                return Err(Error::InvalidParameter(
                    "the local statistic is evaluated at query points; use the local test".into(),
                ))
            }
        };
        Ok(PreparedStatistic { kind: self.kind, engine })
    }
}

/// A statistic bound to one feature matrix, ready to be evaluated for any
/// label vector.
#[derive(Debug, Clone)]
pub struct PreparedStatistic {
    kind: StatKind,
    engine: Engine,
}

#[derive(Debug, Clone)]
enum Engine {
    InSample(Predictor),
    Split { train: Vec<usize>, pred: Predictor },
    /// (training rows, evaluation rows, predictor) per fold.
    CrossVal { folds: [(Vec<usize>, Vec<usize>, Predictor); 2] },
    Hotelling(Arc<FeatureMatrix>),
    /// Symmetric `n x n` kernel or distance matrix, row-major.
    Pairwise(Vec<f64>),
}

impl PreparedStatistic {
    pub fn kind(&self) -> StatKind {
        self.kind
    }

    pub fn eval(&self, labels: &[u8]) -> Result<f64> {
        match &self.engine {
            Engine::InSample(pred) => match self.kind {
                StatKind::AccuracyOob => oob_accuracy(&pred.predict_oob(labels)?, labels),
                kind => Ok(in_sample_value(kind, &pred.predict(labels)?, labels)),
            },
            Engine::Split { train, pred } => {
                let train_labels: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
                let pi1 = count_ones(&train_labels) as f64 / train_labels.len() as f64;
                Ok(mean_sq_dev(&pred.predict(&train_labels)?, pi1))
            }
            Engine::CrossVal { folds } => {
                let mut hits = 0usize;
                for (train, eval, pred) in folds {
                    let train_labels: Vec<u8> = train.iter().map(|&i| labels[i]).collect();
                    let p = pred.predict(&train_labels)?;
                    hits += p.iter().zip(eval).filter(|(&p, &i)| u8::from(p > 0.5) == labels[i]).count();
                }
                Ok(hits as f64 / labels.len() as f64)
            }
            Engine::Hotelling(x) => hotelling_from(x, labels),
            Engine::Pairwise(m) => {
                let (s00, s01, s11, n0, n1) = group_sums(m, labels)?;
                let (n0, n1) = (n0 as f64, n1 as f64);
                Ok(match self.kind {
                    StatKind::Mmd => s00 / (n0 * n0) + s11 / (n1 * n1) - 2.0 * s01 / (n0 * n1),
                    StatKind::Energy => 2.0 * s01 / (n0 * n1) - s00 / (n0 * n0) - s11 / (n1 * n1),
                    _ => unreachable!(),
                })
            }
        }
    }
}

/// Evaluate several statistics prepared on the same data for one label
/// vector. Forest statistics that fit identical forests (same features and
/// config) share a single fit, so a regression statistic and an accuracy
/// statistic cost one forest per label vector.
pub fn eval_joint(stats: &[PreparedStatistic], labels: &[u8]) -> Result<Vec<f64>> {
    let mut fits: Vec<(&ForestTrainer, ForestModel)> = Vec::new();
    stats
        .iter()
        .map(|s| {
            let trainer = match &s.engine {
                Engine::InSample(Predictor { kind: PredictorKind::Forest(t), .. }) => t,
                _ => return s.eval(labels),
            };
            let pos = match fits.iter().position(|(t, _)| t.same_fits(trainer)) {
                Some(pos) => pos,
                None => {
                    fits.push((trainer, trainer.fit(labels)?));
                    fits.len() - 1
                }
            };
            let model = &fits[pos].1;
            match s.kind {
                StatKind::AccuracyOob => oob_accuracy(model.oob_predictions(), labels),
                kind => Ok(in_sample_value(kind, model.train_predictions(), labels)),
            }
        })
        .collect()
}

fn in_sample_value(kind: StatKind, pred: &[f64], labels: &[u8]) -> f64 {
    match kind {
        StatKind::GlobalReg | StatKind::LdaReg => mean_sq_dev(pred, count_ones(labels) as f64 / labels.len() as f64),
        StatKind::AccuracyInSample => accuracy(pred, labels),
        _ => unreachable!("not an in-sample statistic"),
    }
}

/// Where a [`Predictor`] evaluates the fitted regression.
#[derive(Debug, Clone)]
pub(crate) enum Queries {
    /// At the training rows themselves.
    InSample,
    Points(Arc<FeatureMatrix>),
}

/// Label-independent part of an estimator: maps training labels to
/// predictions at a fixed set of query points.
#[derive(Debug, Clone)]
pub(crate) struct Predictor {
    train: Arc<FeatureMatrix>,
    queries: Queries,
    kind: PredictorKind,
}

#[derive(Debug, Clone)]
enum PredictorKind {
    /// Smoother weights of each query point; weights depend on features only.
    Smoother(Vec<SparseWeights>),
    Forest(ForestTrainer),
    Lda,
}

impl Predictor {
    pub(crate) fn new(cfg: &EstimatorConfig, train: &Arc<FeatureMatrix>, queries: Queries) -> Result<Self> {
        let n = train.rows();
        let kind = match cfg {
            EstimatorConfig::Knn { .. } | EstimatorConfig::Kernel { .. } => {
                cfg.validate(n, train.cols())?;
                // Weights ignore the labels, so any placeholder labelling will do.
                let dummy = LabeledDataset::from_shared(Arc::clone(train), vec![0; n], Scheme::Separate)?;
                let model = match cfg {
                    EstimatorConfig::Knn { k } => RegressionModel::Knn(fit_knn(&dummy, *k)?),
                    EstimatorConfig::Kernel { bandwidth, kernel } => {
                        RegressionModel::Kernel(fit_kernel(&dummy, *bandwidth, *kernel)?)
                    }
                    _ => unreachable!(),
                };
                let weights_at = |q: &[f64]| match model.sparse_weights(q) {
                    Err(Error::ZeroDenominator) => Ok(SparseWeights { index: Vec::new(), weight: Vec::new() }),
                    other => other,
                };
                let rows: Result<Vec<SparseWeights>> = match &queries {
                    Queries::InSample => train.iter_rows().map(weights_at).collect(),
                    Queries::Points(p) => p.iter_rows().map(weights_at).collect(),
                };
                PredictorKind::Smoother(rows?)
            }
            EstimatorConfig::Forest(f) => PredictorKind::Forest(ForestTrainer::new(Arc::clone(train), f.clone())?),
            EstimatorConfig::Lda => PredictorKind::Lda,
        };
        Ok(Self { train: Arc::clone(train), queries, kind })
    }

    /// Train on rows `train` of `x`, predict at rows `eval`.
    fn for_rows(cfg: &EstimatorConfig, x: &FeatureMatrix, train: &[usize], eval: &[usize]) -> Result<Self> {
        Self::new(cfg, &Arc::new(x.select_rows(train)), Queries::Points(Arc::new(x.select_rows(eval))))
    }

    fn query_rows(&self) -> &FeatureMatrix {
        match &self.queries {
            Queries::InSample => &self.train,
            Queries::Points(p) => p,
        }
    }

    /// Predictions at the query points given training labels.
    pub(crate) fn predict(&self, labels: &[u8]) -> Result<Vec<f64>> {
        match &self.kind {
            PredictorKind::Smoother(rows) => Ok(rows.iter().map(|w| w.apply(labels)).collect()),
            PredictorKind::Forest(trainer) => {
                let model = trainer.fit(labels)?;
                Ok(match &self.queries {
                    Queries::InSample => model.train_predictions().to_vec(),
                    Queries::Points(p) => p.iter_rows().map(|x| model.predict(x)).collect(),
                })
            }
            PredictorKind::Lda => {
                let data = LabeledDataset::from_shared(Arc::clone(&self.train), labels.to_vec(), Scheme::Separate)?;
                let model = fit_lda(&data)?;
                Ok(self.query_rows().iter_rows().map(|x| model.predict(x)).collect())
            }
        }
    }

    fn predict_oob(&self, labels: &[u8]) -> Result<Vec<Option<f64>>> {
        match (&self.kind, &self.queries) {
            (PredictorKind::Forest(trainer), Queries::InSample) => Ok(trainer.fit(labels)?.oob_predictions().to_vec()),
            _ => Err(Error::Unsupported { op: "out-of-bag accuracy", model: "non-forest estimator" }),
        }
    }
}

fn mean_sq_dev(pred: &[f64], pi1: f64) -> f64 {
    pred.iter().map(|p| (p - pi1) * (p - pi1)).sum::<f64>() / pred.len() as f64
}

fn accuracy(pred: &[f64], labels: &[u8]) -> f64 {
    let hits = pred.iter().zip(labels).filter(|(&p, &y)| u8::from(p > 0.5) == y).count();
    hits as f64 / labels.len() as f64
}

fn oob_accuracy(pred: &[Option<f64>], labels: &[u8]) -> Result<f64> {
    let (hits, total) = pred
        .iter()
        .zip(labels)
        .filter_map(|(p, &y)| p.map(|p| u8::from(p > 0.5) == y))
        .fold((0usize, 0usize), |(h, t), hit| (h + usize::from(hit), t + 1));
    if total == 0 {
        return Err(Error::Degenerate("no out-of-bag predictions available".into()));
    }
    Ok(hits as f64 / total as f64)
}

/// Split row indices into two halves; the first gets `ceil(n/2)` rows.
/// Under separate sampling both halves keep the class proportions.
pub fn split_indices(labels: &[u8], scheme: Scheme, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two rows to split".into()));
    }
    let mut rng = rng::rng_from_seed(rng::tagged_seed(seed, "split"));
    let half = n.div_ceil(2);
    let (mut first, mut second) = match scheme {
        Scheme::Iid => {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut rng);
            let second = idx.split_off(half);
            (idx, second)
        }
        Scheme::Separate => {
            let n1 = count_ones(labels);
            let take1 = ((n1 * half) as f64 / n as f64).round() as usize;
            let take1 = take1.clamp(half.saturating_sub(n - n1), n1.min(half));
            let mut first = Vec::with_capacity(half);
            let mut second = Vec::with_capacity(n - half);
            for (label, take) in [(0u8, half - take1), (1u8, take1)] {
                let mut idx: Vec<usize> = (0..n).filter(|&i| labels[i] == label).collect();
                idx.shuffle(&mut rng);
                second.extend_from_slice(&idx[take..]);
                idx.truncate(take);
                first.extend(idx);
            }
            (first, second)
        }
    };
    first.sort_unstable();
    second.sort_unstable();
    Ok((first, second))
}

/// `(1/n) sum_i (m(X_i) - pi1)^2` over the training rows of `model`.
pub fn global_reg_stat(model: &RegressionModel, data: &LabeledDataset) -> f64 {
    mean_sq_dev(&model.fitted_values(data), model.pi1())
}

/// Fit on the first half of a random split, evaluate on the second.
pub fn global_reg_stat_split(data: &LabeledDataset, cfg: &EstimatorConfig, seed: u64) -> Result<f64> {
    let (train, eval) = split_indices(data.labels(), data.scheme(), seed)?;
    let train_data = data.subset(&train);
    let model = regressors::fit(cfg, &train_data)?;
    let pred: Vec<f64> = eval.iter().map(|&i| model.predict(data.features().row(i))).collect();
    Ok(mean_sq_dev(&pred, train_data.pi1()))
}

/// Local statistic with the direction of the difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalStat {
    pub value: f64,
    pub estimate: f64,
    /// `+1` where group 1 is over-represented, `-1` where group 0 is, `0` on a tie.
    pub sign: i8,
}

impl LocalStat {
    pub fn new(estimate: f64, pi1: f64) -> Self {
        let d = estimate - pi1;
        let sign = if d > 0.0 {
            1
        } else if d < 0.0 {
            -1
        } else {
            0
        };
        Self { value: d * d, estimate, sign }
    }
}

/// `(m(x) - pi1)^2` and its sign.
pub fn local_reg_stat(model: &RegressionModel, x: &[f64]) -> LocalStat {
    LocalStat::new(model.predict(x), model.pi1())
}

pub fn lda_stat(data: &LabeledDataset) -> Result<f64> {
    let model = RegressionModel::Lda(fit_lda(data)?);
    Ok(global_reg_stat(&model, data))
}

/// Hotelling's T² with the pooled covariance (divisor `n0 + n1 - 2`).
pub fn hotelling_stat(data: &LabeledDataset) -> Result<f64> {
    hotelling_from(data.features(), data.labels())
}

fn hotelling_from(x: &FeatureMatrix, labels: &[u8]) -> Result<f64> {
    let n1 = count_ones(labels);
    let n0 = labels.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::MissingClass { n0, n1 });
    }
    if n0 + n1 <= 2 {
        return Err(Error::InvalidParameter("Hotelling's T² needs more than two rows".into()));
    }
    let data = LabeledDataset::new(x.clone(), labels.to_vec(), Scheme::Separate)?;
    let (mu0, mu1) = lda::group_means(&data);
    let d = x.cols();
    let mut s = DMatrix::zeros(d, d);
    let mut centred = DVector::zeros(d);
    for (row, &y) in x.iter_rows().zip(labels) {
        let mu = if y == 1 { &mu1 } else { &mu0 };
        for j in 0..d {
            centred[j] = row[j] - mu[j];
        }
        s.ger(1.0, &centred, &centred, 1.0);
    }
    s /= (n0 + n1 - 2) as f64;
    let s_inv = lda::spd_inverse(s, "pooled covariance")?;
    let diff = mu0 - mu1;
    let q = (diff.transpose() * s_inv * &diff)[(0, 0)];
    Ok((n0 * n1) as f64 / (n0 + n1) as f64 * q)
}

/// Median of the pairwise squared distances over all pairs `i < j`.
pub fn median_sq_distance(x: &FeatureMatrix) -> f64 {
    let n = x.rows();
    let mut d: Vec<f64> = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(sq_dist(x.row(i), x.row(j)));
        }
    }
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, &mut hi, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    if d.len() % 2 == 1 {
        hi
    } else {
        let lo = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lo + hi)
    }
}

fn mmd_kernel_matrix(x: &FeatureMatrix) -> Result<Vec<f64>> {
    let sigma = median_sq_distance(x);
    if sigma <= 0.0 {
        return Err(Error::Degenerate("median pairwise distance is zero; MMD bandwidth undefined".into()));
    }
    Ok(pairwise(x, |d2| (-d2 / sigma).exp()))
}

fn distance_matrix(x: &FeatureMatrix) -> Vec<f64> {
    pairwise(x, f64::sqrt)
}

fn pairwise(x: &FeatureMatrix, f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = x.rows();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = f(0.0);
        for j in i + 1..n {
            let v = f(sq_dist(x.row(i), x.row(j)));
            m[i * n + j] = v;
            m[j * n + i] = v;
        }
    }
    m
}

/// Within-group-0, cross and within-group-1 sums of a symmetric matrix.
fn group_sums(m: &[f64], labels: &[u8]) -> Result<(f64, f64, f64, usize, usize)> {
    let n = labels.len();
    let n1 = count_ones(labels);
    let n0 = n - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::MissingClass { n0, n1 });
    }
    let (mut s00, mut s01, mut s11) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let row = &m[i * n..(i + 1) * n];
        let (mut r0, mut r1) = (0.0, 0.0);
        for (v, &y) in row.iter().zip(labels) {
            if y == 1 {
                r1 += v;
            } else {
                r0 += v;
            }
        }
        if labels[i] == 1 {
            s11 += r1;
        } else {
            s00 += r0;
            s01 += r1;
        }
    }
    Ok((s00, s01, s11, n0, n1))
}

/// Biased (V-statistic) MMD with a Gaussian kernel `exp(-|x-y|^2 / s)`, where
/// `s` is the median pairwise squared distance of the pooled sample.
pub fn mmd_stat(data: &LabeledDataset) -> Result<f64> {
    StatisticSpec::simple(StatKind::Mmd)?.compute(data)
}

/// Energy distance in V-statistic form.
pub fn energy_stat(data: &LabeledDataset) -> Result<f64> {
    StatisticSpec::simple(StatKind::Energy)?.compute(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyMode {
    InSample,
    Oob,
}

/// Fraction of rows with `1{m(X_i) > 1/2} == Y_i`.
pub fn accuracy_stat(model: &RegressionModel, data: &LabeledDataset, mode: AccuracyMode) -> Result<f64> {
    match mode {
        AccuracyMode::InSample => Ok(accuracy(&model.fitted_values(data), data.labels())),
        AccuracyMode::Oob => match model.as_forest() {
            Some(f) => f.oob_accuracy(data.labels()),
            None => Err(Error::Unsupported { op: "out-of-bag accuracy", model: "non-forest estimator" }),
        },
    }
}

/// Two-fold cross-validated accuracy over a balanced random split: each half
/// is classified by the estimator trained on the other half.
pub fn cross_validated_accuracy(cfg: &EstimatorConfig, data: &LabeledDataset, seed: u64) -> Result<f64> {
    StatisticSpec::new(StatKind::AccuracyCrossVal, Some(cfg.clone()))?.with_split_seed(seed).compute(data)
}
