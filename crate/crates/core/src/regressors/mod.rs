//! Estimators of the class probability `m(x) = P(Y = 1 | X = x)`.
//!
//! Every fitted model predicts values in `[0, 1]` and is immutable. The kNN
//! and kernel estimators are linear smoothers: `m(x) = sum_i w_i(x) Y_i` with
//! weights that depend on the features only, exposed through
//! [`RegressionModel::weights`].

mod forest;
mod kernel;
mod knn;
pub(crate) mod lda;

use serde::{Deserialize, Serialize};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

pub use forest::{fit_forest, ForestConfig, ForestModel, ForestTrainer};
pub use kernel::{fit_kernel, KernelKind, KernelModel};
pub use knn::{fit_knn, knn_neighbors, KnnModel};
pub use lda::{fit_lda, LdaModel};

/// Which estimator to fit, with its tuning parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum EstimatorConfig {
    Lda,
    Knn { k: usize },
    Kernel { bandwidth: f64, kernel: KernelKind },
    Forest(ForestConfig),
}

impl EstimatorConfig {
    pub fn validate(&self, n: usize, dim: usize) -> Result<()> {
        match self {
            EstimatorConfig::Lda => Ok(()),
            EstimatorConfig::Knn { k } => {
                if *k == 0 || *k > n {
                    Err(Error::InvalidParameter(format!("k = {k} must lie in [1, {n}]")))
                } else {
                    Ok(())
                }
            }
            EstimatorConfig::Kernel { bandwidth, .. } => {
                if bandwidth.is_finite() && *bandwidth > 0.0 {
                    Ok(())
                } else {
                    Err(Error::InvalidParameter(format!("bandwidth {bandwidth} must be positive")))
                }
            }
            EstimatorConfig::Forest(cfg) => cfg.validate(dim),
        }
    }

    /// True for estimators of the form `sum_i w_i(x) Y_i`.
    pub fn is_linear_smoother(&self) -> bool {
        matches!(self, EstimatorConfig::Knn { .. } | EstimatorConfig::Kernel { .. })
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorConfig::Lda => "lda",
            EstimatorConfig::Knn { .. } => "knn",
            EstimatorConfig::Kernel { .. } => "kernel",
            EstimatorConfig::Forest(_) => "rf",
        }
    }
}

/// Fit the configured estimator on `data`.
pub fn fit(cfg: &EstimatorConfig, data: &LabeledDataset) -> Result<RegressionModel> {
    Ok(match cfg {
        EstimatorConfig::Lda => RegressionModel::Lda(fit_lda(data)?),
        EstimatorConfig::Knn { k } => RegressionModel::Knn(fit_knn(data, *k)?),
        EstimatorConfig::Kernel { bandwidth, kernel } => RegressionModel::Kernel(fit_kernel(data, *bandwidth, *kernel)?),
        EstimatorConfig::Forest(f) => RegressionModel::Forest(fit_forest(data, f)?),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelKind {
    Lda,
    Knn,
    Kernel,
    RandomForest,
}

impl ModelKind {
    fn name(self) -> &'static str {
        match self {
            ModelKind::Lda => "LDA",
            ModelKind::Knn => "kNN",
            ModelKind::Kernel => "kernel",
            ModelKind::RandomForest => "random forest",
        }
    }
}

/// Smoother weights `w_i(x)`, one per training row; nonnegative, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SmootherWeights {
    pub weights: Vec<f64>,
}

impl SmootherWeights {
    /// `sum_i w_i y_i`.
    pub fn apply(&self, labels: &[u8]) -> f64 {
        self.weights.iter().zip(labels).filter(|(_, &y)| y == 1).map(|(w, _)| w).sum()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Nonzero smoother weights in index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseWeights {
    pub index: Vec<u32>,
    pub weight: Vec<f64>,
}

impl SparseWeights {
    pub fn from_dense(w: &[f64]) -> Self {
        let (index, weight) = w
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, &v)| (i as u32, v))
            .unzip();
        Self { index, weight }
    }

    #[inline]
    pub fn apply(&self, labels: &[u8]) -> f64 {
        self.index
            .iter()
            .zip(&self.weight)
            .map(|(&i, &w)| if labels[i as usize] == 1 { w } else { 0.0 })
            .sum()
    }
}

/// A fitted estimator.
#[derive(Debug, Clone)]
pub enum RegressionModel {
    Lda(LdaModel),
    Knn(KnnModel),
    Kernel(KernelModel),
    Forest(ForestModel),
}

impl RegressionModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            RegressionModel::Lda(_) => ModelKind::Lda,
            RegressionModel::Knn(_) => ModelKind::Knn,
            RegressionModel::Kernel(_) => ModelKind::Kernel,
            RegressionModel::Forest(_) => ModelKind::RandomForest,
        }
    }

    /// Estimate of `m(x)`, always in `[0, 1]`.
    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            RegressionModel::Lda(m) => m.predict(x),
            RegressionModel::Knn(m) => m.predict(x),
            RegressionModel::Kernel(m) => m.predict(x),
            RegressionModel::Forest(m) => m.predict(x),
        }
    }

    /// Fraction of label 1 in the training data.
    pub fn pi1(&self) -> f64 {
        match self {
            RegressionModel::Lda(m) => m.pi1(),
            RegressionModel::Knn(m) => m.pi1(),
            RegressionModel::Kernel(m) => m.pi1(),
            RegressionModel::Forest(m) => m.pi1(),
        }
    }

    /// Predictions at the training rows. Forests return their stored in-sample
    /// predictions; the other models evaluate `predict` row by row.
    pub fn fitted_values(&self, data: &LabeledDataset) -> Vec<f64> {
        match self {
            RegressionModel::Forest(m) if m.n_train() == data.n() => m.train_predictions().to_vec(),
            _ => data.features().iter_rows().map(|x| self.predict(x)).collect(),
        }
    }

    /// Smoother weights at `x`; only kNN and kernel models have them.
    pub fn weights(&self, x: &[f64]) -> Result<SmootherWeights> {
        match self {
            RegressionModel::Knn(m) => Ok(m.weights(x)),
            RegressionModel::Kernel(m) => m.weights(x),
            other => Err(Error::Unsupported { op: "weights", model: other.kind().name() }),
        }
    }

    pub(crate) fn sparse_weights(&self, x: &[f64]) -> Result<SparseWeights> {
        match self {
            RegressionModel::Knn(m) => Ok(m.sparse_weights(x)),
            RegressionModel::Kernel(m) => m.sparse_weights(x),
            other => Err(Error::Unsupported { op: "weights", model: other.kind().name() }),
        }
    }

    pub fn as_forest(&self) -> Option<&ForestModel> {
        match self {
            RegressionModel::Forest(f) => Some(f),
            _ => None,
        }
    }
}
