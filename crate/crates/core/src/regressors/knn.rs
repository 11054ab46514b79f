use std::sync::Arc;

use super::{SmootherWeights, SparseWeights};
use crate::dataset::{sq_dist, FeatureMatrix, LabeledDataset};
use crate::error::{Error, Result};

/// Indices of the `k` nearest rows of `x` to `query` under Euclidean
/// distance, nearest first. Ties are broken by the lower row index.
pub fn knn_neighbors(x: &FeatureMatrix, query: &[f64], k: usize) -> Vec<usize> {
    let n = x.rows();
    let k = k.min(n);
    if k == 0 {
        return Vec::new();
    }
    let mut dist: Vec<(f64, usize)> = x.iter_rows().enumerate().map(|(i, r)| (sq_dist(r, query), i)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < n {
        dist.select_nth_unstable_by(k - 1, cmp);
        dist.truncate(k);
    }
    dist.sort_unstable_by(cmp);
    dist.into_iter().map(|(_, i)| i).collect()
}

/// k-nearest-neighbour average of the labels.
#[derive(Debug, Clone)]
pub struct KnnModel {
    x: Arc<FeatureMatrix>,
    labels: Vec<u8>,
    k: usize,
    pi1: f64,
}

pub fn fit_knn(data: &LabeledDataset, k: usize) -> Result<KnnModel> {
    if k == 0 || k > data.n() {
        return Err(Error::InvalidParameter(format!("k = {k} must lie in [1, {}]", data.n())));
    }
    Ok(KnnModel {
        x: Arc::clone(data.shared_features()),
        labels: data.labels().to_vec(),
        k,
        pi1: data.pi1(),
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }

    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        knn_neighbors(&self.x, x, self.k)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        let ones = self.neighbors(x).into_iter().filter(|&i| self.labels[i] == 1).count();
        ones as f64 / self.k as f64
    }

    pub fn weights(&self, x: &[f64]) -> SmootherWeights {
        let mut weights = vec![0.0; self.x.rows()];
        let w = 1.0 / self.k as f64;
        for i in self.neighbors(x) {
            weights[i] = w;
        }
        SmootherWeights { weights }
    }

    pub(crate) fn sparse_weights(&self, x: &[f64]) -> SparseWeights {
        let mut index: Vec<u32> = self.neighbors(x).into_iter().map(|i| i as u32).collect();
        index.sort_unstable();
        let weight = vec![1.0 / self.k as f64; index.len()];
        SparseWeights { index, weight }
    }
}

impl PartialEq for KnnModel {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.labels == other.labels && self.x == other.x
    }
}

/// Reference neighbour search by full sort; kept for cross-checking.
#[cfg(test)]
pub(crate) fn brute_force_neighbors(x: &FeatureMatrix, query: &[f64], k: usize) -> Vec<usize> {
    let mut all: Vec<(f64, usize)> = x.iter_rows().enumerate().map(|(i, r)| (sq_dist(r, query), i)).collect();
    all.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    all.into_iter().take(k).map(|(_, i)| i).collect()
}
