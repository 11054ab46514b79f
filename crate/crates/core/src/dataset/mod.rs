//! Labelled two-sample data.
//!
//! A [`LabeledDataset`] pairs an `n x D` feature matrix with binary labels.
//! Features are held behind an [`Arc`] because permutation tests relabel the
//! same features hundreds of times; relabelling never copies the matrix.

mod csv_io;
mod scenario;

use std::sync::Arc;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

pub use csv_io::{load_csv, load_points_csv, read_csv, write_csv, write_points_csv};
pub use scenario::{
    edge_image, edge_image_grid, generate, generate_edge_images, generate_mixture_2d,
    mixture_component_means, Family, ScenarioSpec, EDGE_GRID, MIXTURE_SD,
};

/// How the labels were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scheme {
    /// Labels drawn jointly with the features; group sizes are random.
    Iid,
    /// Group sizes fixed in advance (case-control sampling).
    Separate,
}

/// Dense row-major matrix of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl FeatureMatrix {
    pub fn new(values: Vec<f64>, rows: usize, cols: usize) -> Result<Self> {
        if cols == 0 {
            return Err(Error::InvalidParameter("feature dimension must be at least 1".into()));
        }
        if values.len() != rows * cols {
            return Err(Error::InvalidParameter(format!(
                "expected {} values for a {rows}x{cols} matrix, got {}",
                rows * cols,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Ingestion {
                row: pos / cols,
                column: format!("feature {}", pos % cols),
                reason: "non-finite value".into(),
            });
        }
        Ok(Self { values, rows, cols })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::InvalidParameter(format!(
                "row {i} has {} entries, expected {cols}",
                rows[i].len()
            )));
        }
        Self::new(rows.concat(), rows.len(), cols)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.cols)
    }

    /// Matrix restricted to the given rows, in the given order.
    pub fn select_rows(&self, idx: &[usize]) -> Self {
        let mut values = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            values.extend_from_slice(self.row(i));
        }
        Self { values, rows: idx.len(), cols: self.cols }
    }

    /// Apply `f` to every row, producing a matrix with `out_cols` columns.
    pub fn map_rows(&self, out_cols: usize, mut f: impl FnMut(&[f64], &mut [f64])) -> Result<Self> {
        let mut values = vec![0.0; self.rows * out_cols];
        for (src, dst) in self.iter_rows().zip(values.chunks_exact_mut(out_cols)) {
            f(src, dst);
        }
        Self::new(values, self.rows, out_cols)
    }
}

/// Squared Euclidean distance.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Feature vectors with binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Arc<FeatureMatrix>,
    labels: Vec<u8>,
    scheme: Scheme,
}

impl LabeledDataset {
    pub fn new(features: FeatureMatrix, labels: Vec<u8>, scheme: Scheme) -> Result<Self> {
        Self::from_shared(Arc::new(features), labels, scheme)
    }

    pub fn from_shared(features: Arc<FeatureMatrix>, labels: Vec<u8>, scheme: Scheme) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::InvalidParameter(format!(
                "{} labels for {} feature rows",
                labels.len(),
                features.rows()
            )));
        }
        if labels.is_empty() {
            return Err(Error::InvalidParameter("dataset must contain at least one row".into()));
        }
        if let Some(i) = labels.iter().position(|&y| y > 1) {
            return Err(Error::Schema(format!("label at row {i} is {}, expected 0 or 1", labels[i])));
        }
        Ok(Self { features, labels, scheme })
    }

    /// Stack two groups: rows of `group0` get label 0, rows of `group1` label 1.
    pub fn from_groups(group0: &FeatureMatrix, group1: &FeatureMatrix) -> Result<Self> {
        if group0.cols() != group1.cols() {
            return Err(Error::InvalidParameter("groups differ in dimension".into()));
        }
        let mut values = group0.as_slice().to_vec();
        values.extend_from_slice(group1.as_slice());
        let x = FeatureMatrix::new(values, group0.rows() + group1.rows(), group0.cols())?;
        let mut labels = vec![0u8; group0.rows()];
        labels.resize(group0.rows() + group1.rows(), 1);
        Self::new(x, labels, Scheme::Separate)
    }

    #[inline]
    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn shared_features(&self) -> &Arc<FeatureMatrix> {
        &self.features
    }

    #[inline]
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    pub fn n1(&self) -> usize {
        count_ones(&self.labels)
    }

    pub fn n0(&self) -> usize {
        self.n() - self.n1()
    }

    /// Sample fraction of label 1.
    pub fn pi1(&self) -> f64 {
        self.n1() as f64 / self.n() as f64
    }

    /// Same features, new labels.
    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Self> {
        Self::from_shared(Arc::clone(&self.features), labels, self.scheme)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    /// Rows `idx` (in order) as a new dataset.
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self {
            features: Arc::new(self.features.select_rows(idx)),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            scheme: self.scheme,
        }
    }

    pub fn require_both_classes(&self) -> Result<()> {
        let (n0, n1) = (self.n0(), self.n1());
        if n0 == 0 || n1 == 0 {
            return Err(Error::MissingClass { n0, n1 });
        }
        Ok(())
    }

    /// Feature rows of group `label`.
    pub fn group(&self, label: u8) -> impl Iterator<Item = &[f64]> + '_ {
        self.features
            .iter_rows()
            .zip(&self.labels)
            .filter(move |(_, &y)| y == label)
            .map(|(x, _)| x)
    }
}

pub(crate) fn count_ones(labels: &[u8]) -> usize {
    labels.iter().map(|&y| usize::from(y)).sum()
}

/// Randomly reorder rows (features and labels jointly). This links separate
/// sampling to i.i.d. sampling: after shuffling, rows are exchangeable.
pub fn shuffle_for_iid(data: &LabeledDataset, seed: u64) -> LabeledDataset {
    let mut order: Vec<usize> = (0..data.n()).collect();
    order.shuffle(&mut rng::rng_from_seed(seed));
    data.subset(&order)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> LabeledDataset {
        let x = FeatureMatrix::from_rows(&[vec![0.0, 1.0], vec![2.0, 3.0], vec![4.0, 5.0]]).unwrap();
        LabeledDataset::new(x, vec![0, 1, 1], Scheme::Separate).unwrap()
    }

    #[test]
    fn counts() {
        let d = toy();
        assert_eq!((d.n(), d.dim(), d.n0(), d.n1()), (3, 2, 1, 2));
        assert!((d.pi1() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.group(1).count(), 2);
    }

    #[test]
    fn rejects_bad_labels_and_values() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        assert!(matches!(
            LabeledDataset::new(x, vec![0, 2], Scheme::Iid),
            Err(Error::Schema(_))
        ));
        assert!(matches!(
            FeatureMatrix::new(vec![0.0, f64::NAN], 2, 1),
            Err(Error::Ingestion { row: 1, .. })
        ));
        assert!(FeatureMatrix::new(vec![0.0, f64::INFINITY], 1, 2).is_err());
    }

    #[test]
    fn shuffle_single_row_is_identity() {
        let x = FeatureMatrix::from_rows(&[vec![3.0, 4.0]]).unwrap();
        let d = LabeledDataset::new(x, vec![1], Scheme::Separate).unwrap();
        assert_eq!(shuffle_for_iid(&d, 99), d);
    }

    #[test]
    fn shuffle_keeps_pairs_and_is_deterministic() {
        let d = toy();
        let a = shuffle_for_iid(&d, 5);
        assert_eq!(a, shuffle_for_iid(&d, 5));
        assert_eq!(a.n1(), d.n1());
        for (row, &y) in a.features().iter_rows().zip(a.labels()) {
            let orig = d.features().iter_rows().position(|r| r == row).unwrap();
            assert_eq!(d.labels()[orig], y);
        }
    }

    #[test]
    fn missing_class_is_reported() {
        let x = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0]]).unwrap();
        let d = LabeledDataset::new(x, vec![1, 1], Scheme::Iid).unwrap();
        assert!(matches!(d.require_both_classes(), Err(Error::MissingClass { n0: 0, n1: 2 })));
    }
}
