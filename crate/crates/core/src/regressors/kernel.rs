use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{SmootherWeights, SparseWeights};
use crate::dataset::{sq_dist, FeatureMatrix, LabeledDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `exp(-|u|^2 / 2)`
    Gaussian,
    /// `1{|u| <= 1}`
    Box,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(KernelKind::Gaussian),
            "box" | "uniform" => Ok(KernelKind::Box),
            other => Err(Error::InvalidParameter(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Nadaraya-Watson estimate with a scalar bandwidth shared by all coordinates.
#[derive(Debug, Clone)]
pub struct KernelModel {
    x: Arc<FeatureMatrix>,
    labels: Vec<u8>,
    bandwidth: f64,
    kind: KernelKind,
    pi1: f64,
}

pub fn fit_kernel(data: &LabeledDataset, bandwidth: f64, kind: KernelKind) -> Result<KernelModel> {
    if !(bandwidth.is_finite() && bandwidth > 0.0) {
        return Err(Error::InvalidParameter(format!("bandwidth {bandwidth} must be positive")));
    }
    Ok(KernelModel {
        x: Arc::clone(data.shared_features()),
        labels: data.labels().to_vec(),
        bandwidth,
        kind,
        pi1: data.pi1(),
    })
}

impl KernelModel {
    pub fn pi1(&self) -> f64 {
        self.pi1
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    /// Unnormalised kernel values. Gaussian values are scaled by the largest
    /// one, which leaves the ratio unchanged and keeps far query points from
    /// underflowing to an all-zero vector.
    fn raw_weights(&self, x: &[f64]) -> Vec<f64> {
        let d2: Vec<f64> = self.x.iter_rows().map(|r| sq_dist(r, x)).collect();
        match self.kind {
            KernelKind::Gaussian => {
                let h2 = self.bandwidth * self.bandwidth;
                let min = d2.iter().copied().fold(f64::INFINITY, f64::min);
                d2.iter().map(|&d| (-(d - min) / (2.0 * h2)).exp()).collect()
            }
            KernelKind::Box => {
                let h2 = self.bandwidth * self.bandwidth;
                d2.iter().map(|&d| if d <= h2 { 1.0 } else { 0.0 }).collect()
            }
        }
    }

    /// Prediction plus a flag that is set when the kernel mass at `x` is
    /// zero, in which case the prediction is 0 by convention.
    pub fn predict_flagged(&self, x: &[f64]) -> (f64, bool) {
        let raw = self.raw_weights(x);
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return (0.0, true);
        }
        let num: f64 = raw.iter().zip(&self.labels).filter(|(_, &y)| y == 1).map(|(w, _)| w).sum();
        ((num / total).clamp(0.0, 1.0), false)
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        self.predict_flagged(x).0
    }

    pub fn weights(&self, x: &[f64]) -> Result<SmootherWeights> {
        let mut raw = self.raw_weights(x);
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroDenominator);
        }
        raw.iter_mut().for_each(|w| *w /= total);
        Ok(SmootherWeights { weights: raw })
    }

    pub(crate) fn sparse_weights(&self, x: &[f64]) -> Result<SparseWeights> {
        Ok(SparseWeights::from_dense(&self.weights(x)?.weights))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Scheme;

    fn data(rows: &[Vec<f64>], labels: &[u8]) -> LabeledDataset {
        LabeledDataset::new(FeatureMatrix::from_rows(rows).unwrap(), labels.to_vec(), Scheme::Separate).unwrap()
    }

    #[test]
    fn box_kernel_equal_weights() {
        let d = data(&[vec![0.0], vec![0.5], vec![5.0]], &[1, 0, 1]);
        let m = fit_kernel(&d, 1.0, KernelKind::Box).unwrap();
        assert_eq!(m.predict_flagged(&[0.2]), (0.5, false));
    }

    #[test]
    fn huge_bandwidth_gives_pi1() {
        let d = data(&[vec![0.0, 1.0], vec![0.5, -2.0], vec![5.0, 3.0], vec![2.0, 2.0]], &[1, 0, 1, 1]);
        let diameter = 6.0f64.hypot(5.0);
        let m = fit_kernel(&d, 1e6 * diameter, KernelKind::Gaussian).unwrap();
        assert!((m.predict(&[1.0, 1.0]) - 0.75).abs() < 1e-6);
    }

    #[test]
    fn empty_box_is_flagged_zero() {
        let d = data(&[vec![0.0], vec![1.0]], &[1, 1]);
        let m = fit_kernel(&d, 0.5, KernelKind::Box).unwrap();
        assert_eq!(m.predict_flagged(&[10.0]), (0.0, true));
        assert!(matches!(m.weights(&[10.0]), Err(Error::ZeroDenominator)));
    }

    #[test]
    fn far_query_does_not_underflow() {
        let d = data(&[vec![0.0], vec![1.0]], &[0, 1]);
        let m = fit_kernel(&d, 0.01, KernelKind::Gaussian).unwrap();
        let (p, flagged) = m.predict_flagged(&[1e3]);
        assert!(!flagged);
        assert!((p - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bandwidth_validation() {
        let d = data(&[vec![0.0], vec![1.0]], &[0, 1]);
        assert!(fit_kernel(&d, -1.0, KernelKind::Box).is_err());
        assert!(fit_kernel(&d, f64::NAN, KernelKind::Gaussian).is_err());
    }
}
