use nalgebra::{DMatrix, DVector};

use crate::dataset::LabeledDataset;
use crate::error::{Error, Result};

/// Fisher's LDA plug-in estimate of `m(x)` with the covariance of the
/// combined sample (divisor `n`, centred at the overall mean).
#[derive(Debug, Clone)]
pub struct LdaModel {
    mu0: DVector<f64>,
    mu1: DVector<f64>,
    s_inv: DMatrix<f64>,
    pi1: f64,
}

pub(crate) fn group_means(data: &LabeledDataset) -> (DVector<f64>, DVector<f64>) {
    let d = data.dim();
    let mut sums = [DVector::zeros(d), DVector::zeros(d)];
    for (x, &y) in data.features().iter_rows().zip(data.labels()) {
        let s = &mut sums[usize::from(y)];
        for (acc, v) in s.iter_mut().zip(x) {
            *acc += v;
        }
    }
    let [s0, s1] = sums;
    (s0 / data.n0() as f64, s1 / data.n1() as f64)
}

/// Inverse of a symmetric positive definite matrix, refusing matrices that
/// are numerically singular.
pub(crate) fn spd_inverse(m: DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let scale = m.diagonal().iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::SingularCovariance(what));
    }
    let chol = m.cholesky().ok_or(Error::SingularCovariance(what))?;
    let l = chol.l_dirty();
    let min_pivot = (0..l.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
    if min_pivot <= scale * 1e-12 {
        return Err(Error::SingularCovariance(what));
    }
    Ok(chol.inverse())
}

pub fn fit_lda(data: &LabeledDataset) -> Result<LdaModel> {
    data.require_both_classes()?;
    let n = data.n() as f64;
    let d = data.dim();
    let (mu0, mu1) = group_means(data);
    let mut mean = DVector::zeros(d);
    for x in data.features().iter_rows() {
        for (acc, v) in mean.iter_mut().zip(x) {
            *acc += v;
        }
    }
    mean /= n;
    let mut s = DMatrix::zeros(d, d);
    let mut centred = DVector::zeros(d);
    for x in data.features().iter_rows() {
        for j in 0..d {
            centred[j] = x[j] - mean[j];
        }
        s.ger(1.0, &centred, &centred, 1.0);
    }
    s /= n;
    let s_inv = spd_inverse(s, "LDA combined covariance")?;
    Ok(LdaModel { mu0, mu1, s_inv, pi1: data.pi1() })
}

impl LdaModel {
    fn quad(&self, x: &[f64], mu: &DVector<f64>) -> f64 {
        let diff = DVector::from_iterator(mu.len(), x.iter().zip(mu.iter()).map(|(a, b)| a - b));
        (diff.transpose() * &self.s_inv * &diff)[(0, 0)]
    }

    /// `pi1 e^{-q1/2} / (pi0 e^{-q0/2} + pi1 e^{-q1/2})`, evaluated as a
    /// logistic function of the log-odds.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let q0 = self.quad(x, &self.mu0);
        let q1 = self.quad(x, &self.mu1);
        let log_odds = (self.pi1 / (1.0 - self.pi1)).ln() - 0.5 * (q1 - q0);
        if log_odds >= 0.0 {
            1.0 / (1.0 + (-log_odds).exp())
        } else {
            let e = log_odds.exp();
            e / (1.0 + e)
        }
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }
}
