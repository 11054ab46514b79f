//! Chi-squared calibration of the local statistic for linear smoothers.
//!
//! Under permutations `m(x) - pi1` is asymptotically normal with variance
//! `sigma^2 = n/(n-1) pi1 (1 - pi1) sum_i (w_i(x) - 1/n)^2`, so
//! `T_local(x) / sigma^2` is approximately chi-squared with one degree of
//! freedom.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::regressors::RegressionModel;
use crate::teststats::LocalStat;

/// Largest admissible `max_i |w_i - 1/n| / sqrt(sum_i (w_i - 1/n)^2)` before
/// the normal approximation is flagged as unreliable.
pub const VALIDITY_RATIO: f64 = 0.2;

fn check_pi(pi_hat: f64) -> Result<()> {
    if pi_hat > 0.0 && pi_hat < 1.0 {
        Ok(())
    } else {
        Err(Error::Degenerate(format!("label fraction {pi_hat} leaves no permutation variance")))
    }
}

fn centred_sum_sq(weights: &[f64]) -> f64 {
    let c = 1.0 / weights.len() as f64;
    weights.iter().map(|w| (w - c) * (w - c)).sum()
}

/// Permutation variance of `m(x) - pi1` for smoother weights `w_i(x)`.
pub fn sigma_sq_general(weights: &[f64], pi_hat: f64) -> Result<f64> {
    check_pi(pi_hat)?;
    let n = weights.len();
    if n < 2 {
        return Err(Error::InvalidParameter("need at least two weights".into()));
    }
    let n = n as f64;
    Ok(n / (n - 1.0) * pi_hat * (1.0 - pi_hat) * centred_sum_sq(weights))
}

/// Closed form for `k` nearest neighbours, `pi1 (1 - pi1) (n-1)(n-k) / (n^2 k)`,
/// valid for `2k < n`. It equals [`sigma_sq_general`] on kNN weights times
/// `(n-1)^2 / n^2`.
pub fn sigma_sq_knn(n: usize, k: usize, pi_hat: f64) -> Result<f64> {
    if k == 0 || 2 * k >= n {
        return Err(Error::Condition(format!("closed form needs 1 <= k and 2k < n (n = {n}, k = {k})")));
    }
    check_pi(pi_hat)?;
    let (n, k) = (n as f64, k as f64);
    Ok(pi_hat * (1.0 - pi_hat) * (n - 1.0) * (n - k) / (n * n * k))
}

/// `max_i |w_i - 1/n| / sqrt(sum_i (w_i - 1/n)^2)`.
pub fn weight_ratio(weights: &[f64]) -> f64 {
    let c = 1.0 / weights.len() as f64;
    let max = weights.iter().map(|w| (w - c).abs()).fold(0.0, f64::max);
    let norm = centred_sum_sq(weights).sqrt();
    if norm == 0.0 {
        f64::INFINITY
    } else {
        max / norm
    }
}

/// `P(chi^2_1 > t) = erfc(sqrt(t / 2))`.
pub fn chi2_upper_tail(t: f64) -> Result<f64> {
    if t.is_nan() || t < 0.0 {
        return Err(Error::InvalidParameter(format!("chi-squared tail needs t >= 0, got {t}")));
    }
    Ok(erfc((t / 2.0).sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticLocalResult {
    pub statistic: f64,
    pub sign: i8,
    pub sigma_sq: f64,
    pub normalized_stat: f64,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
    /// Weight concentration diagnostic; see [`VALIDITY_RATIO`].
    pub ratio: f64,
    pub valid: bool,
}

/// Local test at `x` calibrated by the chi-squared limit instead of permutations.
pub fn chi2_local_test(model: &RegressionModel, x: &[f64], alpha: f64) -> Result<AsymptoticLocalResult> {
    let w = model.weights(x)?.weights;
    let local = LocalStat::new(model.predict(x), model.pi1());
    let sigma_sq = sigma_sq_general(&w, model.pi1())?;
    if sigma_sq <= 0.0 {
        return Err(Error::Degenerate("uniform smoother weights give zero permutation variance".into()));
    }
    let normalized = local.value / sigma_sq;
    let p_value = chi2_upper_tail(normalized)?;
    let ratio = weight_ratio(&w);
    Ok(AsymptoticLocalResult {
        statistic: local.value,
        sign: local.sign,
        sigma_sq,
        normalized_stat: normalized,
        p_value,
        alpha,
        reject: p_value < alpha,
        ratio,
        valid: ratio <= VALIDITY_RATIO,
    })
}
