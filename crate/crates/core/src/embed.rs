//! Averaged diffusion map with locally scaled Gaussian weights, used to draw
//! high-dimensional test points in two coordinates.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::{sq_dist, FeatureMatrix};
use crate::error::{Error, Result};

pub const DEFAULT_NEIGHBOR: usize = 50;
pub const DEFAULT_COORDINATES: usize = 2;

/// Retained eigenvalues closer to 1 than this mean the graph is disconnected.
const UNIT_EIGEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    /// `n x m` coordinates `lambda_i / (1 - lambda_i) * psi_i(x)`.
    pub coordinates: FeatureMatrix,
    /// The `m` leading non-trivial eigenvalues of the transition matrix.
    pub eigenvalues: Vec<f64>,
    pub neighbor_k: usize,
}

/// `sigma_i`: distance from point `i` to its `k`-th nearest other point.
pub fn local_scales(points: &FeatureMatrix, k: usize) -> Result<Vec<f64>> {
    let n = points.rows();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!("neighbour index k = {k} must lie in [1, {}]", n.saturating_sub(1))));
    }
    let mut d = Vec::with_capacity(n - 1);
    (0..n)
        .map(|i| {
            d.clear();
            d.extend((0..n).filter(|&j| j != i).map(|j| sq_dist(points.row(i), points.row(j))));
            let (_, &mut kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
            let sigma = kth.sqrt();
            if sigma > 0.0 {
                Ok(sigma)
            } else {
                Err(Error::Degenerate(format!("point {i} has {k} duplicates; its local scale is zero")))
            }
        })
        .collect()
}

/// `w_ij = exp(-|x_i - x_j|^2 / (sigma_i sigma_j))`.
pub fn local_scaling_weights(points: &FeatureMatrix, k: usize) -> Result<DMatrix<f64>> {
    let sigma = local_scales(points, k)?;
    let n = points.rows();
    let mut w = DMatrix::identity(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = (-sq_dist(points.row(i), points.row(j)) / (sigma[i] * sigma[j])).exp();
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Ok(w)
}

/// Row-normalised transition matrix `P = D^{-1} W`.
pub fn markov_matrix(weights: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut p = weights.clone();
    for (i, mut row) in p.row_iter_mut().enumerate() {
        let s: f64 = row.sum();
        if s.is_nan() || s <= 0.0 {
            return Err(Error::Degenerate(format!("row {i} of the weight matrix sums to {s}")));
        }
        row /= s;
    }
    Ok(p)
}

/// Embed `points` into `m` averaged diffusion coordinates. `k` larger than
/// `n - 1` is reduced to `n - 1`.
pub fn averaged_diffusion_map(points: &FeatureMatrix, k: usize, m: usize) -> Result<EmbeddingResult> {
    let n = points.rows();
    if m == 0 || n < m + 1 {
        return Err(Error::InvalidParameter(format!("need at least m + 1 = {} points, got {n}", m + 1)));
    }
    let k = if k > n - 1 {
        log::warn!("neighbour index {k} exceeds n - 1 = {}; using n - 1", n - 1);
        n - 1
    } else {
        k
    };
    let w = local_scaling_weights(points, k)?;
    let deg: Vec<f64> = w.row_iter().map(|r| r.sum()).collect();
    // P = D^{-1} W is similar to the symmetric D^{-1/2} W D^{-1/2}; solve that
    // and map eigenvectors back with D^{-1/2}.
    let inv_sqrt: Vec<f64> = deg.iter().map(|d| 1.0 / d.sqrt()).collect();
    let s = DMatrix::from_fn(n, n, |i, j| w[(i, j)] * inv_sqrt[i] * inv_sqrt[j]);
    let eig = SymmetricEigen::try_new(s, f64::EPSILON, 0)
        .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let mut coords = vec![0.0; n * m];
    let mut eigenvalues = Vec::with_capacity(m);
    // order[0] is the stationary pair with eigenvalue 1.
    for (c, &idx) in order[1..=m].iter().enumerate() {
        let lambda = eig.eigenvalues[idx];
        if lambda >= 1.0 - UNIT_EIGEN_TOL {
            return Err(Error::Eigen(format!(
                "eigenvalue {lambda} is numerically 1; the neighbourhood graph is disconnected"
            )));
        }
        if lambda <= 0.0 {
            log::warn!("diffusion eigenvalue {} is {lambda}; its coordinate is reflected", c + 1);
        }
        let mut psi: Vec<f64> = (0..n).map(|i| eig.eigenvectors[(i, idx)] * inv_sqrt[i]).collect();
        let norm = psi.iter().map(|v| v * v).sum::<f64>().sqrt();
        let pivot = psi.iter().copied().fold(0.0f64, |a, v| if v.abs() > a.abs() { v } else { a });
        let scale = pivot.signum() / norm * lambda / (1.0 - lambda);
        psi.iter_mut().for_each(|v| *v *= scale);
        for (i, v) in psi.into_iter().enumerate() {
            coords[i * m + c] = v;
        }
        eigenvalues.push(lambda);
    }
    Ok(EmbeddingResult { coordinates: FeatureMatrix::new(coords, n, m)?, eigenvalues, neighbor_k: k })
}
