//! Synthetic scenarios used in the simulation studies.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, LabeledDataset};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

/// Scenario families. Group 0 is always the reference distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// N(0, I) vs N(0.2 * 1, I).
    DenseNormalLoc,
    /// C(0, I) vs C(0.3 * 1, I).
    DenseCauchyLoc,
    /// N(0, I) vs N(0, 0.6 I).
    DenseNormalScale,
    /// C(0, I) vs C(0, 0.5 I).
    DenseCauchyScale,
    /// N(0, I) vs N((2, 0, ..., 0), I).
    SparseNormalLoc,
    /// C(0, I) vs C((3, 0, ..., 0), I).
    SparseCauchyLoc,
    /// N(0, I) vs N(0, diag(0.01, 1, ..., 1)).
    SparseNormalScale,
    /// C(0, I) vs C(0, diag(0.01, 1, ..., 1)).
    SparseCauchyScale,
    /// N(0, I) vs N(0, I): the normal-means null used for LDA/Hotelling checks
    /// and for null calibration runs.
    LdaNormalMeans,
    /// N(0, I) vs N(0.2 * 1, 1.2 I).
    MixedLocScale,
    /// Two 8-component normal mixtures in the plane.
    NormalMixture2D,
    /// 16x16 binary edge images.
    EdgeImages,
}

impl Family {
    pub const ALL: [Family; 12] = [
        Family::DenseNormalLoc,
        Family::DenseCauchyLoc,
        Family::DenseNormalScale,
        Family::DenseCauchyScale,
        Family::SparseNormalLoc,
        Family::SparseCauchyLoc,
        Family::SparseNormalScale,
        Family::SparseCauchyScale,
        Family::LdaNormalMeans,
        Family::MixedLocScale,
        Family::NormalMixture2D,
        Family::EdgeImages,
    ];

    pub fn slug(self) -> &'static str {
        match self {
            Family::DenseNormalLoc => "dense-normal-loc",
            Family::DenseCauchyLoc => "dense-cauchy-loc",
            Family::DenseNormalScale => "dense-normal-scale",
            Family::DenseCauchyScale => "dense-cauchy-scale",
            Family::SparseNormalLoc => "sparse-normal-loc",
            Family::SparseCauchyLoc => "sparse-cauchy-loc",
            Family::SparseNormalScale => "sparse-normal-scale",
            Family::SparseCauchyScale => "sparse-cauchy-scale",
            Family::LdaNormalMeans => "lda-normal-means",
            Family::MixedLocScale => "mixed-loc-scale",
            Family::NormalMixture2D => "normal-mixture-2d",
            Family::EdgeImages => "edge-images",
        }
    }

    /// Fixed dimension, if the family has one.
    pub fn fixed_dim(self) -> Option<usize> {
        match self {
            Family::NormalMixture2D => Some(2),
            Family::EdgeImages => Some(EDGE_GRID.len() * EDGE_GRID.len()),
            _ => None,
        }
    }

    /// Location and diagonal covariance of group 1 for the location/scale
    /// families; group 0 is always centred at 0 with identity scale.
    fn group1_params(self, dim: usize) -> Option<(Vec<f64>, Vec<f64>, bool)> {
        let ones = |v: f64| vec![v; dim];
        let first = |v: f64, rest: f64| {
            let mut out = vec![rest; dim];
            out[0] = v;
            out
        };
        let (mu, var, cauchy) = match self {
            Family::DenseNormalLoc => (ones(0.2), ones(1.0), false),
            Family::DenseCauchyLoc => (ones(0.3), ones(1.0), true),
            Family::DenseNormalScale => (ones(0.0), ones(0.6), false),
            Family::DenseCauchyScale => (ones(0.0), ones(0.5), true),
            Family::SparseNormalLoc => (first(2.0, 0.0), ones(1.0), false),
            Family::SparseCauchyLoc => (first(3.0, 0.0), ones(1.0), true),
            Family::SparseNormalScale => (ones(0.0), first(0.01, 1.0), false),
            Family::SparseCauchyScale => (ones(0.0), first(0.01, 1.0), true),
            Family::LdaNormalMeans => (ones(0.0), ones(1.0), false),
            Family::MixedLocScale => (ones(0.2), ones(1.2), false),
            Family::NormalMixture2D | Family::EdgeImages => return None,
        };
        Some((mu, var, cauchy))
    }

    /// Location vector and covariance diagonal of group `label`.
    pub fn group_params(self, dim: usize, label: u8) -> Option<(Vec<f64>, Vec<f64>)> {
        let (mu, var, _) = self.group1_params(dim)?;
        if label == 0 {
            Some((vec![0.0; dim], vec![1.0; dim]))
        } else {
            Some((mu, var))
        }
    }

    pub fn is_cauchy(self) -> bool {
        matches!(
            self,
            Family::DenseCauchyLoc | Family::DenseCauchyScale | Family::SparseCauchyLoc | Family::SparseCauchyScale
        )
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.slug())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm: String = s.chars().filter(|c| c.is_ascii_alphanumeric()).collect::<String>().to_ascii_lowercase();
        Family::ALL
            .into_iter()
            .find(|f| {
                let slug: String = f.slug().chars().filter(|c| c.is_ascii_alphanumeric()).collect();
                slug == norm || format!("{f:?}").to_ascii_lowercase() == norm
            })
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// A fully specified synthetic dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub family: Family,
    pub dim: usize,
    pub n0: usize,
    pub n1: usize,
    #[serde(default)]
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(family: Family, dim: usize, n0: usize, n1: usize, seed: u64) -> Self {
        Self { family, dim, n0, n1, seed }
    }

    /// Parse the `key = value` text form, e.g.
    ///
    /// ```text
    /// family = "DenseNormalLoc"
    /// dim = 5
    /// n0 = 20
    /// n1 = 20
    /// seed = 7
    /// ```
    pub fn from_config_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            family: String,
            dim: Option<usize>,
            n0: usize,
            n1: usize,
            #[serde(default)]
            seed: u64,
        }
        let raw: Raw = toml::from_str(text).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let family: Family = raw.family.parse()?;
        let dim = match (raw.dim, family.fixed_dim()) {
            (Some(d), _) => d,
            (None, Some(d)) => d,
            (None, None) => return Err(Error::InvalidParameter("`dim` is required for this family".into())),
        };
        let spec = Self::new(family, dim, raw.n0, raw.n1, raw.seed);
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_config_string(&self) -> String {
        toml::to_string(self).expect("scenario specs always serialize")
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if self.n0 == 0 || self.n1 == 0 {
            return Err(Error::InvalidParameter("both group sizes must be at least 1".into()));
        }
        if let Some(d) = self.family.fixed_dim() {
            if d != self.dim {
                return Err(Error::InvalidParameter(format!(
                    "family {} has fixed dimension {d}, got {}",
                    self.family, self.dim
                )));
            }
        }
        Ok(())
    }
}

/// Draw a dataset: `n0` rows from group 0 followed by `n1` rows from group 1.
pub fn generate(spec: &ScenarioSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    match spec.family {
        Family::NormalMixture2D => generate_mixture_2d(spec.n0, spec.n1, spec.seed),
        Family::EdgeImages => generate_edge_images(spec.n0, spec.n1, spec.seed),
        family => {
            let mut rng = rng::rng_from_seed(spec.seed);
            let mut values = Vec::with_capacity((spec.n0 + spec.n1) * spec.dim);
            for (label, count) in [(0u8, spec.n0), (1u8, spec.n1)] {
                let (mu, var) = family.group_params(spec.dim, label).expect("location/scale family");
                let scale: Vec<f64> = var.iter().map(|v| v.sqrt()).collect();
                for _ in 0..count {
                    draw_elliptical(&mut rng, &mu, &scale, family.is_cauchy(), &mut values);
                }
            }
            let x = FeatureMatrix::new(values, spec.n0 + spec.n1, spec.dim)?;
            labelled(x, spec.n0, spec.n1)
        }
    }
}

fn labelled(x: FeatureMatrix, n0: usize, n1: usize) -> Result<LabeledDataset> {
    let mut labels = vec![0u8; n0];
    labels.resize(n0 + n1, 1);
    LabeledDataset::new(x, labels, super::Scheme::Separate)
}

/// Normal: mu + scale * z. Cauchy (multivariate t with one degree of
/// freedom): mu + scale * z / |w| with w an independent standard normal.
fn draw_elliptical(rng: &mut Rng, mu: &[f64], scale: &[f64], cauchy: bool, out: &mut Vec<f64>) {
    let divisor = if cauchy {
        let w: f64 = rng.sample(StandardNormal);
        w.abs()
    } else {
        1.0
    };
    for (m, s) in mu.iter().zip(scale) {
        let z: f64 = rng.sample(StandardNormal);
        out.push(m + s * z / divisor);
    }
}

/// Standard deviation of each mixture component.
pub const MIXTURE_SD: f64 = 0.3;

const MIXTURE0: [[f64; 2]; 8] = [
    [-3.0, -3.0],
    [-3.0, 1.0],
    [-1.0, -1.0],
    [-1.0, 3.0],
    [1.0, -3.0],
    [1.0, 1.0],
    [3.0, -1.0],
    [3.0, 3.0],
];

const MIXTURE1: [[f64; 2]; 8] = [
    [-3.0, -1.0],
    [-3.0, 3.0],
    [-1.0, -3.0],
    [-1.0, 1.0],
    [1.0, -1.0],
    [1.0, 3.0],
    [3.0, -3.0],
    [3.0, 1.0],
];

/// Component means of the group-`label` mixture.
pub fn mixture_component_means(label: u8) -> &'static [[f64; 2]; 8] {
    if label == 0 {
        &MIXTURE0
    } else {
        &MIXTURE1
    }
}

/// Equal-weight 8-component normal mixtures with covariance 0.3^2 I.
pub fn generate_mixture_2d(n0: usize, n1: usize, seed: u64) -> Result<LabeledDataset> {
    if n0 == 0 || n1 == 0 {
        return Err(Error::InvalidParameter("both group sizes must be at least 1".into()));
    }
    let mut rng = rng::rng_from_seed(seed);
    let mut values = Vec::with_capacity(2 * (n0 + n1));
    for (label, count) in [(0u8, n0), (1u8, n1)] {
        let means = mixture_component_means(label);
        for _ in 0..count {
            let c = rng.gen_range(0..means.len());
            for m in means[c] {
                let z: f64 = rng.sample(StandardNormal);
                values.push(m + MIXTURE_SD * z);
            }
        }
    }
    labelled(FeatureMatrix::new(values, n0 + n1, 2)?, n0, n1)
}

/// Pixel coordinates of the 16x16 edge-image grid: 16 evenly spaced values
/// from -30 to 30.
pub const EDGE_GRID: [f64; 16] = [
    -30.0, -26.0, -22.0, -18.0, -14.0, -10.0, -6.0, -2.0, 2.0, 6.0, 10.0, 14.0, 18.0, 22.0, 26.0, 30.0,
];

/// Binary image `I(x cos(theta) + y sin(theta) - rho > 0)`. Pixel `(r, c)`
/// sits at `x = EDGE_GRID[c]`, `y = EDGE_GRID[r]` and is stored at `r * 16 + c`.
pub fn edge_image(theta: f64, rho: f64) -> Vec<f64> {
    let (s, c) = theta.sin_cos();
    let mut out = Vec::with_capacity(EDGE_GRID.len() * EDGE_GRID.len());
    for &y in &EDGE_GRID {
        for &x in &EDGE_GRID {
            out.push(if x * c + y * s - rho > 0.0 { 1.0 } else { 0.0 });
        }
    }
    out
}

/// Draw `(theta, rho)` from the two-box mixture: with probability
/// `upper_weight` uniform on `[0, pi] x [0, 5]`, otherwise uniform on
/// `[-pi, 0] x [-5, 0]`.
fn draw_edge_params(rng: &mut Rng, upper_weight: f64) -> (f64, f64) {
    if rng.gen::<f64>() < upper_weight {
        (rng.gen_range(0.0..=PI), rng.gen_range(0.0..=5.0))
    } else {
        (rng.gen_range(-PI..=0.0), rng.gen_range(-5.0..=0.0))
    }
}

/// Edge images: group 0 puts weight 1/10 on the upper box, group 1 puts 9/10.
pub fn generate_edge_images(n0: usize, n1: usize, seed: u64) -> Result<LabeledDataset> {
    if n0 == 0 || n1 == 0 {
        return Err(Error::InvalidParameter("both group sizes must be at least 1".into()));
    }
    let mut rng = rng::rng_from_seed(seed);
    let dim = EDGE_GRID.len() * EDGE_GRID.len();
    let mut values = Vec::with_capacity(dim * (n0 + n1));
    for (weight, count) in [(0.1, n0), (0.9, n1)] {
        for _ in 0..count {
            let (theta, rho) = draw_edge_params(&mut rng, weight);
            values.extend(edge_image(theta, rho));
        }
    }
    labelled(FeatureMatrix::new(values, n0 + n1, dim)?, n0, n1)
}

/// Images at a uniform `n_theta x n_rho` lattice over `[-pi, pi] x [-5, 5]`,
/// with the generating parameters of each row.
pub fn edge_image_grid(n_theta: usize, n_rho: usize) -> Result<(FeatureMatrix, Vec<(f64, f64)>)> {
    if n_theta < 2 || n_rho < 2 {
        return Err(Error::InvalidParameter("edge-image grid needs at least 2 points per axis".into()));
    }
    let mut params = Vec::with_capacity(n_theta * n_rho);
    let mut values = Vec::with_capacity(n_theta * n_rho * 256);
    for i in 0..n_theta {
        let theta = -PI + 2.0 * PI * i as f64 / (n_theta - 1) as f64;
        for j in 0..n_rho {
            let rho = -5.0 + 10.0 * j as f64 / (n_rho - 1) as f64;
            params.push((theta, rho));
            values.extend(edge_image(theta, rho));
        }
    }
    Ok((FeatureMatrix::new(values, params.len(), 256)?, params))
}
