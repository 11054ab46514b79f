//! Statistic names accepted by `--stat` and `--stats`.
//!
//! `knn`, `kernel`, `rf` and `lda` are the global regression statistics.
//! Prefixes pick a variant: `split-` (sample-split regression), `acc-`
//! (accuracy: out-of-bag for `rf`, in-sample otherwise), `resub-` (in-sample
//! accuracy) and `cv-` (two-fold cross-validated accuracy). `mmd`, `energy`
//! and `hotelling` take no estimator.

use anyhow::{bail, Result};
use clap::Args;

use regtest::multitest::adaptive_k;
use regtest::regressors::{EstimatorConfig, ForestConfig, KernelKind};
use regtest::teststats::{StatKind, StatisticSpec};

#[derive(Debug, Clone, Args)]
pub struct EstimatorArgs {
    /// Neighbours for kNN [default: ceil(n^(2/(2+D)))]
    #[arg(long)]
    pub k: Option<usize>,
    /// Bandwidth for kernel regression (required with kernel)
    #[arg(long)]
    pub bandwidth: Option<f64>,
    #[arg(long, default_value = "gaussian")]
    pub kernel: KernelKind,
    /// Trees per forest
    #[arg(long)]
    pub trees: Option<usize>,
    /// Features tried per split [default: max(1, floor(D/3))]
    #[arg(long)]
    pub mtry: Option<usize>,
    /// Largest node left unsplit
    #[arg(long)]
    pub min_node: Option<usize>,
}

/// Estimator names used by a list of statistic names, for flag checks.
pub fn estimators_named<'a>(names: impl IntoIterator<Item = &'a str>) -> Result<Vec<&'static str>> {
    let mut out = Vec::new();
    for name in names {
        if let Some(e) = split_name(name)?.1 {
            out.push(e);
        }
    }
    Ok(out)
}

fn split_name(name: &str) -> Result<(StatKind, Option<&'static str>)> {
    let lower = name.trim().to_ascii_lowercase();
    let simple = match lower.as_str() {
        "mmd" => Some(StatKind::Mmd),
        "energy" => Some(StatKind::Energy),
        "hotelling" => Some(StatKind::Hotelling),
        _ => None,
    };
    if let Some(kind) = simple {
        return Ok((kind, None));
    }
    let (prefix, est) = match lower.split_once('-') {
        Some((p, e)) => (p, e),
        None => ("", lower.as_str()),
    };
    let est = match est {
        "knn" => "knn",
        "kernel" => "kernel",
        "rf" | "forest" => "rf",
        "lda" => "lda",
        _ => bail!("unknown statistic '{name}'"),
    };
    let kind = match (prefix, est) {
        ("", "lda") => StatKind::LdaReg,
        ("", _) => StatKind::GlobalReg,
        ("split", _) => StatKind::GlobalRegSplit,
        ("acc", "rf") => StatKind::AccuracyOob,
        ("acc" | "resub", _) => StatKind::AccuracyInSample,
        ("cv", _) => StatKind::AccuracyCrossVal,
        _ => bail!("unknown statistic '{name}'"),
    };
    Ok((kind, Some(est)))
}

impl EstimatorArgs {
    /// Reject tuning flags that no requested estimator uses, and a kernel
    /// estimator without a bandwidth.
    pub fn check(&self, estimators: &[&str]) -> std::result::Result<(), String> {
        let uses = |e: &str| estimators.contains(&e);
        if uses("kernel") && self.bandwidth.is_none() {
            return Err("the kernel estimator needs --bandwidth".into());
        }
        let unused = [
            ("--k", self.k.is_some(), "knn"),
            ("--bandwidth", self.bandwidth.is_some(), "kernel"),
            ("--trees", self.trees.is_some(), "rf"),
            ("--mtry", self.mtry.is_some(), "rf"),
            ("--min-node", self.min_node.is_some(), "rf"),
        ];
        for (flag, given, est) in unused {
            if given && !uses(est) {
                return Err(format!("{flag} applies only to the {est} estimator"));
            }
        }
        Ok(())
    }

    pub fn estimator(&self, name: &str, n: usize, dim: usize, seed: u64) -> Result<EstimatorConfig> {
        Ok(match name {
            "knn" => EstimatorConfig::Knn { k: self.k.unwrap_or_else(|| adaptive_k(n, dim)) },
            "kernel" => match self.bandwidth {
                Some(bandwidth) => EstimatorConfig::Kernel { bandwidth, kernel: self.kernel },
                None => bail!("the kernel estimator needs --bandwidth"),
            },
            "lda" => EstimatorConfig::Lda,
            "rf" => {
                let d = ForestConfig::default();
                EstimatorConfig::Forest(ForestConfig {
                    n_trees: self.trees.unwrap_or(d.n_trees),
                    mtry: self.mtry,
                    min_node: self.min_node.unwrap_or(d.min_node),
                    seed,
                    // Replicates already run in parallel.
                    workers: 1,
                    ..d
                })
            }
            other => bail!("unknown estimator '{other}'"),
        })
    }

    pub fn statistic(&self, name: &str, n: usize, dim: usize, seed: u64) -> Result<StatisticSpec> {
        let (kind, est) = split_name(name)?;
        let est = est.filter(|_| kind.needs_estimator());
        let estimator = est.map(|e| self.estimator(e, n, dim, seed)).transpose()?;
        Ok(StatisticSpec::new(kind, estimator)?.with_split_seed(seed))
    }
}
