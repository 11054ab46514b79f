//! Monte-Carlo power studies over synthetic scenarios.
//!
//! Repetition `r` at dimension `D` draws its dataset, permutations and
//! estimator randomness from seeds derived from the master seed, `D` and
//! `r`, so every cell is reproducible on its own and independent of the
//! worker count. Repetitions run in parallel; permutations within a
//! repetition run sequentially.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::dataset::{generate, Family, ScenarioSpec};
use crate::error::{Error, Result};
use crate::permutation::{global_tests, PermutationPlan};
use crate::regressors::EstimatorConfig;
use crate::teststats::StatisticSpec;
use crate::{par, rng};

pub const DEFAULT_REPS: usize = 300;
pub const DEFAULT_PERMUTATIONS: usize = 100;
pub const DEFAULT_ALPHA: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerStudy {
    pub family: Family,
    pub dims: Vec<usize>,
    pub n0: usize,
    pub n1: usize,
    pub statistics: Vec<StatisticSpec>,
    pub reps: usize,
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
    pub workers: usize,
}

impl PowerStudy {
    pub fn new(family: Family, dims: Vec<usize>, n0: usize, n1: usize, statistics: Vec<StatisticSpec>) -> Self {
        Self {
            family,
            dims,
            n0,
            n1,
            statistics,
            reps: DEFAULT_REPS,
            permutations: DEFAULT_PERMUTATIONS,
            alpha: DEFAULT_ALPHA,
            seed: 0,
            workers: 0,
        }
    }

    pub fn with_reps(mut self, reps: usize, permutations: usize) -> Self {
        self.reps = reps;
        self.permutations = permutations;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.reps == 0 || self.permutations == 0 {
            return Err(Error::InvalidParameter("repetitions and permutations must be positive".into()));
        }
        if self.dims.is_empty() || self.statistics.is_empty() {
            return Err(Error::InvalidParameter("need at least one dimension and one statistic".into()));
        }
        for &dim in &self.dims {
            ScenarioSpec::new(self.family, dim, self.n0, self.n1, 0).validate()?;
        }
        Ok(())
    }

    /// Dataset of repetition `rep` at dimension `dim`.
    pub fn dataset_spec(&self, dim: usize, rep: usize) -> ScenarioSpec {
        ScenarioSpec::new(self.family, dim, self.n0, self.n1, rng::child_seed(cell_seed(self.seed, dim), rep as u64))
    }

    pub fn run(&self) -> Result<SimulationReport> {
        self.validate()?;
        let mut cells = Vec::with_capacity(self.dims.len() * self.statistics.len());
        for &dim in &self.dims {
            let decisions = par::try_map_indexed(self.reps, self.workers, |rep| {
                self.repetition(dim, rep).map_err(|e| Error::Replicate { index: rep, source: Box::new(e) })
            })?;
            for (j, stat) in self.statistics.iter().enumerate() {
                let rejections = decisions.iter().filter(|d| d[j]).count();
                cells.push(PowerCell {
                    dim,
                    statistic: stat.label(),
                    rejections,
                    power: rejections as f64 / self.reps as f64,
                });
            }
        }
        Ok(SimulationReport {
            scenario: self.family.slug().to_string(),
            n0: self.n0,
            n1: self.n1,
            reps: self.reps,
            permutations: self.permutations,
            alpha: self.alpha,
            seed: self.seed,
            cells,
        })
    }

    fn repetition(&self, dim: usize, rep: usize) -> Result<Vec<bool>> {
        let spec = self.dataset_spec(dim, rep);
        let data = generate(&spec)?;
        let rep_seed = rng::tagged_seed(spec.seed, "repetition");
        let stats: Vec<StatisticSpec> = self.statistics.iter().map(|s| reseed(s, rep_seed)).collect::<Result<_>>()?;
        let plan = PermutationPlan::new(self.permutations, rng::tagged_seed(rep_seed, "permutations")).with_workers(1);
        Ok(global_tests(&data, &stats, &plan, self.alpha)?.into_iter().map(|o| o.reject).collect())
    }
}

fn cell_seed(seed: u64, dim: usize) -> u64 {
    rng::child_seed(rng::tagged_seed(seed, "power-study"), dim as u64)
}

/// Give forest and split randomness a fresh stream per repetition.
fn reseed(stat: &StatisticSpec, seed: u64) -> Result<StatisticSpec> {
    let estimator = stat.estimator().cloned().map(|e| match e {
        EstimatorConfig::Forest(mut f) => {
            f.seed = rng::tagged_seed(seed, "forest");
            f.workers = 1;
            EstimatorConfig::Forest(f)
        }
        other => other,
    });
    Ok(StatisticSpec::new(stat.kind(), estimator)?.with_split_seed(rng::tagged_seed(seed, "split")))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerCell {
    pub dim: usize,
    pub statistic: String,
    pub rejections: usize,
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: String,
    pub n0: usize,
    pub n1: usize,
    pub reps: usize,
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
    pub cells: Vec<PowerCell>,
}

impl SimulationReport {
    pub fn power(&self, dim: usize, statistic: &str) -> Option<f64> {
        self.cells.iter().find(|c| c.dim == dim && c.statistic == statistic).map(|c| c.power)
    }

    fn columns(&self) -> Vec<&str> {
        let mut cols: Vec<&str> = Vec::new();
        for c in &self.cells {
            if !cols.contains(&c.statistic.as_str()) {
                cols.push(&c.statistic);
            }
        }
        cols
    }

    /// One row per statistic, one column per dimension.
    pub fn write_table<W: Write>(&self, out: W) -> Result<()> {
        let mut dims: Vec<usize> = self.cells.iter().map(|c| c.dim).collect();
        dims.dedup();
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["statistic".to_string()];
        header.extend(dims.iter().map(|d| format!("D={d}")));
        w.write_record(&header)?;
        for stat in self.columns() {
            let mut row = vec![stat.to_string()];
            row.extend(dims.iter().map(|&d| self.power(d, stat).map_or(String::new(), |p| format!("{p:.3}"))));
            w.write_record(&row)?;
        }
        w.flush().map_err(|source| Error::Io { path: "<writer>".into(), source })?;
        Ok(())
    }
}
