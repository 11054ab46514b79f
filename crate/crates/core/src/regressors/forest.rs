//! Bagged CART regression trees on the 0/1 response.
//!
//! Defaults follow the usual regression-forest settings: 500 trees,
//! `mtry = max(1, floor(D / 3))`, terminal nodes of at most 5 samples and a
//! bootstrap sample of size `n` drawn with replacement for every tree.
//! Splits maximise the reduction in squared error; candidate thresholds are
//! midpoints between consecutive distinct feature values.
//!
//! Column orderings are computed once per feature matrix and shared by every
//! fit through [`ForestTrainer`], which is what a permutation test needs: the
//! features stay fixed while the labels are relabelled hundreds of times.

use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dataset::{count_ones, FeatureMatrix, LabeledDataset};
use crate::error::{Error, Result};
use crate::{par, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per split; `None` means `max(1, floor(D / 3))`.
    pub mtry: Option<usize>,
    /// Nodes with at most this many (bootstrap-weighted) samples are leaves.
    pub min_node: usize,
    /// Grow each tree on a bootstrap sample (otherwise on the full sample).
    pub bootstrap: bool,
    pub seed: u64,
    /// Worker threads for tree growth; `0` means automatic.
    pub workers: usize,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self { n_trees: 500, mtry: None, min_node: 5, bootstrap: true, seed: 0, workers: 0 }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, dim: usize) -> usize {
        self.mtry.unwrap_or((dim / 3).max(1))
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::InvalidParameter("n_trees must be at least 1".into()));
        }
        let mtry = self.resolved_mtry(dim);
        if mtry == 0 || mtry > dim {
            return Err(Error::InvalidParameter(format!("mtry = {mtry} must lie in [1, {dim}]")));
        }
        if self.min_node == 0 {
            return Err(Error::InvalidParameter("min_node must be at least 1".into()));
        }
        Ok(())
    }
}

const LEAF: u32 = u32::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Node {
    feature: u32,
    left: u32,
    right: u32,
    threshold: f64,
    value: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    #[inline]
    fn predict(&self, x: &[f64]) -> f64 {
        let mut node = &self.nodes[0];
        while node.feature != LEAF {
            let next = if x[node.feature as usize] <= node.threshold { node.left } else { node.right };
            node = &self.nodes[next as usize];
        }
        node.value
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            let n = &nodes[i];
            if n.feature == LEAF {
                1
            } else {
                1 + walk(nodes, n.left as usize).max(walk(nodes, n.right as usize))
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Shared, label-independent state for fitting forests on one feature matrix.
#[derive(Debug, Clone)]
pub struct ForestTrainer {
    x: Arc<FeatureMatrix>,
    columns: Arc<Columns>,
    cfg: ForestConfig,
}

/// Column-major copy of the features with each column's sort order, so that
/// split searches read contiguous memory.
#[derive(Debug)]
struct Columns {
    n: usize,
    /// `values[f * n + i]` is feature `f` of row `i`.
    values: Vec<f64>,
    /// Rows of column `f` in ascending order of value, and those values.
    order: Vec<u32>,
    sorted: Vec<f64>,
}

impl Columns {
    fn new(x: &FeatureMatrix) -> Self {
        let (n, dim) = (x.rows(), x.cols());
        let mut values = Vec::with_capacity(n * dim);
        let mut order = Vec::with_capacity(n * dim);
        let mut sorted = Vec::with_capacity(n * dim);
        for f in 0..dim {
            let col: Vec<f64> = (0..n).map(|i| x.get(i, f)).collect();
            let mut idx: Vec<u32> = (0..n as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
            sorted.extend(idx.iter().map(|&i| col[i as usize]));
            order.extend(idx);
            values.extend(col);
        }
        Self { n, values, order, sorted }
    }

    #[inline]
    fn column(&self, f: usize) -> &[f64] {
        &self.values[f * self.n..(f + 1) * self.n]
    }
}

impl ForestTrainer {
    pub fn new(x: Arc<FeatureMatrix>, cfg: ForestConfig) -> Result<Self> {
        cfg.validate(x.cols())?;
        // Split gains are exact integer fractions; keep n^3 within u64.
        if x.rows() > 2_000_000 {
            return Err(Error::InvalidParameter("too many rows for a forest".into()));
        }
        let columns = Arc::new(Columns::new(&x));
        Ok(Self { x, columns, cfg })
    }

    /// True when both trainers would grow identical forests for the same labels.
    pub(crate) fn same_fits(&self, other: &ForestTrainer) -> bool {
        Arc::ptr_eq(&self.x, &other.x) && self.cfg == other.cfg
    }

    pub fn config(&self) -> &ForestConfig {
        &self.cfg
    }

    /// Fit on `labels` with the configured seed.
    pub fn fit(&self, labels: &[u8]) -> Result<ForestModel> {
        self.fit_with_seed(labels, self.cfg.seed)
    }

    pub fn fit_with_seed(&self, labels: &[u8], seed: u64) -> Result<ForestModel> {
        let n = self.x.rows();
        if labels.len() != n {
            return Err(Error::InvalidParameter(format!("{} labels for {n} rows", labels.len())));
        }
        if n == 0 {
            return Err(Error::InvalidParameter("cannot fit a forest on zero rows".into()));
        }
        let n_trees = self.cfg.n_trees;
        let workers = par::resolve_workers(self.cfg.workers);
        let chunks = par::chunk_ranges(n_trees, workers);
        let grown: Vec<Vec<(Tree, Vec<u32>)>> = par::map_indexed(chunks.len(), workers, |c| {
            let mut scratch = Scratch::new(n, self.x.cols());
            chunks[c]
                .clone()
                .map(|t| {
                    let mut rng = rng::child_rng(seed, t as u64);
                    let tree = self.grow(labels, &mut rng, &mut scratch);
                    (tree, scratch.counts.clone())
                })
                .collect()
        });
        let (trees, inbag): (Vec<Tree>, Vec<Vec<u32>>) = grown.into_iter().flatten().unzip();

        // Per-sample sums run over trees in index order, so the result does
        // not depend on how trees were distributed over workers.
        let preds: Vec<(f64, Option<f64>)> = par::map_indexed(n, workers, |i| {
            let x = self.x.row(i);
            let mut total = 0.0;
            let mut oob = 0.0;
            let mut oob_count = 0usize;
            for (tree, counts) in trees.iter().zip(&inbag) {
                let v = tree.predict(x);
                total += v;
                if counts[i] == 0 {
                    oob += v;
                    oob_count += 1;
                }
            }
            (total / n_trees as f64, (oob_count > 0).then(|| oob / oob_count as f64))
        });
        let (train_pred, oob_pred) = preds.into_iter().unzip();
        Ok(ForestModel { trees, train_pred, oob_pred, pi1: count_ones(labels) as f64 / n as f64 })
    }

    fn grow(&self, labels: &[u8], rng: &mut rng::Rng, s: &mut Scratch) -> Tree {
        let n = self.x.rows();
        let dim = self.x.cols();
        let mtry = self.cfg.resolved_mtry(dim);
        let min_node = self.cfg.min_node as u64;

        s.counts.iter_mut().for_each(|c| *c = 0);
        if self.cfg.bootstrap {
            for _ in 0..n {
                s.counts[rng.gen_range(0..n)] += 1;
            }
        } else {
            s.counts.iter_mut().for_each(|c| *c = 1);
        }
        // Feature sampling must not depend on trees grown earlier with this scratch.
        s.features.iter_mut().enumerate().for_each(|(j, f)| *f = j);
        s.members.clear();
        s.members.extend((0..n as u32).filter(|&i| s.counts[i as usize] > 0));

        let mut nodes = vec![Node { feature: LEAF, left: 0, right: 0, threshold: 0.0, value: 0.0 }];
        let mut stack = vec![(0usize, 0usize, s.members.len())];
        while let Some((id, start, end)) = stack.pop() {
            let (w, ones) = s.members[start..end].iter().fold((0u64, 0u64), |(w, o), &i| {
                let c = u64::from(s.counts[i as usize]);
                (w + c, o + c * u64::from(labels[i as usize]))
            });
            nodes[id].value = ones as f64 / w as f64;
            if w <= min_node || ones == 0 || ones == w {
                continue;
            }
            let Some((feature, threshold)) = self.best_split(labels, start, end, w, ones, mtry, rng, s) else {
                continue;
            };
            // Partition members: rows going left first.
            let col = self.columns.column(feature);
            let mut mid = start;
            for j in start..end {
                let i = s.members[j] as usize;
                if col[i] <= threshold {
                    s.members.swap(mid, j);
                    mid += 1;
                }
            }
            debug_assert!(mid > start && mid < end);
            let left = nodes.len();
            let leaf = Node { feature: LEAF, left: 0, right: 0, threshold: 0.0, value: 0.0 };
            nodes.push(leaf);
            nodes.push(leaf);
            nodes[id] = Node { feature: feature as u32, left: left as u32, right: left as u32 + 1, threshold, value: nodes[id].value };
            stack.push((left + 1, mid, end));
            stack.push((left, start, mid));
        }
        Tree { nodes }
    }

    #[allow(clippy::too_many_arguments)]
    fn best_split(
        &self,
        labels: &[u8],
        start: usize,
        end: usize,
        w: u64,
        ones: u64,
        mtry: usize,
        rng: &mut rng::Rng,
        s: &mut Scratch,
    ) -> Option<(usize, f64)> {
        let n = self.x.rows();
        let dim = self.x.cols();
        let m = end - start;
        let small = m * 4 < n;
        if !small {
            for &i in &s.members[start..end] {
                let c = s.counts[i as usize];
                s.node_w[i as usize] = c;
                s.node_s[i as usize] = c * u32::from(labels[i as usize]);
            }
        }
        // The no-split sum of squares is the bar every candidate must beat.
        let mut scan = SplitScan::new(w, ones);
        let mut best: Option<(usize, f64)> = None;

        // Partial Fisher-Yates: the first `mtry` entries become a uniform sample.
        for j in 0..mtry {
            let r = rng.gen_range(j..dim);
            s.features.swap(j, r);
        }
        for j in 0..mtry {
            let f = s.features[j];
            s.buf.clear();
            if small {
                let col = self.columns.column(f);
                for &i in &s.members[start..end] {
                    let c = s.counts[i as usize];
                    s.buf.push((col[i as usize], c, c * u32::from(labels[i as usize])));
                }
                s.buf.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            } else {
                // Branch-free compaction of this node's rows in sorted order.
                let range = f * n..(f + 1) * n;
                s.buf.resize(n, (0.0, 0, 0));
                let mut k = 0;
                for (&i, &v) in self.columns.order[range.clone()].iter().zip(&self.columns.sorted[range]) {
                    let c = s.node_w[i as usize];
                    s.buf[k] = (v, c, s.node_s[i as usize]);
                    k += usize::from(c != 0);
                }
                s.buf.truncate(k);
            }
            if scan.run(&s.buf) {
                best = Some((f, scan.threshold));
            }
        }
        if !small {
            for &i in &s.members[start..end] {
                s.node_w[i as usize] = 0;
                s.node_s[i as usize] = 0;
            }
        }
        best
    }
}

/// Best split along sorted `(value, weight, weighted ones)` rows. Gains are
/// compared exactly as fractions `ls^2/lw + rs^2/rw`.
struct SplitScan {
    total_w: u64,
    total_s: u64,
    best_num: u128,
    best_den: u128,
    threshold: f64,
}

impl SplitScan {
    fn new(total_w: u64, total_s: u64) -> Self {
        Self { total_w, total_s, best_num: u128::from(total_s * total_s), best_den: u128::from(total_w), threshold: 0.0 }
    }

    /// Scan one feature; true when it produced a new best split.
    fn run(&mut self, rows: &[(f64, u32, u32)]) -> bool {
        let mut improved = false;
        let (mut lw, mut ls) = (0u64, 0u64);
        let mut prev = f64::NEG_INFINITY;
        for &(v, w, s) in rows {
            if lw > 0 && v > prev {
                let (rw, rs) = (self.total_w - lw, self.total_s - ls);
                let num = u128::from(ls * ls * rw + rs * rs * lw);
                let den = u128::from(lw * rw);
                if num * self.best_den > self.best_num * den {
                    self.best_num = num;
                    self.best_den = den;
                    let mid = 0.5 * (prev + v);
                    self.threshold = if mid < v { mid } else { prev };
                    improved = true;
                }
            }
            lw += u64::from(w);
            ls += u64::from(s);
            prev = v;
        }
        improved
    }
}

struct Scratch {
    counts: Vec<u32>,
    members: Vec<u32>,
    /// Bootstrap weight and weighted label of the rows in the current node,
    /// zero elsewhere.
    node_w: Vec<u32>,
    node_s: Vec<u32>,
    features: Vec<usize>,
    buf: Vec<(f64, u32, u32)>,
}

impl Scratch {
    fn new(n: usize, dim: usize) -> Self {
        Self {
            counts: vec![0; n],
            members: Vec::with_capacity(n),
            node_w: vec![0; n],
            node_s: vec![0; n],
            features: (0..dim).collect(),
            buf: Vec::with_capacity(n),
        }
    }
}

/// A fitted forest with its in-sample and out-of-bag predictions.
#[derive(Debug, Clone)]
pub struct ForestModel {
    trees: Vec<Tree>,
    train_pred: Vec<f64>,
    oob_pred: Vec<Option<f64>>,
    pi1: f64,
}

pub fn fit_forest(data: &LabeledDataset, cfg: &ForestConfig) -> Result<ForestModel> {
    ForestTrainer::new(Arc::clone(data.shared_features()), cfg.clone())?.fit(data.labels())
}

impl ForestModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let total: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        total / self.trees.len() as f64
    }

    pub fn pi1(&self) -> f64 {
        self.pi1
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn n_train(&self) -> usize {
        self.train_pred.len()
    }

    /// Average over all trees at each training row.
    pub fn train_predictions(&self) -> &[f64] {
        &self.train_pred
    }

    /// Average over the trees whose bootstrap sample excluded the row;
    /// `None` for rows that were in every bootstrap sample.
    pub fn oob_predictions(&self) -> &[Option<f64>] {
        &self.oob_pred
    }

    /// Out-of-bag classification accuracy of `1{m(x) > 1/2}`, over the rows
    /// that have at least one out-of-bag tree.
    pub fn oob_accuracy(&self, labels: &[u8]) -> Result<f64> {
        let (hits, total) = self
            .oob_pred
            .iter()
            .zip(labels)
            .filter_map(|(p, &y)| p.map(|p| (u8::from(p > 0.5) == y, 1usize)))
            .fold((0usize, 0usize), |(h, t), (hit, one)| (h + usize::from(hit), t + one));
        if total == 0 {
            return Err(Error::Degenerate("no out-of-bag predictions available".into()));
        }
        Ok(hits as f64 / total as f64)
    }

    pub fn max_depth(&self) -> usize {
        self.trees.iter().map(Tree::depth).max().unwrap_or(0)
    }
}
