//! Random forest regression: bootstrap-sampled, fully grown CART trees with
//! a random feature subset per split. The forest predicts the mean of its
//! trees.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Targets within this span count as a pure node.
pub const PURITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature_index: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        count: usize,
    },
}

impl TreeNode {
    /// `x[feature] <= threshold` goes left.
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature_index,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature_index] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    /// Number of splits on each feature.
    pub fn split_counts(&self, counts: &mut [usize]) {
        if let TreeNode::Split {
            feature_index,
            left,
            right,
            ..
        } = self
        {
            counts[*feature_index] += 1;
            left.split_counts(counts);
            right.split_counts(counts);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature_index: usize,
    pub threshold: f64,
    /// Sum of squared deviations in the two children.
    pub child_sse: f64,
}

/// Best variance-reducing split of `rows` over the listed features.
///
/// Candidate thresholds are midpoints between consecutive distinct values.
/// Features are scanned in the given order and thresholds ascending; only a
/// strictly smaller child SSE replaces the incumbent, so ties go to the
/// earlier feature and then the smaller threshold.
pub fn best_split<V: AsRef<[f64]>>(
    features: &[V],
    targets: &[f64],
    rows: &mut [usize],
    candidates: &[usize],
) -> Option<SplitChoice> {
    let n = rows.len();
    if n < 2 {
        return None;
    }
    let mean = rows.iter().map(|&r| targets[r]).sum::<f64>() / n as f64;
    let total: f64 = rows.iter().map(|&r| targets[r] - mean).sum();
    let total_sq: f64 = rows
        .iter()
        .map(|&r| {
            let d = targets[r] - mean;
            d * d
        })
        .sum();

    let mut best: Option<SplitChoice> = None;
    for &f in candidates {
        rows.sort_by(|&a, &b| {
            features[a].as_ref()[f]
                .total_cmp(&features[b].as_ref()[f])
                .then(a.cmp(&b))
        });
        let mut left_sum = 0.0;
        let mut left_sq = 0.0;
        for k in 0..n - 1 {
            let y = targets[rows[k]] - mean;
            left_sum += y;
            left_sq += y * y;
            let here = features[rows[k]].as_ref()[f];
            let next = features[rows[k + 1]].as_ref()[f];
            if here == next {
                continue;
            }
            let nl = (k + 1) as f64;
            let nr = (n - k - 1) as f64;
            let right_sum = total - left_sum;
            let right_sq = total_sq - left_sq;
            let sse =
                (left_sq - left_sum * left_sum / nl) + (right_sq - right_sum * right_sum / nr);
            if best.is_none_or(|b| sse < b.child_sse) {
                best = Some(SplitChoice {
                    feature_index: f,
                    threshold: midpoint(here, next),
                    child_sse: sse,
                });
            }
        }
    }
    best
}

fn midpoint(a: f64, b: f64) -> f64 {
    let m = a + (b - a) / 2.0;
    // keep `a <= m < b` so the split separates the pair
    if m >= b {
        a
    } else {
        m
    }
}

fn is_pure(targets: &[f64], rows: &[usize]) -> bool {
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| {
            (lo.min(targets[r]), hi.max(targets[r]))
        });
    hi - lo <= PURITY_TOLERANCE
}

fn leaf(targets: &[f64], rows: &[usize]) -> TreeNode {
    let value = rows.iter().map(|&r| targets[r]).sum::<f64>() / rows.len() as f64;
    TreeNode::Leaf {
        value,
        count: rows.len(),
    }
}

struct Grower<'a, V, R: ?Sized> {
    features: &'a [V],
    targets: &'a [f64],
    mtry: usize,
    dim: usize,
    rng: &'a mut R,
}

impl<V: AsRef<[f64]>, R: Rng + ?Sized> Grower<'_, V, R> {
    fn grow(&mut self, rows: &mut [usize]) -> TreeNode {
        if rows.len() == 1 || is_pure(self.targets, rows) {
            return leaf(self.targets, rows);
        }
        let mut order: Vec<usize> = (0..self.dim).collect();
        let (drawn, rest) = order.partial_shuffle(self.rng, self.mtry);
        let mut drawn = drawn.to_vec();
        drawn.sort_unstable();
        let mut choice = best_split(self.features, self.targets, rows, &drawn);
        if choice.is_none() {
            // every drawn feature is constant here; fall back to the rest
            let mut rest = rest.to_vec();
            rest.sort_unstable();
            choice = best_split(self.features, self.targets, rows, &rest);
        }
        let Some(choice) = choice else {
            // identical rows with different targets
            return leaf(self.targets, rows);
        };
        let f = choice.feature_index;
        rows.sort_by(|&a, &b| {
            self.features[a].as_ref()[f]
                .total_cmp(&self.features[b].as_ref()[f])
                .then(a.cmp(&b))
        });
        let cut = rows.partition_point(|&r| self.features[r].as_ref()[f] <= choice.threshold);
        let (left_rows, right_rows) = rows.split_at_mut(cut);
        let left = self.grow(left_rows);
        let right = self.grow(right_rows);
        TreeNode::Split {
            feature_index: f,
            threshold: choice.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Grows one fully grown regression tree over the given rows (duplicates
/// allowed, as produced by bootstrapping).
pub fn fit_tree_rows<V: AsRef<[f64]>, R: Rng + ?Sized>(
    features: &[V],
    targets: &[f64],
    rows: &mut [usize],
    mtry: usize,
    rng: &mut R,
) -> Result<TreeNode> {
    if rows.is_empty() {
        return Err(Error::TooFewRecords {
            required: 1,
            actual: 0,
        });
    }
    let dim = features[rows[0]].as_ref().len();
    if mtry == 0 || mtry > dim {
        return Err(Error::Config("mtry must lie in 1..=feature dim"));
    }
    let mut grower = Grower {
        features,
        targets,
        mtry,
        dim,
        rng,
    };
    Ok(grower.grow(rows))
}

pub fn fit_tree<V: AsRef<[f64]>, R: Rng + ?Sized>(
    features: &[V],
    targets: &[f64],
    rng: &mut R,
    mtry: usize,
) -> Result<TreeNode> {
    check_data(features, targets, 1)?;
    let mut rows: Vec<usize> = (0..features.len()).collect();
    fit_tree_rows(features, targets, &mut rows, mtry, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features drawn per split; `None` means ceil(d / 3).
    pub mtry: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 50,
            mtry: None,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestConfig {
    pub fn resolved_mtry(&self, dim: usize) -> usize {
        self.mtry.unwrap_or_else(|| dim.div_ceil(3))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub config: ForestConfig,
    pub mtry: usize,
    pub training_dim: usize,
    pub trees: Vec<TreeNode>,
}

impl Forest {
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.training_dim {
            return Err(Error::DimensionMismatch {
                expected: self.training_dim,
                actual: x.len(),
            });
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        Ok(sum / self.trees.len() as f64)
    }

    pub fn split_counts(&self) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.training_dim];
        for tree in &self.trees {
            tree.split_counts(&mut counts);
        }
        counts
    }
}

fn check_data<V: AsRef<[f64]>>(features: &[V], targets: &[f64], min: usize) -> Result<usize> {
    if features.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            actual: targets.len(),
        });
    }
    if features.len() < min {
        return Err(Error::TooFewRecords {
            required: min,
            actual: features.len(),
        });
    }
    let dim = features[0].as_ref().len();
    for x in features {
        if x.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.as_ref().len(),
            });
        }
        if x.as_ref().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("forest features"));
        }
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("forest targets"));
    }
    Ok(dim)
}

fn row_order<V: AsRef<[f64]>>(features: &[V], targets: &[f64], a: usize, b: usize) -> Ordering {
    let (xa, xb) = (features[a].as_ref(), features[b].as_ref());
    xa.iter()
        .zip(xb)
        .map(|(p, q)| p.total_cmp(q))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
        .then(targets[a].total_cmp(&targets[b]))
}

/// Fits `n_trees` trees, each on a bootstrap resample drawn from its own
/// stream. Rows are put in canonical (lexicographic) order first, so the
/// forest depends on the data multiset and seed but not on row order.
pub fn fit_forest<V: AsRef<[f64]>>(
    features: &[V],
    targets: &[f64],
    config: &ForestConfig,
) -> Result<Forest> {
    let dim = check_data(features, targets, 2)?;
    if config.n_trees == 0 {
        return Err(Error::Config("forest needs at least one tree"));
    }
    let mtry = config.resolved_mtry(dim);
    if mtry == 0 || mtry > dim {
        return Err(Error::Config("mtry must lie in 1..=feature dim"));
    }
    let n = features.len();
    let mut canonical: Vec<usize> = (0..n).collect();
    canonical.sort_by(|&a, &b| row_order(features, targets, a, b));

    let mut trees = Vec::with_capacity(config.n_trees);
    for j in 0..config.n_trees {
        let mut rng = rng::stream(config.seed, rng::FOREST_STREAM_BASE + j as u64);
        let mut rows: Vec<usize> = if config.bootstrap {
            (0..n).map(|_| canonical[rng.random_range(0..n)]).collect()
        } else {
            canonical.clone()
        };
        trees.push(fit_tree_rows(features, targets, &mut rows, mtry, &mut rng)?);
    }
    Ok(Forest {
        config: *config,
        mtry,
        training_dim: dim,
        trees,
    })
}
