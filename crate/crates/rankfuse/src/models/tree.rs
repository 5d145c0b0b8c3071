//! CART-style regression tree: greedy variance-reduction splitting with a
//! random feature subset considered at each node.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};

/// One node of a fitted regression tree. Internal nodes route rows by
/// `value <= threshold` to the left; leaves predict the mean of the training
/// targets that reached them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Internal {
        feature: String,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        n: usize,
    },
}

impl TreeNode {
    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Minimum rows on each side of every split.
    pub min_samples_leaf: usize,
    /// Features sampled per split; `None` means max(1, n_features / 3).
    pub max_features_per_split: Option<usize>,
}

impl Default for TreeParams {
    fn default() -> TreeParams {
        TreeParams {
            min_samples_leaf: 1,
            max_features_per_split: None,
        }
    }
}

pub(crate) fn resolve_max_features(requested: Option<usize>, n_features: usize) -> usize {
    match requested {
        Some(m) => m.clamp(1, n_features.max(1)),
        None => (n_features / 3).max(1),
    }
}

/// Fits a tree on the whole table, deterministically for a given seed.
pub fn fit_tree(table: &FeatureTable, params: &TreeParams, seed: u64) -> Result<TreeNode> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    fit_tree_with_rng(table, params, &mut rng).map(|(node, _)| node)
}

/// Internal fit entry point that also returns per-feature impurity-reduction
/// credits (indexed like the table's features), used for forest importances.
pub(crate) fn fit_tree_with_rng(
    table: &FeatureTable,
    params: &TreeParams,
    rng: &mut ChaCha8Rng,
) -> Result<(TreeNode, Vec<f64>)> {
    let n = table.n_rows();
    let min_leaf = params.min_samples_leaf.max(1);
    if n < 2 * min_leaf {
        return Err(Error::TooFewRows {
            need: 2 * min_leaf,
            got: n,
        });
    }
    let mut builder = Builder {
        table,
        min_leaf,
        max_features: resolve_max_features(params.max_features_per_split, table.n_features()),
        n_total: n as f64,
        credits: vec![0.0; table.n_features()],
    };
    let rows: Vec<usize> = (0..n).collect();
    let node = builder.build(&rows, rng);
    Ok((node, builder.credits))
}

struct Builder<'a> {
    table: &'a FeatureTable,
    min_leaf: usize,
    max_features: usize,
    n_total: f64,
    credits: Vec<f64>,
}

struct Split {
    feature: usize,
    threshold: f64,
    children_sse: f64,
}

impl Builder<'_> {
    fn build(&mut self, rows: &[usize], rng: &mut ChaCha8Rng) -> TreeNode {
        let target = self.table.target();
        let n = rows.len();
        let mean = rows.iter().map(|&i| target[i]).sum::<f64>() / n as f64;
        // Two-pass sum of squared deviations: exactly zero for a constant
        // target, so degenerate nodes never split.
        let node_sse: f64 = rows.iter().map(|&i| (target[i] - mean).powi(2)).sum();

        let leaf = TreeNode::Leaf { value: mean, n };
        if n < 2 * self.min_leaf || node_sse <= 0.0 {
            return leaf;
        }

        let best = match self.best_split(rows, node_sse, rng) {
            Some(split) => split,
            None => return leaf,
        };

        self.credits[best.feature] += (node_sse - best.children_sse) / self.n_total;

        let column = self.table.column_at(best.feature);
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&i| column[i] <= best.threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let left = self.build(&left_rows, rng);
        let right = self.build(&right_rows, rng);
        TreeNode::Internal {
            feature: self.table.feature_names()[best.feature].clone(),
            threshold: best.threshold,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Exhaustive search over midpoints of consecutive distinct values for a
    /// random subset of features. Returns None when no split strictly
    /// reduces the summed squared error.
    fn best_split(&self, rows: &[usize], node_sse: f64, rng: &mut ChaCha8Rng) -> Option<Split> {
        let n_features = self.table.n_features();
        if n_features == 0 {
            return None;
        }
        let m = self.max_features.min(n_features);
        let mut candidates = rand::seq::index::sample(rng, n_features, m).into_vec();
        candidates.sort_unstable();

        let target = self.table.target();
        let mut best: Option<Split> = None;
        let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(rows.len());
        for &feature in &candidates {
            let column = self.table.column_at(feature);
            pairs.clear();
            pairs.extend(rows.iter().map(|&i| (column[i], target[i])));
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));

            let total_sum: f64 = pairs.iter().map(|p| p.1).sum();
            let total_sq: f64 = pairs.iter().map(|p| p.1 * p.1).sum();
            let n = pairs.len();
            let mut left_sum = 0.0;
            let mut left_sq = 0.0;
            for split_at in 1..n {
                let (value, y) = pairs[split_at - 1];
                left_sum += y;
                left_sq += y * y;
                if value == pairs[split_at].0 {
                    continue; // can only split between distinct values
                }
                let n_left = split_at;
                let n_right = n - split_at;
                if n_left < self.min_leaf || n_right < self.min_leaf {
                    continue;
                }
                let sse_left = (left_sq - left_sum * left_sum / n_left as f64).max(0.0);
                let right_sum = total_sum - left_sum;
                let right_sq = total_sq - left_sq;
                let sse_right = (right_sq - right_sum * right_sum / n_right as f64).max(0.0);
                let children_sse = sse_left + sse_right;
                if children_sse >= node_sse {
                    continue;
                }
                let improves = match &best {
                    Some(current) => children_sse < current.children_sse,
                    None => true,
                };
                if improves {
                    best = Some(Split {
                        feature,
                        threshold: (value + pairs[split_at].0) / 2.0,
                        children_sse,
                    });
                }
            }
        }
        best
    }
}
