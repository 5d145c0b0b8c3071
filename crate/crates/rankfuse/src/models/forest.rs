//! Random forest regressor: bootstrap resamples, per-split feature
//! subsampling, mean-of-trees prediction, and impurity-based importances.
//!
//! Training is deterministic for a fixed seed regardless of thread count:
//! each tree's RNG is derived purely from (seed, tree index).

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::models::tree::{fit_tree_with_rng, resolve_max_features, TreeNode, TreeParams};
use crate::seed::mix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_min_samples_leaf")]
    pub min_samples_leaf: usize,
    /// Features sampled per split; `None` means max(1, n_features / 3).
    #[serde(default)]
    pub max_features_per_split: Option<usize>,
    /// Test hook: `false` trains every tree on the full table instead of a
    /// bootstrap resample.
    #[serde(default = "default_bootstrap")]
    pub bootstrap: bool,
}

fn default_n_trees() -> usize {
    100
}

fn default_min_samples_leaf() -> usize {
    1
}

fn default_bootstrap() -> bool {
    true
}

impl Default for ForestParams {
    fn default() -> ForestParams {
        ForestParams {
            n_trees: default_n_trees(),
            min_samples_leaf: default_min_samples_leaf(),
            max_features_per_split: None,
            bootstrap: default_bootstrap(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    trees: Vec<TreeNode>,
    n_trees: usize,
    max_features_per_split: usize,
    seed: u64,
    importances: BTreeMap<String, f64>,
    /// True when no tree split at all and importances fell back to uniform.
    importances_uniform: bool,
}

impl ForestModel {
    pub fn trees(&self) -> &[TreeNode] {
        &self.trees
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_features_per_split(&self) -> usize {
        self.max_features_per_split
    }

    /// Normalized impurity-reduction importances: nonnegative, summing to 1.
    pub fn importances(&self) -> &BTreeMap<String, f64> {
        &self.importances
    }

    pub fn importances_are_uniform_fallback(&self) -> bool {
        self.importances_uniform
    }
}

/// Trains `n_trees` trees on independent bootstrap resamples. Trees are
/// fitted in parallel; results are identical to a serial fit.
pub fn fit_forest(table: &FeatureTable, params: &ForestParams, seed: u64) -> Result<ForestModel> {
    if params.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be at least 1".into()));
    }
    let n = table.n_rows();
    let min_leaf = params.min_samples_leaf.max(1);
    if n < 2 * min_leaf {
        return Err(Error::TooFewRows {
            need: 2 * min_leaf,
            got: n,
        });
    }
    let tree_params = TreeParams {
        min_samples_leaf: params.min_samples_leaf,
        max_features_per_split: params.max_features_per_split,
    };

    let fits: Vec<(TreeNode, Vec<f64>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|index| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, index as u64));
            let sample = if params.bootstrap {
                let rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                table.take_rows(&rows)
            } else {
                table.clone()
            };
            fit_tree_with_rng(&sample, &tree_params, &mut rng)
        })
        .collect::<Result<_>>()?;

    let n_features = table.n_features();
    let mut totals = vec![0.0; n_features];
    for (_, credits) in &fits {
        for (total, credit) in totals.iter_mut().zip(credits) {
            *total += credit / params.n_trees as f64;
        }
    }
    let sum: f64 = totals.iter().sum();
    let uniform = sum <= 0.0;
    let importances: BTreeMap<String, f64> = table
        .feature_names()
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let value = if uniform {
                1.0 / n_features as f64
            } else {
                totals[j] / sum
            };
            (name.clone(), value)
        })
        .collect();

    Ok(ForestModel {
        trees: fits.into_iter().map(|(tree, _)| tree).collect(),
        n_trees: params.n_trees,
        max_features_per_split: resolve_max_features(params.max_features_per_split, n_features),
        seed,
        importances,
        importances_uniform: uniform,
    })
}

/// Importance map of a fitted forest, highest-credit features first when
/// iterated through [`crate::ranking::rank_from_scores`].
pub fn feature_importances(model: &ForestModel) -> &BTreeMap<String, f64> {
    model.importances()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate_synthetic, SyntheticSpec};
    use crate::models::tree::fit_tree;
    use crate::models::Regressor;
    use crate::ranking::{rank_from_scores, top_k, BordaScores};

    fn planted_table(seed: u64) -> FeatureTable {
        let mut spec = SyntheticSpec::new(150, 12, 3, seed);
        spec.noise_sd = 0.6;
        generate_synthetic(&spec).unwrap()
    }

    #[test]
    fn single_tree_without_bootstrap_matches_plain_tree() {
        let table = planted_table(1);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            ..ForestParams::default()
        };
        let forest = fit_forest(&table, &params, 99).unwrap();
        let tree = fit_tree(
            &table,
            &TreeParams {
                min_samples_leaf: 1,
                max_features_per_split: None,
            },
            mix(99, 0),
        )
        .unwrap();
        assert_eq!(forest.trees()[0], tree);
        assert_eq!(
            forest.predict(&table).unwrap(),
            tree.predict(&table).unwrap()
        );
    }

    #[test]
    fn prediction_is_mean_of_trees() {
        let table = planted_table(2);
        let forest = fit_forest(
            &table,
            &ForestParams {
                n_trees: 12,
                ..ForestParams::default()
            },
            7,
        )
        .unwrap();
        let combined = forest.predict(&table).unwrap();
        let per_tree: Vec<Vec<f64>> = forest
            .trees()
            .iter()
            .map(|t| t.predict(&table).unwrap())
            .collect();
        for (row, &prediction) in combined.iter().enumerate() {
            let mean: f64 =
                per_tree.iter().map(|p| p[row]).sum::<f64>() / forest.trees().len() as f64;
            assert!((prediction - mean).abs() < 1e-12);
        }
    }

    #[test]
    fn equal_seeds_reproduce_and_unequal_seeds_differ() {
        let table = planted_table(3);
        let params = ForestParams {
            n_trees: 10,
            ..ForestParams::default()
        };
        let a = fit_forest(&table, &params, 42).unwrap();
        let b = fit_forest(&table, &params, 42).unwrap();
        let c = fit_forest(&table, &params, 43).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.predict(&table).unwrap(), b.predict(&table).unwrap());
        assert_ne!(a.predict(&table).unwrap(), c.predict(&table).unwrap());
    }

    #[test]
    fn importances_normalize_and_stay_nonnegative() {
        let table = planted_table(4);
        let forest = fit_forest(
            &table,
            &ForestParams {
                n_trees: 20,
                ..ForestParams::default()
            },
            11,
        )
        .unwrap();
        let importances = feature_importances(&forest);
        let total: f64 = importances.values().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(importances.values().all(|&v| v >= 0.0));
        assert!(!forest.importances_are_uniform_fallback());
    }

    #[test]
    fn single_feature_gets_full_importance() {
        let table = FeatureTable::new(
            vec!["only".into()],
            "error",
            vec![vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]],
            vec![0.0, 0.0, 0.0, 9.0, 9.0, 9.0],
            None,
        )
        .unwrap();
        let forest = fit_forest(
            &table,
            &ForestParams {
                n_trees: 5,
                ..ForestParams::default()
            },
            0,
        )
        .unwrap();
        assert_eq!(forest.importances()["only"], 1.0);
    }

    #[test]
    fn all_leaf_forest_falls_back_to_uniform_importances() {
        let table = FeatureTable::new(
            vec!["a".into(), "b".into()],
            "error",
            vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]],
            vec![1.0, 1.0, 1.0],
            None,
        )
        .unwrap();
        let forest = fit_forest(
            &table,
            &ForestParams {
                n_trees: 3,
                ..ForestParams::default()
            },
            0,
        )
        .unwrap();
        assert!(forest.importances_are_uniform_fallback());
        assert_eq!(forest.importances()["a"], 0.5);
        assert_eq!(forest.importances()["b"], 0.5);
    }

    #[test]
    fn planted_features_hold_top_importances_across_seeds() {
        let mut hits = 0;
        for seed in 0..20 {
            let mut spec = SyntheticSpec::new(225, 36, 5, 1000 + seed);
            spec.noise_sd = 1.6;
            let table = generate_synthetic(&spec).unwrap();
            let informative = table.informative_features().unwrap().to_vec();
            let forest = fit_forest(
                &table,
                &ForestParams {
                    n_trees: 50,
                    ..ForestParams::default()
                },
                seed,
            )
            .unwrap();
            let ranking = rank_from_scores(&BordaScores {
                scores: forest.importances().clone(),
            })
            .unwrap();
            let top5 = top_k(&ranking, 5);
            if top5.iter().all(|name| informative.contains(name)) {
                hits += 1;
            }
        }
        assert!(hits >= 16, "top-5 importances matched in only {hits}/20 seeds");
    }
}
