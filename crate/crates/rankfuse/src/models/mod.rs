//! Regression models: decision tree, random forest, and Bayesian ridge.

pub mod forest;
pub mod ridge;
pub mod tree;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use forest::{feature_importances, fit_forest, ForestModel, ForestParams};
pub use ridge::{fit_bayesian_ridge, FeatureScaling, RidgeModel, RidgeParams};
pub use tree::{fit_tree, TreeNode, TreeParams};

use crate::data::FeatureTable;
use crate::error::{Error, Result};

/// Point prediction over the rows of a table. The table must carry every
/// feature the model was trained on; extra columns are ignored.
pub trait Regressor {
    fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>>;
}

fn feature_lookup(table: &FeatureTable) -> HashMap<&str, usize> {
    table
        .feature_names()
        .iter()
        .enumerate()
        .map(|(j, name)| (name.as_str(), j))
        .collect()
}

fn tree_predict_row(
    node: &TreeNode,
    table: &FeatureTable,
    lookup: &HashMap<&str, usize>,
    row: usize,
) -> Result<f64> {
    match node {
        TreeNode::Leaf { value, .. } => Ok(*value),
        TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } => {
            let j = *lookup
                .get(feature.as_str())
                .ok_or_else(|| Error::FeatureMismatch(feature.clone()))?;
            let next = if table.column_at(j)[row] <= *threshold {
                left
            } else {
                right
            };
            tree_predict_row(next, table, lookup, row)
        }
    }
}

impl Regressor for TreeNode {
    fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let lookup = feature_lookup(table);
        (0..table.n_rows())
            .map(|row| tree_predict_row(self, table, &lookup, row))
            .collect()
    }
}

impl Regressor for ForestModel {
    fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let lookup = feature_lookup(table);
        let n_trees = self.trees().len() as f64;
        (0..table.n_rows())
            .map(|row| {
                // Summation in tree order keeps predictions bit-identical
                // across thread counts.
                let mut sum = 0.0;
                for tree in self.trees() {
                    sum += tree_predict_row(tree, table, &lookup, row)?;
                }
                Ok(sum / n_trees)
            })
            .collect()
    }
}

impl Regressor for RidgeModel {
    fn predict(&self, table: &FeatureTable) -> Result<Vec<f64>> {
        let lookup = feature_lookup(table);
        let mut resolved = Vec::with_capacity(self.weights().len());
        for (name, &weight) in self.weights() {
            let j = *lookup
                .get(name.as_str())
                .ok_or_else(|| Error::FeatureMismatch(name.clone()))?;
            resolved.push((j, weight));
        }
        Ok((0..table.n_rows())
            .map(|row| {
                self.intercept()
                    + resolved
                        .iter()
                        .map(|&(j, w)| w * table.column_at(j)[row])
                        .sum::<f64>()
            })
            .collect())
    }
}

/// Version of the on-disk model record format.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Self-describing, versioned model record for inspection and round-trips.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum SavedModel {
    Tree(TreeNode),
    Forest(ForestModel),
    BayesianRidge(RidgeModel),
}

#[derive(Serialize, Deserialize)]
struct ModelRecord {
    format_version: u32,
    #[serde(flatten)]
    model: SavedModel,
}

pub fn model_to_json(model: &SavedModel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ModelRecord {
        format_version: MODEL_FORMAT_VERSION,
        model: model.clone(),
    })?)
}

pub fn model_from_json(text: &str) -> Result<SavedModel> {
    let record: ModelRecord = serde_json::from_str(text)?;
    if record.format_version != MODEL_FORMAT_VERSION {
        return Err(Error::InvalidConfig(format!(
            "unsupported model format version {}",
            record.format_version
        )));
    }
    Ok(record.model)
}
