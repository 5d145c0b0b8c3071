//! Bayesian ridge regression fitted by evidence maximization (type-II
//! maximum likelihood).
//!
//! Features are standardized and the target centered internally; reported
//! weights are in original units. The two precisions are `alpha` (noise)
//! and `lambda` (weights); iterating their updates against the posterior
//! weight mean shrinks coefficients adaptively. With both precisions frozen
//! the posterior mean is exactly the classical ridge solution
//! `(lambda/alpha * I + X^T X)^-1 X^T y` on the standardized data.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};

/// Shape and rate of the Gamma hyperpriors on both precisions.
const HYPERPRIOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeParams {
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Convergence threshold on the largest single-weight change.
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Test hook: fixes (alpha, lambda) instead of learning them, reducing
    /// the fit to one classical ridge solve.
    #[serde(default)]
    pub frozen_precisions: Option<(f64, f64)>,
}

fn default_max_iter() -> usize {
    300
}

fn default_tol() -> f64 {
    1e-3
}

impl Default for RidgeParams {
    fn default() -> RidgeParams {
        RidgeParams {
            max_iter: default_max_iter(),
            tol: default_tol(),
            frozen_precisions: None,
        }
    }
}

/// Per-feature standardization recorded at fit time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaling {
    pub mean: f64,
    pub scale: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgeModel {
    /// Weights in original feature units.
    weights: BTreeMap<String, f64>,
    intercept: f64,
    /// Learned noise precision.
    alpha: f64,
    /// Learned weight precision.
    lambda: f64,
    n_iter: usize,
    standardization: BTreeMap<String, FeatureScaling>,
}

impl RidgeModel {
    pub fn weights(&self) -> &BTreeMap<String, f64> {
        &self.weights
    }

    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn n_iter(&self) -> usize {
        self.n_iter
    }

    pub fn standardization(&self) -> &BTreeMap<String, FeatureScaling> {
        &self.standardization
    }
}

pub fn fit_bayesian_ridge(table: &FeatureTable, params: &RidgeParams) -> Result<RidgeModel> {
    let n = table.n_rows();
    let p = table.n_features();
    if n < 2 {
        return Err(Error::TooFewRows { need: 2, got: n });
    }
    if let Some((alpha, lambda)) = params.frozen_precisions {
        if alpha <= 0.0 || lambda <= 0.0 {
            return Err(Error::InvalidConfig(
                "frozen precisions must be positive".into(),
            ));
        }
    }

    // Standardize features (constant columns keep scale 1) and center y.
    let mut scalings = Vec::with_capacity(p);
    let mut x = DMatrix::<f64>::zeros(n, p);
    for j in 0..p {
        let column = table.column_at(j);
        let mean = column.iter().sum::<f64>() / n as f64;
        let variance = column.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let scale = if variance > 0.0 { variance.sqrt() } else { 1.0 };
        scalings.push(FeatureScaling { mean, scale });
        for i in 0..n {
            x[(i, j)] = (column[i] - mean) / scale;
        }
    }
    let y_mean = table.target().iter().sum::<f64>() / n as f64;
    let y = DVector::from_iterator(n, table.target().iter().map(|v| v - y_mean));

    // Work in the eigenbasis of X^T X: each iteration is then O(p).
    let gram = x.transpose() * &x;
    let xt_y = x.transpose() * &y;
    let eigen = nalgebra::SymmetricEigen::new(gram);
    let eigenvalues: Vec<f64> = eigen.eigenvalues.iter().map(|&e| e.max(0.0)).collect();
    let basis = eigen.eigenvectors;
    let projected = basis.transpose() * &xt_y;

    let solve = |ratio: f64| -> DVector<f64> {
        let scaled = DVector::from_iterator(
            p,
            (0..p).map(|i| projected[i] / (eigenvalues[i] + ratio)),
        );
        &basis * scaled
    };

    let (mut alpha, mut lambda) = params.frozen_precisions.unwrap_or((1.0, 1.0));
    let mut weights = DVector::<f64>::zeros(p);
    let mut n_iter = 0;
    for iteration in 1..=params.max_iter.max(1) {
        let updated = solve(lambda / alpha);
        let max_change = (&updated - &weights).abs().max();
        weights = updated;
        n_iter = iteration;
        if params.frozen_precisions.is_some() {
            break;
        }
        let gamma: f64 = eigenvalues
            .iter()
            .map(|&e| e / (e + lambda / alpha))
            .sum();
        let weight_norm: f64 = weights.norm_squared();
        let residual = &y - &x * &weights;
        let rss = residual.norm_squared();
        lambda = (gamma + 2.0 * HYPERPRIOR) / (weight_norm + 2.0 * HYPERPRIOR);
        alpha = (n as f64 - gamma + 2.0 * HYPERPRIOR) / (rss + 2.0 * HYPERPRIOR);
        if max_change < params.tol {
            break;
        }
    }
    // Final posterior mean under the settled precisions.
    if params.frozen_precisions.is_none() {
        weights = solve(lambda / alpha);
    }

    let mut weight_map = BTreeMap::new();
    let mut standardization = BTreeMap::new();
    let mut intercept = y_mean;
    for (j, name) in table.feature_names().iter().enumerate() {
        let original_units = weights[j] / scalings[j].scale;
        intercept -= original_units * scalings[j].mean;
        weight_map.insert(name.clone(), original_units);
        standardization.insert(name.clone(), scalings[j]);
    }

    Ok(RidgeModel {
        weights: weight_map,
        intercept,
        alpha,
        lambda,
        n_iter,
        standardization,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::Regressor;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_table(n: usize, weights: &[f64], intercept: f64, noise: f64, seed: u64) -> FeatureTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = weights.len();
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let target: Vec<f64> = (0..n)
            .map(|i| {
                let signal: f64 = weights.iter().enumerate().map(|(j, w)| w * columns[j][i]).sum();
                signal + intercept + noise * rng.gen_range(-1.0..1.0)
            })
            .collect();
        let names = (0..p).map(|j| format!("x{}", j + 1)).collect();
        FeatureTable::new(names, "error", columns, target, None).unwrap()
    }

    #[test]
    fn recovers_noiseless_linear_weights() {
        let table = linear_table(200, &[3.0, -2.0, 0.5], 1.0, 0.0, 5);
        let model = fit_bayesian_ridge(&table, &RidgeParams::default()).unwrap();
        assert!((model.weights()["x1"] - 3.0).abs() < 1e-3, "{model:?}");
        assert!((model.weights()["x2"] + 2.0).abs() < 1e-3);
        assert!((model.weights()["x3"] - 0.5).abs() < 1e-3);
        assert!((model.intercept() - 1.0).abs() < 1e-3);
        assert!(model.alpha() > 0.0 && model.lambda() > 0.0);

        let predictions = model.predict(&table).unwrap();
        for (pred, actual) in predictions.iter().zip(table.target()) {
            assert!((pred - actual).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_target_gives_zero_weights_and_mean_intercept() {
        let table = FeatureTable::new(
            vec!["a".into(), "b".into()],
            "error",
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.5, 0.1, 0.9, 0.3]],
            vec![7.25; 4],
            None,
        )
        .unwrap();
        let model = fit_bayesian_ridge(&table, &RidgeParams::default()).unwrap();
        for weight in model.weights().values() {
            assert!(weight.abs() < 1e-10);
        }
        assert!((model.intercept() - 7.25).abs() < 1e-10);
    }

    #[test]
    fn too_few_rows_is_an_error() {
        let table = FeatureTable::new(
            vec!["a".into()],
            "error",
            vec![vec![1.0]],
            vec![2.0],
            None,
        )
        .unwrap();
        assert!(matches!(
            fit_bayesian_ridge(&table, &RidgeParams::default()),
            Err(Error::TooFewRows { .. })
        ));
    }

    /// Direct ridge solve on standardized data via Gaussian elimination,
    /// independent of nalgebra.
    fn ridge_oracle(table: &FeatureTable, penalty: f64) -> Vec<f64> {
        let n = table.n_rows();
        let p = table.n_features();
        let mut x = vec![vec![0.0; p]; n];
        for j in 0..p {
            let col = table.column_at(j);
            let mean = col.iter().sum::<f64>() / n as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
            let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
            for i in 0..n {
                x[i][j] = (col[i] - mean) / scale;
            }
        }
        let y_mean = table.target().iter().sum::<f64>() / n as f64;
        let y: Vec<f64> = table.target().iter().map(|v| v - y_mean).collect();

        let mut system = vec![vec![0.0; p + 1]; p];
        for a in 0..p {
            for b in 0..p {
                system[a][b] = (0..n).map(|i| x[i][a] * x[i][b]).sum::<f64>();
                if a == b {
                    system[a][b] += penalty;
                }
            }
            system[a][p] = (0..n).map(|i| x[i][a] * y[i]).sum::<f64>();
        }
        for col in 0..p {
            let pivot = (col..p)
                .max_by(|&a, &b| {
                    system[a][col]
                        .abs()
                        .partial_cmp(&system[b][col].abs())
                        .unwrap()
                })
                .unwrap();
            system.swap(col, pivot);
            for row in 0..p {
                if row != col {
                    let factor = system[row][col] / system[col][col];
                    for k in col..=p {
                        system[row][k] -= factor * system[col][k];
                    }
                }
            }
        }
        (0..p).map(|a| system[a][p] / system[a][a]).collect()
    }

    #[test]
    fn frozen_precisions_match_direct_ridge_solve() {
        let table = linear_table(60, &[1.5, -0.7, 2.2, 0.0], 0.3, 0.4, 8);
        let (alpha, lambda) = (2.0, 3.5);
        let params = RidgeParams {
            frozen_precisions: Some((alpha, lambda)),
            ..RidgeParams::default()
        };
        let model = fit_bayesian_ridge(&table, &params).unwrap();
        assert_eq!(model.alpha(), alpha);
        assert_eq!(model.lambda(), lambda);

        let oracle = ridge_oracle(&table, lambda / alpha);
        for (j, name) in table.feature_names().iter().enumerate() {
            let standardized = model.weights()[name] * model.standardization()[name].scale;
            assert!(
                (standardized - oracle[j]).abs() < 1e-8,
                "{name}: {standardized} vs {}",
                oracle[j]
            );
        }
    }

    #[test]
    fn pure_noise_weights_shrink_relative_to_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let n = 225;
        let p = 36;
        let columns: Vec<Vec<f64>> = (0..p)
            .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let target: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let names = (0..p).map(|j| format!("x{j:02}")).collect();
        let table = FeatureTable::new(names, "error", columns, target, None).unwrap();

        let model = fit_bayesian_ridge(&table, &RidgeParams::default()).unwrap();
        let bayes_mean: f64 = table
            .feature_names()
            .iter()
            .map(|name| (model.weights()[name] * model.standardization()[name].scale).abs())
            .sum::<f64>()
            / p as f64;
        // penalty 0 = ordinary least squares on the standardized design
        let ols = ridge_oracle(&table, 0.0);
        let ols_mean: f64 = ols.iter().map(|w| w.abs()).sum::<f64>() / p as f64;
        assert!(
            bayes_mean < ols_mean,
            "no shrinkage: bayes {bayes_mean} vs ols {ols_mean}"
        );
    }
}
