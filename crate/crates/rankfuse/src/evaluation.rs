//! Experiment harness: per (location, season, k) cell, derive metric
//! rankings, fuse them, select features three ways, train and validate the
//! regressors, and report test RMSE plus ranking concordance.
//!
//! Every cell's randomness derives from the root seed and the cell identity,
//! so cells are independent, reproducible in isolation, and safe to run in
//! parallel. Within one cell all variants share a single train/test split
//! and a single forest seed, so RMSE differences reflect the selection, not
//! split or sampling luck.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::{correlate_all, Metric};
use crate::data::{FeatureTable, Season};
use crate::error::{Error, Result};
use crate::models::{
    fit_bayesian_ridge, fit_forest, ForestParams, Regressor, RidgeParams,
};
use crate::ranking::{
    borda, concordance_report, rank_by_strength, rank_from_scores, top_k, BordaScores,
    ConcordanceReport,
};
use crate::seed::{fnv1a, mix, splitmix64};

/// Cells with fewer rows than this are skipped with a diagnostic.
pub const MIN_CELL_ROWS: usize = 25;

const SPLIT_STREAM: u64 = 0;
const FOREST_STREAM: u64 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    /// Seeded uniform shuffle of the rows.
    #[default]
    Random,
    /// First rows train, last rows test, in table order.
    Chronological,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Forest,
    BayesianRidge,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SelectionVariant {
    /// All features, no selection.
    #[serde(rename = "base")]
    Base,
    /// Top-k of the Borda-fused correlation rankings.
    #[serde(rename = "agg")]
    Aggregated,
    /// Top-k by random-forest feature importance.
    #[serde(rename = "rf_importance")]
    ForestImportance,
}

/// Output key for one (model, selection) combination, e.g. `rf_1` for the
/// forest trained on the fused-ranking selection.
pub fn variant_key(model: ModelKind, variant: SelectionVariant) -> &'static str {
    match (model, variant) {
        (ModelKind::Forest, SelectionVariant::Base) => "rf_base",
        (ModelKind::Forest, SelectionVariant::Aggregated) => "rf_1",
        (ModelKind::Forest, SelectionVariant::ForestImportance) => "rf_2",
        (ModelKind::BayesianRidge, SelectionVariant::Base) => "bay_base",
        (ModelKind::BayesianRidge, SelectionVariant::Aggregated) => "bay_1",
        (ModelKind::BayesianRidge, SelectionVariant::ForestImportance) => "bay_2",
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub k_values: Vec<usize>,
    pub test_fraction: f64,
    pub seed: u64,
    pub split: SplitMode,
    pub forest: ForestParams,
    pub ridge: RidgeParams,
    pub variants: BTreeSet<SelectionVariant>,
    pub models: BTreeSet<ModelKind>,
}

impl Default for ExperimentConfig {
    fn default() -> ExperimentConfig {
        ExperimentConfig {
            k_values: vec![5, 10, 15, 20, 25],
            test_fraction: 0.2,
            seed: 0,
            split: SplitMode::Random,
            forest: ForestParams::default(),
            ridge: RidgeParams::default(),
            variants: [
                SelectionVariant::Base,
                SelectionVariant::Aggregated,
                SelectionVariant::ForestImportance,
            ]
            .into(),
            models: [ModelKind::Forest, ModelKind::BayesianRidge].into(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "test_fraction must be in (0, 1), got {}",
                self.test_fraction
            )));
        }
        if self.k_values.is_empty() {
            return Err(Error::InvalidConfig("k_values must be nonempty".into()));
        }
        if self.k_values.iter().any(|&k| k == 0) {
            return Err(Error::InvalidConfig("k values must be positive".into()));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidConfig(
                "at least one selection variant required".into(),
            ));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("at least one model required".into()));
        }
        Ok(())
    }
}

/// One grid cell's outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub location: String,
    pub season: Season,
    pub k: usize,
    /// Test RMSE per variant key (`rf_base`, `rf_1`, ... `bay_2`).
    pub rmse: BTreeMap<String, f64>,
    /// Selected feature lists per selection name (`agg`, `rf_importance`).
    pub selected_features: BTreeMap<String, Vec<String>>,
    pub concordance: ConcordanceReport,
}

/// Root-mean-square error between actual and predicted values.
pub fn rmse(actual: &[f64], predicted: &[f64]) -> Result<f64> {
    if actual.len() != predicted.len() {
        return Err(Error::LengthMismatch {
            left: actual.len(),
            right: predicted.len(),
        });
    }
    if actual.is_empty() {
        return Err(Error::Empty);
    }
    let sum_sq: f64 = actual
        .iter()
        .zip(predicted)
        .map(|(a, p)| (a - p).powi(2))
        .sum();
    Ok((sum_sq / actual.len() as f64).sqrt())
}

/// Seed for one grid cell, a pure function of the root seed and the cell
/// identity. Exposed so callers can reproduce a single cell's split.
pub fn derive_cell_seed(root_seed: u64, location: &str, season: Season, k: usize) -> u64 {
    let mut key = Vec::with_capacity(location.len() + 16);
    key.extend_from_slice(location.as_bytes());
    key.push(b'/');
    key.extend_from_slice(season.as_str().as_bytes());
    key.push(b'/');
    key.extend_from_slice(&(k as u64).to_le_bytes());
    splitmix64(root_seed ^ fnv1a(&key))
}

/// Splits row indices into (train, test). The test side gets
/// round(n * test_fraction), at least 1, leaving at least 1 training row.
/// Both halves come back in ascending row order.
pub fn train_test_split(
    n: usize,
    test_fraction: f64,
    mode: SplitMode,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    match mode {
        SplitMode::Random => {
            let mut rows: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(mix(seed, SPLIT_STREAM));
            rows.shuffle(&mut rng);
            let mut test: Vec<usize> = rows[..n_test].to_vec();
            let mut train: Vec<usize> = rows[n_test..].to_vec();
            test.sort_unstable();
            train.sort_unstable();
            (train, test)
        }
        SplitMode::Chronological => {
            let cut = n - n_test;
            ((0..cut).collect(), (cut..n).collect())
        }
    }
}

fn fit_and_score(
    kind: ModelKind,
    train: &FeatureTable,
    test: &FeatureTable,
    cfg: &ExperimentConfig,
    forest_seed: u64,
) -> Result<f64> {
    let predictions = match kind {
        ModelKind::Forest => fit_forest(train, &cfg.forest, forest_seed)?.predict(test)?,
        ModelKind::BayesianRidge => fit_bayesian_ridge(train, &cfg.ridge)?.predict(test)?,
    };
    rmse(test.target(), &predictions)
}

/// Splits the table, fits the model on the training rows (restricted to
/// `subset` when given), and returns the test RMSE. Passing the seed from
/// [`derive_cell_seed`] reproduces the corresponding grid-cell variant.
pub fn learn_validate(
    kind: ModelKind,
    table: &FeatureTable,
    subset: Option<&[String]>,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<f64> {
    cfg.validate()?;
    let working = match subset {
        Some(names) => table.restrict(names)?,
        None => table.clone(),
    };
    let n = working.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { need: 2, got: n });
    }
    let (train_rows, test_rows) = train_test_split(n, cfg.test_fraction, cfg.split, seed);
    let train = working.take_rows(&train_rows);
    let test = working.take_rows(&test_rows);
    fit_and_score(kind, &train, &test, cfg, mix(seed, FOREST_STREAM))
}

/// Runs one grid cell: correlation rankings, Borda fusion, the three
/// selections, model fits, and the concordance report.
pub fn run_cell(
    table: &FeatureTable,
    location: &str,
    season: Season,
    k: usize,
    cfg: &ExperimentConfig,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let n = table.n_rows();
    if n < 2 {
        return Err(Error::TooFewRows { need: 2, got: n });
    }
    let cell_seed = derive_cell_seed(cfg.seed, location, season, k);

    // Rankings come from the full cell table; validation splits below.
    let pearson_ranking = rank_by_strength(&correlate_all(table, Metric::Pearson))?;
    let spearman_ranking = rank_by_strength(&correlate_all(table, Metric::Spearman))?;
    let kendall_ranking = rank_by_strength(&correlate_all(table, Metric::Kendall))?;
    let fused = rank_from_scores(&borda(&[
        pearson_ranking.clone(),
        spearman_ranking.clone(),
        kendall_ranking.clone(),
    ])?)?;
    let selected_agg = top_k(&fused, k);
    let concordance = concordance_report(
        &pearson_ranking,
        &spearman_ranking,
        &kendall_ranking,
        &fused,
    )?;

    let (train_rows, test_rows) = train_test_split(n, cfg.test_fraction, cfg.split, cell_seed);
    let train = table.take_rows(&train_rows);
    let test = table.take_rows(&test_rows);
    let forest_seed = mix(cell_seed, FOREST_STREAM);

    let mut rmse_by_variant = BTreeMap::new();
    let mut selections = BTreeMap::new();
    selections.insert("agg".to_string(), selected_agg.clone());

    // The base forest is fitted once and reused: it scores `rf_base` and its
    // importances drive the `rf_importance` selection.
    let wants_importance = cfg.variants.contains(&SelectionVariant::ForestImportance);
    let wants_forest_base = cfg.models.contains(&ModelKind::Forest)
        && cfg.variants.contains(&SelectionVariant::Base);
    let mut selected_rf: Option<Vec<String>> = None;
    if wants_importance || wants_forest_base {
        let base_forest = fit_forest(&train, &cfg.forest, forest_seed)?;
        if wants_forest_base {
            let predictions = base_forest.predict(&test)?;
            rmse_by_variant.insert(
                variant_key(ModelKind::Forest, SelectionVariant::Base).to_string(),
                rmse(test.target(), &predictions)?,
            );
        }
        if wants_importance {
            let importance_ranking = rank_from_scores(&BordaScores {
                scores: base_forest.importances().clone(),
            })?;
            let selection = top_k(&importance_ranking, k);
            selections.insert("rf_importance".to_string(), selection.clone());
            selected_rf = Some(selection);
        }
    }

    for &model in &cfg.models {
        for &variant in &cfg.variants {
            let key = variant_key(model, variant);
            if rmse_by_variant.contains_key(key) {
                continue; // rf_base handled above
            }
            let subset = match variant {
                SelectionVariant::Base => None,
                SelectionVariant::Aggregated => Some(&selected_agg),
                SelectionVariant::ForestImportance => {
                    Some(selected_rf.as_ref().expect("importance selection computed"))
                }
            };
            let (train_v, test_v) = match subset {
                Some(names) => (train.restrict(names)?, test.restrict(names)?),
                None => (train.clone(), test.clone()),
            };
            let score = fit_and_score(model, &train_v, &test_v, cfg, forest_seed)?;
            rmse_by_variant.insert(key.to_string(), score);
        }
    }

    Ok(ExperimentResult {
        location: location.to_string(),
        season,
        k,
        rmse: rmse_by_variant,
        selected_features: selections,
        concordance,
    })
}

/// A cell that could not be evaluated, with the reason.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SkippedCell {
    pub location: String,
    pub season: Season,
    pub k: usize,
    pub reason: String,
}

impl fmt::Display for SkippedCell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{}/k={}: {}",
            self.location, self.season, self.k, self.reason
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct GridOutcome {
    pub results: Vec<ExperimentResult>,
    pub skipped: Vec<SkippedCell>,
}

/// Runs the full location x season x k grid. Cells run in parallel but the
/// output order is always (location, season, k ascending); failing cells are
/// reported in `skipped` without aborting the rest.
pub fn run_grid(
    datasets: &BTreeMap<String, BTreeMap<Season, FeatureTable>>,
    cfg: &ExperimentConfig,
) -> Result<GridOutcome> {
    cfg.validate()?;
    let mut k_values: Vec<usize> = cfg.k_values.clone();
    k_values.sort_unstable();
    k_values.dedup();

    let mut cells: Vec<(&String, Season, &FeatureTable, usize)> = Vec::new();
    for (location, seasons) in datasets {
        for (&season, table) in seasons {
            for &k in &k_values {
                cells.push((location, season, table, k));
            }
        }
    }

    let outcomes: Vec<std::result::Result<ExperimentResult, SkippedCell>> = cells
        .par_iter()
        .map(|&(location, season, table, k)| {
            let skip = |reason: String| SkippedCell {
                location: location.clone(),
                season,
                k,
                reason,
            };
            if table.n_rows() < MIN_CELL_ROWS {
                return Err(skip(format!(
                    "{} rows after filtering, need {MIN_CELL_ROWS}",
                    table.n_rows()
                )));
            }
            run_cell(table, location, season, k, cfg).map_err(|e| skip(e.to_string()))
        })
        .collect();

    let mut grid = GridOutcome::default();
    for outcome in outcomes {
        match outcome {
            Ok(result) => grid.results.push(result),
            Err(skipped) => grid.skipped.push(skipped),
        }
    }
    Ok(grid)
}
