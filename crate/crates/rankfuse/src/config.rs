//! Experiment run configuration: a TOML file naming the datasets plus the
//! experiment parameters. The parsed config is echoed verbatim into the run
//! manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::Season;
use crate::error::{Error, Result};
use crate::evaluation::{ExperimentConfig, ModelKind, SelectionVariant, SplitMode};
use crate::models::{ForestParams, RidgeParams};

fn default_k_values() -> Vec<usize> {
    vec![5, 10, 15, 20, 25]
}

fn default_test_fraction() -> f64 {
    0.2
}

fn default_target() -> String {
    "error".to_string()
}

fn default_variants() -> BTreeSet<SelectionVariant> {
    [
        SelectionVariant::Base,
        SelectionVariant::Aggregated,
        SelectionVariant::ForestImportance,
    ]
    .into()
}

fn default_models() -> BTreeSet<ModelKind> {
    [ModelKind::Forest, ModelKind::BayesianRidge].into()
}

/// One dataset: either a single file with a `date` column (split into
/// seasons on load) or an explicit file per season.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocationConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seasons: Option<BTreeMap<Season, PathBuf>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_k_values")]
    pub k_values: Vec<usize>,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default)]
    pub split: SplitMode,
    #[serde(default = "default_target")]
    pub target: String,
    #[serde(default = "default_variants")]
    pub selection_variants: BTreeSet<SelectionVariant>,
    #[serde(default = "default_models")]
    pub models: BTreeSet<ModelKind>,
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub ridge: RidgeParams,
    pub locations: Vec<LocationConfig>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.locations.is_empty() {
            return Err(Error::InvalidConfig("no locations configured".into()));
        }
        let mut seen = BTreeSet::new();
        for location in &self.locations {
            if !valid_name(&location.name) {
                return Err(Error::InvalidConfig(format!(
                    "location name `{}` must be alphanumeric/_-.",
                    location.name
                )));
            }
            if !seen.insert(&location.name) {
                return Err(Error::InvalidConfig(format!(
                    "duplicate location `{}`",
                    location.name
                )));
            }
            match (&location.path, &location.seasons) {
                (Some(_), None) => {}
                (None, Some(seasons)) if !seasons.is_empty() => {}
                (Some(_), Some(_)) => {
                    return Err(Error::InvalidConfig(format!(
                        "location `{}` sets both `path` and `seasons`",
                        location.name
                    )));
                }
                _ => {
                    return Err(Error::InvalidConfig(format!(
                        "location `{}` needs `path` or `seasons`",
                        location.name
                    )));
                }
            }
        }
        self.experiment_config().validate()
    }

    /// The core experiment parameters, independent of dataset paths.
    pub fn experiment_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            k_values: self.k_values.clone(),
            test_fraction: self.test_fraction,
            seed: self.seed,
            split: self.split,
            forest: self.forest,
            ridge: self.ridge,
            variants: self.selection_variants.clone(),
            models: self.models.clone(),
        }
    }
}
