//! Pearson, Spearman, and Kendall correlation of features against a target.
//!
//! All three metrics take finite sequences of equal length n >= 2. Spearman
//! uses average ranks under ties (Pearson applied to the rank transforms);
//! Kendall is the tau-a variant: (concordant - discordant) / (n(n-1)/2),
//! with tied pairs counting as neither.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::FeatureTable;
use crate::error::{Error, Result};
use crate::ranking::rank_transform;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Pearson,
    Spearman,
    Kendall,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Pearson, Metric::Spearman, Metric::Kendall];

    pub fn compute(self, x: &[f64], y: &[f64]) -> Result<f64> {
        match self {
            Metric::Pearson => pearson(x, y),
            Metric::Spearman => spearman(x, y),
            Metric::Kendall => kendall(x, y),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Metric::Pearson => "pearson",
            Metric::Spearman => "spearman",
            Metric::Kendall => "kendall",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Metric> {
        match s.to_ascii_lowercase().as_str() {
            "pearson" => Ok(Metric::Pearson),
            "spearman" => Ok(Metric::Spearman),
            "kendall" => Ok(Metric::Kendall),
            _ => Err(Error::InvalidConfig(format!("unknown metric `{s}`"))),
        }
    }
}

/// Per-feature correlation values against the target, for one metric.
#[derive(Clone, Debug, Serialize)]
pub struct CorrelationVector {
    pub metric: Metric,
    pub values: BTreeMap<String, f64>,
    /// Sample count the correlations were computed from.
    pub n: usize,
    /// Features assigned 0 by convention because the correlation was
    /// undefined (constant feature, or constant target).
    pub flagged_constant: Vec<String>,
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::TooFewSamples {
            need: 2,
            got: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Linear correlation: covariance over the product of standard deviations.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Rank correlation: Pearson applied to the average-rank transforms. On
/// tie-free data this equals the closed form 1 - 6*sum(d^2)/(n(n^2-1)).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    pearson(&rank_transform(x), &rank_transform(y))
}

/// Ordinal association by direct pair counting (tau-a). Pairs tied in either
/// variable count as neither concordant nor discordant; the denominator is
/// always n(n-1)/2.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64> {
    check_pair(x, y)?;
    let n = x.len();
    let mut concordant: u64 = 0;
    let mut discordant: u64 = 0;
    for i in 0..n {
        for j in (i + 1)..n {
            let ox = x[i].partial_cmp(&x[j]).expect("finite");
            let oy = y[i].partial_cmp(&y[j]).expect("finite");
            if ox == std::cmp::Ordering::Equal || oy == std::cmp::Ordering::Equal {
                continue;
            }
            if ox == oy {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let total_pairs = (n * (n - 1) / 2) as f64;
    Ok((concordant as f64 - discordant as f64) / total_pairs)
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

/// Correlates every feature against the target with the chosen metric.
/// Degenerate columns (constant feature, constant target, or fewer than two
/// rows) get the value 0 and are flagged instead of failing, so selection
/// can always proceed. Features are evaluated in parallel; the result does
/// not depend on evaluation order.
pub fn correlate_all(table: &FeatureTable, metric: Metric) -> CorrelationVector {
    let target = table.target();
    let target_degenerate = target.len() < 2 || is_constant(target);
    let mut entries: Vec<(String, f64, bool)> = table
        .feature_names()
        .par_iter()
        .enumerate()
        .map(|(j, name)| {
            let x = table.column_at(j);
            if target_degenerate || is_constant(x) {
                return (name.clone(), 0.0, true);
            }
            match metric.compute(x, target) {
                Ok(v) => (name.clone(), v, false),
                Err(_) => (name.clone(), 0.0, true),
            }
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));

    let mut values = BTreeMap::new();
    let mut flagged = Vec::new();
    for (name, value, flag) in entries {
        if flag {
            flagged.push(name.clone());
        }
        values.insert(name, value);
    }
    CorrelationVector {
        metric,
        values,
        n: table.n_rows(),
        flagged_constant: flagged,
    }
}
