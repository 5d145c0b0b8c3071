//! Rankings over feature names, Borda-count fusion, and rank concordance.
//!
//! A [`Ranking`] is a permutation: position 1 is the most important item.
//! Correlation vectors become rankings by absolute value (a strong negative
//! correlation is as influential as a strong positive one); ties break by
//! ascending name so results are reproducible everywhere.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationVector;
use crate::error::{Error, Result};

/// Average-rank transform: values map to 1-based positions in sorted order,
/// ties receiving the mean of the positions they span.
///
/// Panics on non-finite values; callers compare with `partial_cmp`.
pub fn rank_transform(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // Positions i+1 ..= j+1 share one value; average them.
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// An ordered permutation of item names with 1-based positions.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ranking {
    items: Vec<String>,
    positions: BTreeMap<String, usize>,
}

impl Ranking {
    /// Builds a ranking from items listed best-first.
    pub fn from_items(items: Vec<String>) -> Result<Ranking> {
        if items.is_empty() {
            return Err(Error::Empty);
        }
        let mut positions = BTreeMap::new();
        for (i, item) in items.iter().enumerate() {
            if positions.insert(item.clone(), i + 1).is_some() {
                return Err(Error::DuplicateFeature(item.clone()));
            }
        }
        Ok(Ranking { items, positions })
    }

    pub fn items(&self) -> &[String] {
        &self.items
    }

    pub fn position(&self, item: &str) -> Option<usize> {
        self.positions.get(item).copied()
    }

    pub fn positions(&self) -> &BTreeMap<String, usize> {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn reversed(&self) -> Ranking {
        let items: Vec<String> = self.items.iter().rev().cloned().collect();
        Ranking::from_items(items).expect("reversal preserves validity")
    }

    fn same_items(&self, other: &Ranking) -> bool {
        self.len() == other.len()
            && self
                .positions
                .keys()
                .zip(other.positions.keys())
                .all(|(a, b)| a == b)
    }
}

/// Accumulated Borda points per item.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BordaScores {
    pub scores: BTreeMap<String, f64>,
}

/// Orders features by absolute correlation, strongest first; ties break by
/// ascending feature name.
pub fn rank_by_strength(corr: &CorrelationVector) -> Result<Ranking> {
    let mut entries: Vec<(&String, f64)> =
        corr.values.iter().map(|(name, &v)| (name, v.abs())).collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then_with(|| a.0.cmp(b.0)));
    Ranking::from_items(entries.into_iter().map(|(name, _)| name.clone()).collect())
}

/// Borda count: each ranking awards an item N - position + 1 points; scores
/// sum across rankings. All rankings must cover the same item set.
pub fn borda(rankings: &[Ranking]) -> Result<BordaScores> {
    let first = rankings.first().ok_or(Error::Empty)?;
    let n = first.len();
    let mut scores: BTreeMap<String, f64> =
        first.positions().keys().map(|k| (k.clone(), 0.0)).collect();
    for ranking in rankings {
        if !first.same_items(ranking) {
            return Err(Error::ItemSetMismatch);
        }
        for (item, &position) in ranking.positions() {
            *scores.get_mut(item).expect("same item set") += (n - position + 1) as f64;
        }
    }
    Ok(BordaScores { scores })
}

/// Orders items by descending score; ties break by ascending name.
pub fn rank_from_scores(scores: &BordaScores) -> Result<Ranking> {
    let mut entries: Vec<(&String, f64)> = scores.scores.iter().map(|(k, &v)| (k, v)).collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("finite").then_with(|| a.0.cmp(b.0)));
    Ranking::from_items(entries.into_iter().map(|(name, _)| name.clone()).collect())
}

/// First `k` items, order preserved; `k` larger than the ranking clamps to
/// the full item list.
pub fn top_k(ranking: &Ranking, k: usize) -> Vec<String> {
    ranking.items()[..k.min(ranking.len())].to_vec()
}

/// Kendall tau between two rankings' position vectors (tau-a; rankings are
/// tie-free by construction). Single-item rankings agree trivially.
pub fn concordance(a: &Ranking, b: &Ranking) -> Result<f64> {
    if !a.same_items(b) {
        return Err(Error::ItemSetMismatch);
    }
    if a.len() < 2 {
        return Ok(1.0);
    }
    let pos_a: Vec<f64> = a.positions().values().map(|&p| p as f64).collect();
    let pos_b: Vec<f64> = b.positions().values().map(|&p| p as f64).collect();
    crate::correlation::kendall(&pos_a, &pos_b)
}

/// Agreement summary for three metric rankings and their fusion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcordanceReport {
    /// Mean of the three pairwise concordances among the metric rankings.
    pub mean_pairwise: f64,
    /// Mean concordance of the fused ranking against each metric ranking.
    pub mean_vs_borda: f64,
}

pub fn concordance_report(
    pearson: &Ranking,
    spearman: &Ranking,
    kendall: &Ranking,
    fused: &Ranking,
) -> Result<ConcordanceReport> {
    let mean_pairwise = (concordance(pearson, spearman)?
        + concordance(pearson, kendall)?
        + concordance(spearman, kendall)?)
        / 3.0;
    let mean_vs_borda = (concordance(fused, pearson)?
        + concordance(fused, spearman)?
        + concordance(fused, kendall)?)
        / 3.0;
    Ok(ConcordanceReport {
        mean_pairwise,
        mean_vs_borda,
    })
}
