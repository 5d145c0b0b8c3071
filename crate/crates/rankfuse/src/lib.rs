//! Feature selection by rank aggregation.
//!
//! The pipeline: correlate every feature of a table against its target with
//! Pearson, Spearman, and Kendall; turn each correlation vector into a
//! ranking by absolute strength; fuse the three rankings with a Borda count;
//! and validate top-k selections by training random-forest and Bayesian
//! ridge regressors on an 80/20 split, comparing against the unselected base
//! models and the forest's own importance-based selection.
//!
//! ```no_run
//! use rankfuse::correlation::{correlate_all, Metric};
//! use rankfuse::data::load_table;
//! use rankfuse::ranking::{borda, rank_by_strength, rank_from_scores, top_k};
//!
//! let loaded = load_table("weeks.csv", "error")?;
//! let rankings: Vec<_> = Metric::ALL
//!     .iter()
//!     .map(|&m| rank_by_strength(&correlate_all(&loaded.table, m)))
//!     .collect::<Result<_, _>>()?;
//! let fused = rank_from_scores(&borda(&rankings)?)?;
//! let selected = top_k(&fused, 10);
//! # Ok::<(), rankfuse::Error>(())
//! ```
//!
//! Everything is deterministic: a root seed plus the cell identity
//! (location, season, k) fixes every split, bootstrap, and feature draw,
//! independent of thread count.

pub mod config;
pub mod correlation;
pub mod data;
pub mod error;
pub mod evaluation;
pub mod manifest;
pub mod models;
pub mod ranking;
pub mod report;
mod seed;

pub use error::{Error, Result};
