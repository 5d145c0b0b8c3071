//! Feature tables: loading, validation, seasonal stratification, and
//! synthetic data generation.
//!
//! A [`FeatureTable`] is the unit of all downstream analysis: named numeric
//! feature columns plus one numeric target column, with an optional per-row
//! week stamp (ISO date or integer id). Tables are immutable after
//! construction and safe to share across threads.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Meteorological season, derived from the month of a row's date.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Season {
    #[serde(rename = "DJF")]
    Djf,
    #[serde(rename = "MAM")]
    Mam,
    #[serde(rename = "JJA")]
    Jja,
    #[serde(rename = "SON")]
    Son,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::Djf, Season::Mam, Season::Jja, Season::Son];

    /// Month (1-12) to season: Dec-Feb, Mar-May, Jun-Aug, Sep-Nov.
    pub fn from_month(month: u32) -> Season {
        match month {
            12 | 1 | 2 => Season::Djf,
            3..=5 => Season::Mam,
            6..=8 => Season::Jja,
            9..=11 => Season::Son,
            _ => unreachable!("month out of range: {month}"),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Season::Djf => "DJF",
            Season::Mam => "MAM",
            Season::Jja => "JJA",
            Season::Son => "SON",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Season {
    type Err = Error;

    fn from_str(s: &str) -> Result<Season> {
        match s.to_ascii_uppercase().as_str() {
            "DJF" => Ok(Season::Djf),
            "MAM" => Ok(Season::Mam),
            "JJA" => Ok(Season::Jja),
            "SON" => Ok(Season::Son),
            _ => Err(Error::InvalidConfig(format!("unknown season `{s}`"))),
        }
    }
}

/// Per-row week identification: either calendar dates or bare integer ids.
/// Only dated tables can be split by season.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum WeekIndex {
    Dates(Vec<NaiveDate>),
    Ids(Vec<i64>),
}

impl WeekIndex {
    fn len(&self) -> usize {
        match self {
            WeekIndex::Dates(v) => v.len(),
            WeekIndex::Ids(v) => v.len(),
        }
    }

    fn take(&self, rows: &[usize]) -> WeekIndex {
        match self {
            WeekIndex::Dates(v) => WeekIndex::Dates(rows.iter().map(|&i| v[i]).collect()),
            WeekIndex::Ids(v) => WeekIndex::Ids(rows.iter().map(|&i| v[i]).collect()),
        }
    }
}

/// A validated numeric table: feature columns plus one target column.
///
/// Invariants enforced at construction: unique non-empty feature names, the
/// target name not among them, equal column lengths, and every value finite.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    feature_names: Vec<String>,
    target_name: String,
    columns: Vec<Vec<f64>>,
    target: Vec<f64>,
    week_index: Option<WeekIndex>,
    informative: Option<Vec<String>>,
}

impl FeatureTable {
    pub fn new(
        feature_names: Vec<String>,
        target_name: impl Into<String>,
        columns: Vec<Vec<f64>>,
        target: Vec<f64>,
        week_index: Option<WeekIndex>,
    ) -> Result<FeatureTable> {
        let target_name = target_name.into();
        if target_name.is_empty() {
            return Err(Error::InvalidTable("empty target name".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for name in &feature_names {
            if name.is_empty() {
                return Err(Error::InvalidTable("empty feature name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        if seen.contains(target_name.as_str()) {
            return Err(Error::InvalidTable(format!(
                "target `{target_name}` is also a feature"
            )));
        }
        if columns.len() != feature_names.len() {
            return Err(Error::InvalidTable(format!(
                "{} feature names but {} columns",
                feature_names.len(),
                columns.len()
            )));
        }
        let n_rows = target.len();
        for (name, col) in feature_names.iter().zip(&columns) {
            if col.len() != n_rows {
                return Err(Error::InvalidTable(format!(
                    "column `{name}` has {} rows, target has {n_rows}",
                    col.len()
                )));
            }
            if col.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidTable(format!(
                    "non-finite value in column `{name}`"
                )));
            }
        }
        if target.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidTable("non-finite value in target".into()));
        }
        if let Some(wi) = &week_index {
            if wi.len() != n_rows {
                return Err(Error::InvalidTable(format!(
                    "week index has {} rows, target has {n_rows}",
                    wi.len()
                )));
            }
        }
        Ok(FeatureTable {
            feature_names,
            target_name,
            columns,
            target,
            week_index,
            informative: None,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn target_name(&self) -> &str {
        &self.target_name
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.feature_names
            .iter()
            .position(|n| n == name)
            .map(|j| self.columns[j].as_slice())
    }

    pub fn column_at(&self, index: usize) -> &[f64] {
        &self.columns[index]
    }

    pub fn week_index(&self) -> Option<&WeekIndex> {
        self.week_index.as_ref()
    }

    /// Ground-truth informative feature names, present on synthetic tables.
    pub fn informative_features(&self) -> Option<&[String]> {
        self.informative.as_deref()
    }

    /// Keeps only the named features, preserving the table's original column
    /// order regardless of the order of `subset`.
    pub fn restrict(&self, subset: &[String]) -> Result<FeatureTable> {
        let wanted: std::collections::BTreeSet<&str> =
            subset.iter().map(String::as_str).collect();
        for name in &wanted {
            if !self.feature_names.iter().any(|n| n == name) {
                return Err(Error::UnknownFeature((*name).to_string()));
            }
        }
        let keep: Vec<usize> = (0..self.n_features())
            .filter(|&j| wanted.contains(self.feature_names[j].as_str()))
            .collect();
        Ok(FeatureTable {
            feature_names: keep.iter().map(|&j| self.feature_names[j].clone()).collect(),
            target_name: self.target_name.clone(),
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            target: self.target.clone(),
            week_index: self.week_index.clone(),
            informative: self.informative.clone(),
        })
    }

    /// Row subset in the given order. Panics if an index is out of range.
    pub fn take_rows(&self, rows: &[usize]) -> FeatureTable {
        FeatureTable {
            feature_names: self.feature_names.clone(),
            target_name: self.target_name.clone(),
            columns: self
                .columns
                .iter()
                .map(|col| rows.iter().map(|&i| col[i]).collect())
                .collect(),
            target: rows.iter().map(|&i| self.target[i]).collect(),
            week_index: self.week_index.as_ref().map(|wi| wi.take(rows)),
            informative: self.informative.clone(),
        }
    }
}

/// A loaded table together with the number of rows dropped for missing or
/// non-finite values.
#[derive(Debug)]
pub struct Loaded {
    pub table: FeatureTable,
    pub dropped_rows: usize,
}

fn is_missing(cell: &str) -> bool {
    matches!(
        cell.to_ascii_lowercase().as_str(),
        "" | "na" | "nan" | "null"
    )
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, err: csv::Error) -> Error {
    if err.is_io_error() {
        match err.into_kind() {
            csv::ErrorKind::Io(source) => io_err(path, source),
            _ => unreachable!(),
        }
    } else {
        Error::Malformed {
            path: path.to_path_buf(),
            message: err.to_string(),
        }
    }
}

/// Loads a comma-delimited table with a header row. A column named `date`
/// (ISO-8601 `YYYY-MM-DD`) or `week` (integer id) becomes the week index;
/// every other non-target column is a feature. Rows containing a missing or
/// non-finite cell are dropped and counted; a cell that is neither numeric
/// nor a missing marker is a parse error with its coordinates.
pub fn load_table(path: impl AsRef<Path>, target_name: &str) -> Result<Loaded> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();

    let target_col = headers
        .iter()
        .position(|h| h == target_name)
        .ok_or_else(|| Error::MissingTarget(target_name.to_string()))?;
    let date_col = headers.iter().position(|h| h == "date");
    let week_col = headers.iter().position(|h| h == "week");

    let feature_cols: Vec<usize> = (0..headers.len())
        .filter(|&j| j != target_col && Some(j) != date_col && Some(j) != week_col)
        .collect();
    if feature_cols.is_empty() {
        return Err(Error::InvalidTable("no feature columns".into()));
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); feature_cols.len()];
    let mut target: Vec<f64> = Vec::new();
    let mut dates: Vec<NaiveDate> = Vec::new();
    let mut week_ids: Vec<i64> = Vec::new();
    let mut dropped = 0usize;

    'rows: for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let row = i + 1; // 1-based data row, header excluded
        let mut values = Vec::with_capacity(feature_cols.len() + 1);
        for &j in feature_cols.iter().chain(std::iter::once(&target_col)) {
            let cell = record.get(j).unwrap_or("");
            if is_missing(cell) {
                dropped += 1;
                continue 'rows;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: headers[j].clone(),
                content: cell.to_string(),
            })?;
            if !v.is_finite() {
                dropped += 1;
                continue 'rows;
            }
            values.push(v);
        }
        if let Some(j) = date_col {
            let cell = record.get(j).unwrap_or("");
            if is_missing(cell) {
                dropped += 1;
                continue 'rows;
            }
            let date = NaiveDate::parse_from_str(cell, "%Y-%m-%d").map_err(|_| Error::Parse {
                row,
                column: "date".into(),
                content: cell.to_string(),
            })?;
            dates.push(date);
        } else if let Some(j) = week_col {
            let cell = record.get(j).unwrap_or("");
            if is_missing(cell) {
                dropped += 1;
                continue 'rows;
            }
            let id: i64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: "week".into(),
                content: cell.to_string(),
            })?;
            week_ids.push(id);
        }
        let target_value = values.pop().expect("target parsed last");
        for (col, v) in columns.iter_mut().zip(values) {
            col.push(v);
        }
        target.push(target_value);
    }

    if target.len() < 2 {
        return Err(Error::EmptyAfterFilter {
            kept: target.len(),
            dropped,
        });
    }

    let week_index = if date_col.is_some() {
        Some(WeekIndex::Dates(dates))
    } else if week_col.is_some() {
        Some(WeekIndex::Ids(week_ids))
    } else {
        None
    };

    let table = FeatureTable::new(
        feature_cols.iter().map(|&j| headers[j].clone()).collect(),
        target_name,
        columns,
        target,
        week_index,
    )?;
    Ok(Loaded {
        table,
        dropped_rows: dropped,
    })
}

/// Writes a table back to comma-delimited text. Floats use the shortest
/// representation that round-trips, so re-loading reproduces every value
/// bit for bit.
pub fn write_table(table: &FeatureTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;

    let mut header: Vec<String> = Vec::new();
    match table.week_index() {
        Some(WeekIndex::Dates(_)) => header.push("date".into()),
        Some(WeekIndex::Ids(_)) => header.push("week".into()),
        None => {}
    }
    header.extend(table.feature_names().iter().cloned());
    header.push(table.target_name().to_string());
    writer.write_record(&header).map_err(|e| csv_err(path, e))?;

    for i in 0..table.n_rows() {
        let mut record: Vec<String> = Vec::with_capacity(header.len());
        match table.week_index() {
            Some(WeekIndex::Dates(d)) => record.push(d[i].format("%Y-%m-%d").to_string()),
            Some(WeekIndex::Ids(ids)) => record.push(ids[i].to_string()),
            None => {}
        }
        for j in 0..table.n_features() {
            record.push(format!("{}", table.column_at(j)[i]));
        }
        record.push(format!("{}", table.target()[i]));
        writer.write_record(&record).map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Partitions rows by the season of their date. Requires a dated week index.
/// All four seasons appear in the output, possibly with zero rows.
pub fn split_by_season(table: &FeatureTable) -> Result<BTreeMap<Season, FeatureTable>> {
    let dates = match table.week_index() {
        Some(WeekIndex::Dates(d)) => d,
        _ => return Err(Error::NoDates),
    };
    let mut buckets: BTreeMap<Season, Vec<usize>> =
        Season::ALL.iter().map(|&s| (s, Vec::new())).collect();
    for (i, date) in dates.iter().enumerate() {
        buckets
            .get_mut(&Season::from_month(date.month()))
            .expect("all seasons present")
            .push(i);
    }
    Ok(buckets
        .into_iter()
        .map(|(season, rows)| (season, table.take_rows(&rows)))
        .collect())
}

/// Recipe for a deterministic synthetic table: the same spec always yields
/// a bit-identical table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub n_rows: usize,
    pub n_features: usize,
    /// How many features actually drive the target.
    pub n_informative: usize,
    /// Standard deviation of the Gaussian noise added to the target.
    pub noise_sd: f64,
    /// Correlation between redundant copies and their source feature, in [0, 1).
    pub pairwise_corr: f64,
    /// Scale of the mild nonlinear term in the target; 0 gives a purely
    /// linear target.
    pub nonlinear_scale: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn new(n_rows: usize, n_features: usize, n_informative: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            n_rows,
            n_features,
            n_informative,
            noise_sd: 1.0,
            pairwise_corr: 0.0,
            nonlinear_scale: 0.25,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_rows == 0 {
            return Err(Error::InvalidSpec("n_rows must be positive".into()));
        }
        if self.n_features == 0 {
            return Err(Error::InvalidSpec("n_features must be positive".into()));
        }
        if self.n_informative > self.n_features {
            return Err(Error::InvalidSpec(format!(
                "n_informative ({}) exceeds n_features ({})",
                self.n_informative, self.n_features
            )));
        }
        if !self.noise_sd.is_finite() || self.noise_sd < 0.0 {
            return Err(Error::InvalidSpec("noise_sd must be nonnegative".into()));
        }
        if !self.pairwise_corr.is_finite() || !(0.0..1.0).contains(&self.pairwise_corr) {
            return Err(Error::InvalidSpec("pairwise_corr must be in [0, 1)".into()));
        }
        if !self.nonlinear_scale.is_finite() || self.nonlinear_scale < 0.0 {
            return Err(Error::InvalidSpec(
                "nonlinear_scale must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Names features `f01`, `f02`, ... with enough zero padding that
/// lexicographic order matches numeric order.
fn feature_name(index: usize, n_features: usize) -> String {
    let width = n_features.to_string().len();
    format!("f{:0width$}", index + 1)
}

/// Generates a table where the target is a linear combination of the
/// informative features plus an optional mild nonlinear term and Gaussian
/// noise. Non-informative features are standard-normal noise; when
/// `pairwise_corr > 0`, some of them become correlated copies of informative
/// features instead. Informative names are recorded on the table.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<FeatureTable> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_rows;
    let p = spec.n_features;

    let informative: Vec<usize> = {
        let mut idx = rand::seq::index::sample(&mut rng, p, spec.n_informative).into_vec();
        idx.sort_unstable();
        idx
    };

    // Weight magnitudes near 1 keep the per-feature signal comparable.
    let weights: Vec<f64> = (0..spec.n_informative)
        .map(|_| {
            let magnitude = rng.gen_range(0.8..1.2);
            if rng.gen_bool(0.5) {
                magnitude
            } else {
                -magnitude
            }
        })
        .collect();

    let mut columns: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..n).map(|_| rng.sample(StandardNormal)).collect())
        .collect();

    if spec.pairwise_corr > 0.0 && !informative.is_empty() {
        let noise_features: Vec<usize> =
            (0..p).filter(|j| !informative.contains(j)).collect();
        let n_redundant = spec.n_informative.min(noise_features.len());
        let blend = (1.0 - spec.pairwise_corr * spec.pairwise_corr).sqrt();
        for (r, &j) in noise_features.iter().take(n_redundant).enumerate() {
            let source = informative[r % spec.n_informative];
            for i in 0..n {
                columns[j][i] =
                    spec.pairwise_corr * columns[source][i] + blend * columns[j][i];
            }
        }
    }

    let target: Vec<f64> = (0..n)
        .map(|i| {
            let linear: f64 = informative
                .iter()
                .zip(&weights)
                .map(|(&j, &w)| w * columns[j][i])
                .sum();
            let nonlinear = match informative.len() {
                0 => 0.0,
                1 => {
                    let x = columns[informative[0]][i];
                    x * x - 1.0
                }
                _ => columns[informative[0]][i] * columns[informative[1]][i],
            };
            let noise: f64 = rng.sample(StandardNormal);
            linear + spec.nonlinear_scale * nonlinear + spec.noise_sd * noise
        })
        .collect();

    let names: Vec<String> = (0..p).map(|j| feature_name(j, p)).collect();
    let informative_names: Vec<String> = informative.iter().map(|&j| names[j].clone()).collect();

    let mut table = FeatureTable::new(names, "error", columns, target, None)?;
    table.informative = Some(informative_names);
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::io::Write;

    fn write_fixture(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file.flush().unwrap();
        file
    }

    #[test]
    fn load_minimal_two_rows() {
        let file = write_fixture("a,b,error\n1.0,2.0,3.0\n4.0,5.0,6.0\n");
        let loaded = load_table(file.path(), "error").unwrap();
        assert_eq!(loaded.table.n_rows(), 2);
        assert_eq!(loaded.table.n_features(), 2);
        assert_eq!(loaded.dropped_rows, 0);
        assert_eq!(loaded.table.column("a").unwrap(), &[1.0, 4.0]);
        assert_eq!(loaded.table.target(), &[3.0, 6.0]);
    }

    #[test]
    fn load_drops_rows_with_missing_or_nonfinite() {
        // 10 data rows, 3 of them unusable: one empty cell, one NaN, one inf.
        let file = write_fixture(
            "a,b,error\n\
             1,1,1\n2,2,2\n3,,3\n4,4,4\n5,5,NaN\n6,6,6\n7,7,7\ninf,8,8\n9,9,9\n10,10,10\n",
        );
        let loaded = load_table(file.path(), "error").unwrap();
        assert_eq!(loaded.table.n_rows(), 7);
        assert_eq!(loaded.dropped_rows, 3);
    }

    #[test]
    fn load_missing_target_column() {
        let file = write_fixture("a,b,c\n1,2,3\n4,5,6\n");
        match load_table(file.path(), "error") {
            Err(Error::MissingTarget(name)) => assert_eq!(name, "error"),
            other => panic!("expected MissingTarget, got {other:?}"),
        }
    }

    #[test]
    fn load_reports_parse_coordinates() {
        let file = write_fixture("a,error\n1,2\nbogus,4\n");
        match load_table(file.path(), "error") {
            Err(Error::Parse { row, column, content }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "a");
                assert_eq!(content, "bogus");
            }
            other => panic!("expected Parse, got {other:?}"),
        }
    }

    #[test]
    fn load_rejects_tables_below_two_rows() {
        let file = write_fixture("a,error\n1,2\nNaN,4\n");
        match load_table(file.path(), "error") {
            Err(Error::EmptyAfterFilter { kept, dropped }) => {
                assert_eq!(kept, 1);
                assert_eq!(dropped, 1);
            }
            other => panic!("expected EmptyAfterFilter, got {other:?}"),
        }
    }

    #[test]
    fn roundtrip_preserves_awkward_floats() {
        let table = FeatureTable::new(
            vec!["a".into()],
            "error",
            vec![vec![0.1, -0.0, 1e308, 5e-324, -1.2345678901234567]],
            vec![1.0, 2.0, 3.0, 4.0, 5.0],
            None,
        )
        .unwrap();
        let file = tempfile::NamedTempFile::new().unwrap();
        write_table(&table, file.path()).unwrap();
        let loaded = load_table(file.path(), "error").unwrap();
        let reloaded = loaded.table.column("a").unwrap();
        for (orig, new) in table.column("a").unwrap().iter().zip(reloaded) {
            assert_eq!(orig.to_bits(), new.to_bits());
        }
    }

    #[test]
    fn split_assigns_months_to_seasons() {
        // One row per month; 3 rows per season.
        let dates: Vec<NaiveDate> = (1..=12)
            .map(|m| NaiveDate::from_ymd_opt(2005, m, 15).unwrap())
            .collect();
        let table = FeatureTable::new(
            vec!["a".into()],
            "error",
            vec![(0..12).map(f64::from).collect()],
            (0..12).map(f64::from).collect(),
            Some(WeekIndex::Dates(dates)),
        )
        .unwrap();
        let parts = split_by_season(&table).unwrap();
        for season in Season::ALL {
            assert_eq!(parts[&season].n_rows(), 3, "{season}");
        }
        let total: usize = parts.values().map(FeatureTable::n_rows).sum();
        assert_eq!(total, 12);
    }

    #[test]
    fn split_single_month_leaves_other_seasons_empty() {
        let dates: Vec<NaiveDate> = (1..=4)
            .map(|d| NaiveDate::from_ymd_opt(2005, 1, d * 7).unwrap())
            .collect();
        let table = FeatureTable::new(
            vec!["a".into()],
            "error",
            vec![vec![1.0, 2.0, 3.0, 4.0]],
            vec![1.0, 2.0, 3.0, 4.0],
            Some(WeekIndex::Dates(dates)),
        )
        .unwrap();
        let parts = split_by_season(&table).unwrap();
        assert_eq!(parts[&Season::Djf].n_rows(), 4);
        assert_eq!(parts[&Season::Mam].n_rows(), 0);
        assert_eq!(parts[&Season::Jja].n_rows(), 0);
        assert_eq!(parts[&Season::Son].n_rows(), 0);
    }

    #[test]
    fn split_requires_dates() {
        let table = FeatureTable::new(
            vec!["a".into()],
            "error",
            vec![vec![1.0, 2.0]],
            vec![1.0, 2.0],
            Some(WeekIndex::Ids(vec![1, 2])),
        )
        .unwrap();
        assert!(matches!(split_by_season(&table), Err(Error::NoDates)));
    }

    #[test]
    fn synthetic_shape_and_metadata() {
        let spec = SyntheticSpec::new(225, 36, 5, 7);
        let table = generate_synthetic(&spec).unwrap();
        assert_eq!(table.n_rows(), 225);
        assert_eq!(table.n_features(), 36);
        assert_eq!(table.informative_features().unwrap().len(), 5);
        assert_eq!(table.target_name(), "error");
    }

    #[test]
    fn synthetic_is_deterministic() {
        let spec = SyntheticSpec::new(50, 10, 3, 42);
        let a = generate_synthetic(&spec).unwrap();
        let b = generate_synthetic(&spec).unwrap();
        assert_eq!(a, b);
        let different = generate_synthetic(&SyntheticSpec::new(50, 10, 3, 43)).unwrap();
        assert_ne!(a, different);
    }

    #[test]
    fn synthetic_rejects_bad_specs() {
        assert!(generate_synthetic(&SyntheticSpec::new(0, 5, 2, 1)).is_err());
        assert!(generate_synthetic(&SyntheticSpec::new(10, 5, 6, 1)).is_err());
        let mut spec = SyntheticSpec::new(10, 5, 2, 1);
        spec.noise_sd = -1.0;
        assert!(generate_synthetic(&spec).is_err());
        let mut spec = SyntheticSpec::new(10, 5, 2, 1);
        spec.pairwise_corr = 1.0;
        assert!(generate_synthetic(&spec).is_err());
    }

    /// Solves the least-squares problem on the informative block by normal
    /// equations with plain Gaussian elimination; independent of any model
    /// code in this crate.
    fn ols_residual_norm(table: &FeatureTable) -> f64 {
        let names = table.informative_features().unwrap().to_vec();
        let cols: Vec<&[f64]> = names.iter().map(|n| table.column(n).unwrap()).collect();
        let y = table.target();
        let n = y.len();
        let p = cols.len() + 1; // + intercept
        let mut gram = vec![vec![0.0; p + 1]; p];
        let value = |i: usize, j: usize| -> f64 {
            if j == 0 {
                1.0
            } else {
                cols[j - 1][i]
            }
        };
        for a in 0..p {
            for b in 0..p {
                gram[a][b] = (0..n).map(|i| value(i, a) * value(i, b)).sum();
            }
            gram[a][p] = (0..n).map(|i| value(i, a) * y[i]).sum();
        }
        for col in 0..p {
            let pivot = (col..p)
                .max_by(|&a, &b| gram[a][col].abs().partial_cmp(&gram[b][col].abs()).unwrap())
                .unwrap();
            gram.swap(col, pivot);
            for row in 0..p {
                if row != col && gram[col][col] != 0.0 {
                    let factor = gram[row][col] / gram[col][col];
                    for k in col..=p {
                        gram[row][k] -= factor * gram[col][k];
                    }
                }
            }
        }
        let beta: Vec<f64> = (0..p).map(|a| gram[a][p] / gram[a][a]).collect();
        (0..n)
            .map(|i| {
                let fit: f64 = (0..p).map(|a| beta[a] * value(i, a)).sum();
                (y[i] - fit).powi(2)
            })
            .sum::<f64>()
            .sqrt()
    }

    #[test]
    fn synthetic_noiseless_linear_target_is_exactly_linear() {
        let mut spec = SyntheticSpec::new(80, 12, 4, 11);
        spec.noise_sd = 0.0;
        spec.nonlinear_scale = 0.0;
        let table = generate_synthetic(&spec).unwrap();
        assert!(ols_residual_norm(&table) < 1e-9);
    }

    #[test]
    fn synthetic_redundant_copies_correlate_with_sources() {
        let mut spec = SyntheticSpec::new(500, 8, 2, 3);
        spec.pairwise_corr = 0.9;
        spec.noise_sd = 0.5;
        let table = generate_synthetic(&spec).unwrap();
        let informative = table.informative_features().unwrap().to_vec();
        let noise_names: Vec<String> = table
            .feature_names()
            .iter()
            .filter(|n| !informative.contains(n))
            .cloned()
            .collect();
        // The first two non-informative features are copies of the sources.
        let best: f64 = noise_names
            .iter()
            .take(2)
            .map(|copy| {
                informative
                    .iter()
                    .map(|src| {
                        crate::correlation::pearson(
                            table.column(copy).unwrap(),
                            table.column(src).unwrap(),
                        )
                        .unwrap()
                        .abs()
                    })
                    .fold(0.0, f64::max)
            })
            .fold(1.0, f64::min);
        assert!(best > 0.8, "expected strong copy correlation, got {best}");
    }

    proptest! {
        #[test]
        fn roundtrip_is_bit_exact(
            values in proptest::collection::vec(-1e15f64..1e15, 2..40),
            targets_offset in -100.0f64..100.0,
        ) {
            let targets: Vec<f64> = values.iter().map(|v| v * 0.5 + targets_offset).collect();
            let table = FeatureTable::new(
                vec!["a".into()],
                "error",
                vec![values],
                targets,
                None,
            ).unwrap();
            let file = tempfile::NamedTempFile::new().unwrap();
            write_table(&table, file.path()).unwrap();
            let loaded = load_table(file.path(), "error").unwrap();
            prop_assert_eq!(loaded.dropped_rows, 0);
            let before = table.column("a").unwrap();
            let after = loaded.table.column("a").unwrap();
            for (x, y) in before.iter().zip(after) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
            for (x, y) in table.target().iter().zip(loaded.table.target()) {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        #[test]
        fn season_split_partitions_rows(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let n = rng.gen_range(4usize..60);
            let dates: Vec<NaiveDate> = (0..n)
                .map(|_| {
                    NaiveDate::from_ymd_opt(
                        rng.gen_range(2001..2018),
                        rng.gen_range(1..=12),
                        rng.gen_range(1..=28),
                    )
                    .unwrap()
                })
                .collect();
            let col: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let table = FeatureTable::new(
                vec!["a".into()],
                "error",
                vec![col.clone()],
                col,
                Some(WeekIndex::Dates(dates)),
            ).unwrap();
            let parts = split_by_season(&table).unwrap();
            let total: usize = parts.values().map(FeatureTable::n_rows).sum();
            prop_assert_eq!(total, n);
            // Disjoint: every row value appears exactly once across parts.
            let mut seen: Vec<f64> = parts
                .values()
                .flat_map(|t| t.target().to_vec())
                .collect();
            seen.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let expected: Vec<f64> = (0..n).map(|i| i as f64).collect();
            prop_assert_eq!(seen, expected);
        }
    }
}
