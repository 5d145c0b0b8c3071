//! Serializers for the artifacts the CLI writes: correlation tables,
//! rankings, the concordance record, and the experiment result exports
//! (long form, pivots, radial series, k-sweep series).
//!
//! Floats are written in shortest round-trip form so reruns produce
//! byte-identical files.

use std::collections::BTreeSet;

use crate::correlation::CorrelationVector;
use crate::data::Season;
use crate::evaluation::ExperimentResult;
use crate::ranking::{ConcordanceReport, Ranking};

fn csv_field(value: &str) -> String {
    if value.contains([',', '"', '\n']) {
        format!("\"{}\"", value.replace('"', "\"\""))
    } else {
        value.to_string()
    }
}

fn line(fields: &[String]) -> String {
    let mut out = fields
        .iter()
        .map(|f| csv_field(f))
        .collect::<Vec<_>>()
        .join(",");
    out.push('\n');
    out
}

/// Two-column (feature, value) table sorted by absolute value descending,
/// ties by ascending name.
pub fn correlation_csv(corr: &CorrelationVector) -> String {
    let mut entries: Vec<(&String, f64)> = corr.values.iter().map(|(k, &v)| (k, v)).collect();
    entries.sort_by(|a, b| {
        b.1.abs()
            .partial_cmp(&a.1.abs())
            .expect("finite")
            .then_with(|| a.0.cmp(b.0))
    });
    let mut out = line(&["feature".into(), "value".into()]);
    for (name, value) in entries {
        out.push_str(&line(&[name.clone(), format!("{value}")]));
    }
    out
}

/// Two-column (position, feature) table, best first.
pub fn ranking_csv(ranking: &Ranking) -> String {
    let mut out = line(&["position".into(), "feature".into()]);
    for (i, item) in ranking.items().iter().enumerate() {
        out.push_str(&line(&[(i + 1).to_string(), item.clone()]));
    }
    out
}

/// Flat key/value record of the concordance summary.
pub fn concordance_csv(report: &ConcordanceReport) -> String {
    let mut out = line(&["key".into(), "value".into()]);
    out.push_str(&line(&[
        "mean_pairwise".into(),
        format!("{}", report.mean_pairwise),
    ]));
    out.push_str(&line(&[
        "mean_vs_borda".into(),
        format!("{}", report.mean_vs_borda),
    ]));
    out
}

/// All RMSE values in long form: location, season, k, variant, rmse.
pub fn long_form_csv(results: &[ExperimentResult]) -> String {
    let mut out = line(&[
        "location".into(),
        "season".into(),
        "k".into(),
        "variant".into(),
        "rmse".into(),
    ]);
    for result in results {
        for (variant, value) in &result.rmse {
            out.push_str(&line(&[
                result.location.clone(),
                result.season.to_string(),
                result.k.to_string(),
                variant.clone(),
                format!("{value}"),
            ]));
        }
    }
    out
}

/// Every variant key present in the results.
pub fn variant_keys(results: &[ExperimentResult]) -> BTreeSet<String> {
    results
        .iter()
        .flat_map(|r| r.rmse.keys().cloned())
        .collect()
}

/// All locations present in the results, sorted.
pub fn locations(results: &[ExperimentResult]) -> BTreeSet<String> {
    results.iter().map(|r| r.location.clone()).collect()
}

fn lookup(
    results: &[ExperimentResult],
    location: &str,
    season: Season,
    k: usize,
    variant: &str,
) -> Option<f64> {
    results
        .iter()
        .find(|r| r.location == location && r.season == season && r.k == k)
        .and_then(|r| r.rmse.get(variant).copied())
}

/// Location-by-season matrix for one variant at one k, matching the layout
/// of per-variant error tables. Missing cells stay empty.
pub fn pivot_csv(results: &[ExperimentResult], variant: &str, k: usize) -> String {
    let mut header = vec!["location".to_string()];
    header.extend(Season::ALL.iter().map(|s| s.to_string()));
    let mut out = line(&header);
    for location in locations(results) {
        let mut fields = vec![location.clone()];
        for season in Season::ALL {
            fields.push(
                lookup(results, &location, season, k, variant)
                    .map(|v| format!("{v}"))
                    .unwrap_or_default(),
            );
        }
        out.push_str(&line(&fields));
    }
    out
}

/// RMSE by location for one (season, k): one row per location, one column
/// per variant. This is the series behind a radial plot.
pub fn radial_csv(results: &[ExperimentResult], season: Season, k: usize) -> String {
    let variants = variant_keys(results);
    let mut header = vec!["location".to_string()];
    header.extend(variants.iter().cloned());
    let mut out = line(&header);
    for location in locations(results) {
        let mut fields = vec![location.clone()];
        for variant in &variants {
            fields.push(
                lookup(results, &location, season, k, variant)
                    .map(|v| format!("{v}"))
                    .unwrap_or_default(),
            );
        }
        out.push_str(&line(&fields));
    }
    out
}

/// RMSE against k for one (location, season): one row per k, one column per
/// variant. This is the series behind a k-sweep plot.
pub fn ksweep_csv(results: &[ExperimentResult], location: &str, season: Season) -> String {
    let variants = variant_keys(results);
    let ks: BTreeSet<usize> = results
        .iter()
        .filter(|r| r.location == location && r.season == season)
        .map(|r| r.k)
        .collect();
    let mut header = vec!["k".to_string()];
    header.extend(variants.iter().cloned());
    let mut out = line(&header);
    for k in ks {
        let mut fields = vec![k.to_string()];
        for variant in &variants {
            fields.push(
                lookup(results, location, season, k, variant)
                    .map(|v| format!("{v}"))
                    .unwrap_or_default(),
            );
        }
        out.push_str(&line(&fields));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlation::Metric;
    use crate::ranking::Ranking;
    use std::collections::BTreeMap;

    fn sample_results() -> Vec<ExperimentResult> {
        let mut results = Vec::new();
        for (location, base) in [("north", 1.0), ("south", 2.0)] {
            for (si, season) in Season::ALL.into_iter().enumerate() {
                for k in [2usize, 4] {
                    let mut rmse = BTreeMap::new();
                    rmse.insert("rf_base".to_string(), base + si as f64);
                    rmse.insert("rf_1".to_string(), base + si as f64 + 0.5);
                    results.push(ExperimentResult {
                        location: location.to_string(),
                        season,
                        k,
                        rmse,
                        selected_features: BTreeMap::new(),
                        concordance: crate::ranking::ConcordanceReport {
                            mean_pairwise: 0.5,
                            mean_vs_borda: 0.75,
                        },
                    });
                }
            }
        }
        results
    }

    #[test]
    fn correlation_csv_sorts_by_strength() {
        let corr = CorrelationVector {
            metric: Metric::Spearman,
            values: [("a", 0.2), ("b", -0.9), ("c", 0.5)]
                .iter()
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
            n: 10,
            flagged_constant: vec![],
        };
        let text = correlation_csv(&corr);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "feature,value");
        assert_eq!(lines[1], "b,-0.9");
        assert_eq!(lines[2], "c,0.5");
        assert_eq!(lines[3], "a,0.2");
    }

    #[test]
    fn ranking_csv_lists_positions() {
        let ranking =
            Ranking::from_items(vec!["b".into(), "a".into()]).unwrap();
        assert_eq!(ranking_csv(&ranking), "position,feature\n1,b\n2,a\n");
    }

    #[test]
    fn long_form_has_a_row_per_variant() {
        let results = sample_results();
        let text = long_form_csv(&results);
        // 2 locations x 4 seasons x 2 ks x 2 variants + header
        assert_eq!(text.lines().count(), 2 * 4 * 2 * 2 + 1);
        assert!(text.starts_with("location,season,k,variant,rmse\n"));
        assert!(text.contains("north,DJF,2,rf_base,1\n"));
    }

    #[test]
    fn pivot_lays_out_location_by_season() {
        let results = sample_results();
        let text = pivot_csv(&results, "rf_base", 2);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "location,DJF,MAM,JJA,SON");
        assert_eq!(lines[1], "north,1,2,3,4");
        assert_eq!(lines[2], "south,2,3,4,5");
    }

    #[test]
    fn radial_and_ksweep_cover_variants() {
        let results = sample_results();
        let radial = radial_csv(&results, Season::Mam, 4);
        assert!(radial.starts_with("location,rf_1,rf_base\n"));
        assert_eq!(radial.lines().count(), 3);

        let sweep = ksweep_csv(&results, "south", Season::Son);
        let lines: Vec<&str> = sweep.lines().collect();
        assert_eq!(lines[0], "k,rf_1,rf_base");
        assert_eq!(lines[1], "2,5.5,5");
        assert_eq!(lines[2], "4,5.5,5");
    }

    #[test]
    fn fields_with_commas_are_quoted() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
