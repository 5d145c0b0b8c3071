use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use rankfuse::config::{LocationConfig, RunConfig};
use rankfuse::correlation::{correlate_all, CorrelationVector, Metric};
use rankfuse::data::{
    generate_synthetic, load_table, split_by_season, write_table, FeatureTable, Season,
    SyntheticSpec,
};
use rankfuse::error::Error;
use rankfuse::evaluation::{run_grid, ExperimentResult, GridOutcome};
use rankfuse::manifest::{file_sha256, CellStatus, InputDigest, RunManifest};
use rankfuse::ranking::{borda, concordance_report, rank_by_strength, rank_from_scores};
use rankfuse::report;

#[derive(Parser)]
#[command(name = "rankfuse", version, about = "Rank features by correlation, fuse with Borda, validate with regressors")]
struct Cli {
    /// Worker threads for model training and grid cells (default: all cores).
    #[arg(long, global = true, env = "RANKFUSE_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Correlate features against the target and write rankings.
    Rank {
        /// Input table (CSV with a header row).
        #[arg(long)]
        input: PathBuf,
        /// pearson, spearman, kendall, or all (all adds Borda fusion and the
        /// concordance report).
        #[arg(long, default_value = "all")]
        metric: String,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Target column name.
        #[arg(long, default_value = "error")]
        target: String,
    },
    /// Run the full location x season x k experiment grid.
    Experiment {
        /// TOML run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Output directory.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Generate a synthetic feature table with known informative features.
    Synth {
        #[arg(long)]
        rows: usize,
        #[arg(long)]
        features: usize,
        #[arg(long)]
        informative: usize,
        /// Gaussian noise standard deviation on the target.
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        /// Correlation of redundant feature copies, in [0, 1).
        #[arg(long, default_value_t = 0.0)]
        pairwise_corr: f64,
        /// Scale of the mild nonlinear target term (0 = purely linear).
        #[arg(long, default_value_t = 0.25)]
        nonlinear: f64,
        #[arg(long)]
        seed: u64,
        /// Output CSV path; the informative-feature sidecar gets the same
        /// path with `.informative.txt` appended.
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("rankfuse: cannot configure {threads} threads: {e}");
            return ExitCode::from(1);
        }
    }
    let outcome = match cli.command {
        Command::Rank {
            input,
            metric,
            out,
            target,
        } => cmd_rank(&input, &metric, &out, &target),
        Command::Experiment { config, out_dir } => cmd_experiment(&config, &out_dir),
        Command::Synth {
            rows,
            features,
            informative,
            noise,
            pairwise_corr,
            nonlinear,
            seed,
            out,
        } => {
            let spec = SyntheticSpec {
                n_rows: rows,
                n_features: features,
                n_informative: informative,
                noise_sd: noise,
                pairwise_corr,
                nonlinear_scale: nonlinear,
                seed,
            };
            cmd_synth(&spec, &out)
        }
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("rankfuse: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}

/// Input/validation problems exit 2; everything else fatal exits 1.
fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::MissingTarget(_)
        | Error::EmptyAfterFilter { .. }
        | Error::Parse { .. }
        | Error::InvalidSpec(_)
        | Error::InvalidConfig(_)
        | Error::NoDates
        | Error::InvalidTable(_)
        | Error::Malformed { .. } => 2,
        _ => 1,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|source| Error::Io {
            path: parent.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn warn_constant_features(corr: &CorrelationVector) {
    for name in &corr.flagged_constant {
        eprintln!(
            "rankfuse: warning: feature `{name}` has no usable {} correlation (constant input); scored 0",
            corr.metric
        );
    }
}

fn cmd_rank(input: &Path, metric: &str, out: &Path, target: &str) -> Result<ExitCode, Error> {
    let loaded = load_table(input, target)?;
    if loaded.dropped_rows > 0 {
        eprintln!(
            "rankfuse: dropped {} row(s) with missing or non-finite values from {}",
            loaded.dropped_rows,
            input.display()
        );
    }
    let table = &loaded.table;

    let metrics: Vec<Metric> = if metric.eq_ignore_ascii_case("all") {
        Metric::ALL.to_vec()
    } else {
        vec![metric.parse()?]
    };

    let mut rankings = Vec::new();
    for &m in &metrics {
        let corr = correlate_all(table, m);
        warn_constant_features(&corr);
        let ranking = rank_by_strength(&corr)?;
        write_file(
            &out.join(format!("correlation_{m}.csv")),
            &report::correlation_csv(&corr),
        )?;
        write_file(
            &out.join(format!("ranking_{m}.csv")),
            &report::ranking_csv(&ranking),
        )?;
        rankings.push(ranking);
    }

    if metrics.len() == Metric::ALL.len() {
        let fused = rank_from_scores(&borda(&rankings)?)?;
        write_file(&out.join("ranking_borda.csv"), &report::ranking_csv(&fused))?;
        let concordance =
            concordance_report(&rankings[0], &rankings[1], &rankings[2], &fused)?;
        write_file(
            &out.join("concordance.csv"),
            &report::concordance_csv(&concordance),
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_synth(spec: &SyntheticSpec, out: &Path) -> Result<ExitCode, Error> {
    let table = generate_synthetic(spec)?;
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|source| Error::Io {
                path: parent.to_path_buf(),
                source,
            })?;
        }
    }
    write_table(&table, out)?;
    let informative = table.informative_features().unwrap_or_default();
    let sidecar = PathBuf::from(format!("{}.informative.txt", out.display()));
    let mut listing = informative.join("\n");
    if !listing.is_empty() {
        listing.push('\n');
    }
    write_file(&sidecar, &listing)?;
    eprintln!(
        "rankfuse: wrote {} rows x {} features to {} ({} informative)",
        table.n_rows(),
        table.n_features(),
        out.display(),
        informative.len()
    );
    Ok(ExitCode::SUCCESS)
}

struct LoadedDatasets {
    tables: BTreeMap<String, BTreeMap<Season, FeatureTable>>,
    inputs: BTreeMap<String, InputDigest>,
    failures: Vec<(String, Option<Season>, String)>,
}

fn load_datasets(config: &RunConfig) -> LoadedDatasets {
    let mut datasets = LoadedDatasets {
        tables: BTreeMap::new(),
        inputs: BTreeMap::new(),
        failures: Vec::new(),
    };
    for location in &config.locations {
        match load_location(location, &config.target, &mut datasets.inputs) {
            Ok(seasons) => {
                datasets.tables.insert(location.name.clone(), seasons);
            }
            Err((season, message)) => {
                eprintln!("rankfuse: skipping {}: {message}", location.name);
                datasets.failures.push((location.name.clone(), season, message));
            }
        }
    }
    datasets
}

fn load_location(
    location: &LocationConfig,
    target: &str,
    inputs: &mut BTreeMap<String, InputDigest>,
) -> Result<BTreeMap<Season, FeatureTable>, (Option<Season>, String)> {
    let digest_for = |path: &Path| -> Result<InputDigest, String> {
        Ok(InputDigest {
            path: path.display().to_string(),
            sha256: file_sha256(path).map_err(|e| e.to_string())?,
        })
    };
    if let Some(path) = &location.path {
        let digest = digest_for(path).map_err(|m| (None, m))?;
        let loaded = load_table(path, target).map_err(|e| (None, e.to_string()))?;
        if loaded.dropped_rows > 0 {
            eprintln!(
                "rankfuse: {}: dropped {} row(s) with missing or non-finite values",
                path.display(),
                loaded.dropped_rows
            );
        }
        let seasons = split_by_season(&loaded.table).map_err(|e| (None, e.to_string()))?;
        inputs.insert(location.name.clone(), digest);
        return Ok(seasons);
    }
    let mut seasons = BTreeMap::new();
    let by_season = location.seasons.as_ref().expect("validated");
    for (&season, path) in by_season {
        let digest = digest_for(path).map_err(|m| (Some(season), m))?;
        let loaded = load_table(path, target).map_err(|e| (Some(season), e.to_string()))?;
        if loaded.dropped_rows > 0 {
            eprintln!(
                "rankfuse: {}: dropped {} row(s) with missing or non-finite values",
                path.display(),
                loaded.dropped_rows
            );
        }
        inputs.insert(format!("{}/{season}", location.name), digest);
        seasons.insert(season, loaded.table);
    }
    Ok(seasons)
}

fn write_experiment_outputs(
    out_dir: &Path,
    grid: &GridOutcome,
    manifest: &mut RunManifest,
) -> Result<(), Error> {
    let results: &[ExperimentResult] = &grid.results;
    let mut emit = |relative: String, contents: &str| -> Result<(), Error> {
        write_file(&out_dir.join(&relative), contents)?;
        manifest.outputs.push(relative);
        Ok(())
    };

    emit("results.csv".into(), &report::long_form_csv(results))?;

    let mut k_values: Vec<usize> = results.iter().map(|r| r.k).collect();
    k_values.sort_unstable();
    k_values.dedup();
    let mut seasons: Vec<Season> = results.iter().map(|r| r.season).collect();
    seasons.sort_unstable();
    seasons.dedup();

    for variant in report::variant_keys(results) {
        for &k in &k_values {
            emit(
                format!("pivot/{variant}_k{k}.csv"),
                &report::pivot_csv(results, &variant, k),
            )?;
        }
    }
    for &season in &seasons {
        for &k in &k_values {
            emit(
                format!("radial/{season}_k{k}.csv"),
                &report::radial_csv(results, season, k),
            )?;
        }
    }
    for location in report::locations(results) {
        for &season in &seasons {
            if results
                .iter()
                .any(|r| r.location == location && r.season == season)
            {
                emit(
                    format!("ksweep/{location}_{season}.csv"),
                    &report::ksweep_csv(results, &location, season),
                )?;
            }
        }
    }
    for result in results {
        emit(
            format!(
                "cells/{}_{}_k{}.json",
                result.location, result.season, result.k
            ),
            &serde_json::to_string_pretty(result)?,
        )?;
    }
    Ok(())
}

fn cmd_experiment(config_path: &Path, out_dir: &Path) -> Result<ExitCode, Error> {
    let config = RunConfig::load(config_path)?;
    let datasets = load_datasets(&config);
    let experiment = config.experiment_config();
    let grid = run_grid(&datasets.tables, &experiment)?;

    for skipped in &grid.skipped {
        eprintln!("rankfuse: skipped cell {skipped}");
    }

    let mut manifest = RunManifest::new(config.clone());
    manifest.inputs = datasets.inputs;
    for (location, season, message) in &datasets.failures {
        manifest.cells.push(CellStatus {
            location: location.clone(),
            season: *season,
            k: None,
            status: format!("skipped: {message}"),
        });
    }
    for result in &grid.results {
        manifest.cells.push(CellStatus {
            location: result.location.clone(),
            season: Some(result.season),
            k: Some(result.k),
            status: "ok".into(),
        });
    }
    for skipped in &grid.skipped {
        manifest.cells.push(CellStatus {
            location: skipped.location.clone(),
            season: Some(skipped.season),
            k: Some(skipped.k),
            status: format!("skipped: {}", skipped.reason),
        });
    }

    write_experiment_outputs(out_dir, &grid, &mut manifest)?;
    manifest.outputs.push("manifest.json".into());
    write_file(&out_dir.join("manifest.json"), &manifest.to_json()?)?;

    eprintln!(
        "rankfuse: {} cell(s) evaluated, {} skipped, outputs in {}",
        grid.results.len(),
        grid.skipped.len() + datasets.failures.len(),
        out_dir.display()
    );
    if grid.results.is_empty() {
        eprintln!("rankfuse: no cell produced results");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}
