// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nbselect::harness::{
    load_or_generate, prepare_data, run_prepared, with_threads, write_outputs, DataSource,
    ExperimentConfig, PreparedData, Protocol, StrategySpec, SubsetFile,
};
use nbselect::io::{read_bits, write_bits, write_bits_csv, write_series_csv, write_series_json};
use nbselect::selection::{subset_error, Measure, Method};

#[derive(Parser)]
#[command(
    name = "nbselect",
    version,
    about = "Feature selection for naive Bayes over binary change indicators"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON); the bundled benchmark config when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; overrides NBSELECT_THREADS and the config.
    #[arg(long)]
    threads: Option<usize>,
    /// Shrink data and grid axes, in (0, 1].
    #[arg(long)]
    scale: Option<f64>,
    /// Laplace smoothing.
    #[arg(long)]
    alpha: Option<f64>,
    /// Directory with `train.json` and `test.json` from `generate`, used
    /// instead of generating series.
    #[arg(long)]
    series: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SeriesFormat {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the training and test series sets.
    Generate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "json")]
        format: SeriesFormat,
    },
    /// Binarize both series sets into `data/train.bin` and `data/test.bin`.
    Binarize {
        #[command(flatten)]
        common: Common,
        /// Also export both matrices as CSV.
        #[arg(long)]
        csv: bool,
    },
    /// Run one strategy and write its trace and chosen subset.
    Select {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        strategy: Method,
        #[arg(long, default_value = "classification_error")]
        measure: Measure,
        /// Steps of the plain forward search.
        #[arg(long)]
        cap: Option<usize>,
        /// Directory holding `train.bin` and `test.bin` from `binarize`.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Test error of a subset written by `select`.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        subset: PathBuf,
        /// Directory holding `train.bin` and `test.bin`; regenerated from the
        /// config when omitted.
        #[arg(long)]
        data: Option<PathBuf>,
    },
    /// Run every configured strategy and write the full report.
    Reproduce {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        cap: Option<usize>,
    },
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut config = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::bundled(),
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    if let Some(scale) = common.scale {
        config.scale = scale;
    }
    if let Some(alpha) = common.alpha {
        config.alpha = alpha;
    }
    if let Some(dir) = &common.series {
        config.data = DataSource::Load {
            train: dir.join("train.json"),
            test: dir.join("test.json"),
        };
    }
    config.threads = config.resolve_threads(common.threads);
    config.validate()?;
    Ok(config)
}

fn load_bits(dir: &Path) -> Result<PreparedData> {
    let train = read_bits(&dir.join("train.bin"))?;
    let test = read_bits(&dir.join("test.bin"))?;
    PreparedData::new(train, test).with_context(|| format!("loading {}", dir.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common, format } => {
            let config = load_config(&common)?;
            let out = &config.output_dir;
            let (train, test) = with_threads(config.threads, || load_or_generate(&config))??;
            match format {
                SeriesFormat::Json => {
                    write_series_json(&train, &out.join("train.json"))?;
                    write_series_json(&test, &out.join("test.json"))?;
                }
                SeriesFormat::Csv => {
                    write_series_csv(&train, out, "train")?;
                    write_series_csv(&test, out, "test")?;
                }
            }
            println!(
                "wrote {} + {} series to {}",
                train.series.len(),
                test.series.len(),
                out.display()
            );
        }
        Command::Binarize { common, csv } => {
            let config = load_config(&common)?;
            let data = with_threads(config.threads, || prepare_data(&config))??;
            let dir = config.output_dir.join("data");
            write_bits(&data.train, &dir.join("train.bin"))?;
            write_bits(&data.test, &dir.join("test.bin"))?;
            if csv {
                write_bits_csv(&data.train, &dir.join("train.csv"))?;
                write_bits_csv(&data.test, &dir.join("test.csv"))?;
            }
            println!(
                "binarized {} + {} series over {} indicators into {}",
                data.train.n_rows(),
                data.test.n_rows(),
                data.train.n_features(),
                dir.display()
            );
        }
        Command::Select {
            common,
            strategy,
            measure,
            cap,
            data,
        } => {
            let mut config = load_config(&common)?;
            config.strategies = vec![StrategySpec {
                method: strategy,
                measure,
            }];
            config.forward_cap = cap.or(config.forward_cap);
            let report = with_threads(config.threads, || -> Result<_> {
                let data = match &data {
                    Some(dir) => load_bits(dir)?,
                    None => prepare_data(&config)?,
                };
                let (report, outputs) = run_prepared(&config, &data)?;
                write_outputs(&config.output_dir, &report, &outputs, &data)?;
                Ok(report)
            })??;
            let row = &report.rows[0];
            println!(
                "{} ({}): {} features, validation error {:.6}, test error {:.6}",
                row.title, row.measure, row.selected_size, row.validation_error, row.test_error
            );
            println!("subset: {:?}", row.features);
        }
        Command::Evaluate {
            common,
            subset,
            data,
        } => {
            let config = load_config(&common)?;
            let text = std::fs::read_to_string(&subset)
                .with_context(|| format!("reading {}", subset.display()))?;
            let file: SubsetFile = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", subset.display()))?;
            let error = with_threads(config.threads, || -> Result<f64> {
                let data = match &data {
                    Some(dir) => load_bits(dir)?,
                    None => {
                        let mut c = config.clone();
                        c.seed = file.seed;
                        prepare_data(&c)?
                    }
                };
                if data.train.grid.fingerprint() != file.grid_fingerprint {
                    bail!(
                        "{} was chosen on a different indicator grid",
                        subset.display()
                    );
                }
                let protocol = Protocol::new(&data.train, file.alpha, file.seed)?;
                Ok(subset_error(&protocol.model, &data.test, &file.features)?)
            })??;
            println!("{} features, test error {error}", file.features.len());
        }
        Command::Reproduce { common, cap } => {
            let mut config = load_config(&common)?;
            config.forward_cap = cap.or(config.forward_cap);
            let report = nbselect::harness::run_protocol(&config)?;
            print!("{}", report.to_table());
            println!("results in {}", config.output_dir.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
