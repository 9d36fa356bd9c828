// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment protocol.
//!
//! The training set is split into two stratified halves. Every strategy
//! searches on half A with a model fit on half A, the visited subsets are
//! scored on half B, and the chosen subset is finally evaluated once on the
//! test set. Searches never receive the test set or half B.

mod config;
mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use config::{
    derive_seed, DataSource, ExperimentConfig, StrategySpec, SyntheticData, DEFAULT_CONFIG,
    SPLIT_SEED_TAG, TEST_SEED_TAG, THREADS_ENV, TRAIN_SEED_TAG,
};
pub use report::{ExperimentReport, ReportRow};

use crate::datagen::{gen_dataset, LabeledSeriesSet};
use crate::error::{Error, Result};
use crate::indicators::{binarize, BinaryDataset, Fnv1a};
use crate::io::{read_series_json, write_bits, write_file};
use crate::nbc::{fit, NbcModel};
use crate::selection::{
    backward_search, floating_search, forward_search, mi_rank, mrmr_rank, select_best_subset,
    subset_error, Direction, Method, Ranking, RankingPath, SelectionTrace, SubsetChoice,
};

/// Seeded split of row indices into two halves with the same class
/// proportions. Odd class counts put the extra instance in the second half.
pub fn stratified_split(
    labels: &[usize],
    class_count: usize,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut first = Vec::new();
    let mut second = Vec::new();
    for k in 0..class_count {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
        idx.shuffle(&mut rng);
        let half = idx.len() / 2;
        first.extend_from_slice(&idx[..half]);
        second.extend_from_slice(&idx[half..]);
    }
    first.sort_unstable();
    second.sort_unstable();
    (first, second)
}

/// Training halves and the model fit on the first one.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub search_half: BinaryDataset,
    pub validation_half: BinaryDataset,
    pub model: NbcModel,
    pub alpha: f64,
    pub seed: u64,
}

/// What a strategy produced before validation.
#[derive(Debug, Clone, PartialEq)]
pub enum SearchOutput {
    Trace(SelectionTrace),
    Ranking(Ranking),
}

impl SearchOutput {
    pub fn to_jsonl(&self) -> Result<String> {
        match self {
            SearchOutput::Trace(t) => t.to_jsonl(),
            SearchOutput::Ranking(r) => r.to_jsonl(),
        }
    }
}

impl Protocol {
    /// Splits `train` with the split seed derived from `seed` and fits the
    /// model on the first half.
    pub fn new(train: &BinaryDataset, alpha: f64, seed: u64) -> Result<Self> {
        let (a, b) = stratified_split(
            &train.labels,
            train.class_count,
            derive_seed(seed, SPLIT_SEED_TAG),
        );
        let search_half = train.select_rows(&a);
        let validation_half = train.select_rows(&b);
        let model = fit(&search_half, alpha)?;
        Ok(Self {
            search_half,
            validation_half,
            model,
            alpha,
            seed,
        })
    }

    pub fn search(
        &self,
        strategy: StrategySpec,
        forward_cap: Option<usize>,
    ) -> Result<SearchOutput> {
        let data = &self.search_half;
        let model = &self.model;
        let measure = strategy.measure;
        Ok(match strategy.method {
            Method::MiFilter => SearchOutput::Ranking(mi_rank(data)),
            Method::MrmrFilter => SearchOutput::Ranking(mrmr_rank(data, data.n_features())),
            Method::Forward => {
                let cap = forward_cap
                    .unwrap_or(data.n_features())
                    .min(data.n_features());
                SearchOutput::Trace(forward_search(model, data, measure, cap)?)
            }
            Method::Backward => SearchOutput::Trace(backward_search(model, data, measure)?),
            Method::ForwardBackward => {
                SearchOutput::Trace(floating_search(model, data, measure, Direction::Forward)?)
            }
            Method::BackwardForward => {
                SearchOutput::Trace(floating_search(model, data, measure, Direction::Backward)?)
            }
        })
    }

    pub fn choose(&self, output: &SearchOutput) -> Result<SubsetChoice> {
        match output {
            SearchOutput::Trace(t) => select_best_subset(t, &self.model, &self.validation_half),
            SearchOutput::Ranking(r) => select_best_subset(
                &RankingPath {
                    ranking: r,
                    universe: self.model.n_features,
                },
                &self.model,
                &self.validation_half,
            ),
        }
    }

    /// Search, validate and evaluate one strategy.
    pub fn run(
        &self,
        strategy: StrategySpec,
        forward_cap: Option<usize>,
        test: &BinaryDataset,
    ) -> Result<(ReportRow, SearchOutput)> {
        let start = Instant::now();
        let output = self.search(strategy, forward_cap)?;
        let choice = self.choose(&output)?;
        let test_error = subset_error(&self.model, test, &choice.features)?;
        let seconds = start.elapsed().as_secs_f64();
        let row = ReportRow {
            method: strategy.method,
            title: strategy.method.title().to_string(),
            measure: strategy.measure,
            selected_size: choice.features.len(),
            features: choice.features,
            validation_error: choice.validation_error,
            test_error,
            trace_length: match &output {
                SearchOutput::Trace(t) => t.len(),
                SearchOutput::Ranking(r) => r.order.len(),
            },
            seconds,
        };
        Ok((row, output))
    }
}

/// A subset chosen by `select`, with what `evaluate` needs to rebuild the
/// model that chose it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFile {
    pub strategy: StrategySpec,
    pub seed: u64,
    pub alpha: f64,
    pub grid_fingerprint: u64,
    pub features: Vec<usize>,
    pub validation_error: f64,
}

/// Binarized training and test sets of an experiment.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: BinaryDataset,
    pub test: BinaryDataset,
    pub fingerprint: u64,
}

impl PreparedData {
    pub fn new(train: BinaryDataset, test: BinaryDataset) -> Result<Self> {
        if train.grid != test.grid {
            return Err(Error::Contract(
                "training and test sets use different indicator grids".into(),
            ));
        }
        let fingerprint = dataset_fingerprint(&[&train, &test]);
        Ok(Self {
            train,
            test,
            fingerprint,
        })
    }
}

pub fn load_or_generate(config: &ExperimentConfig) -> Result<(LabeledSeriesSet, LabeledSeriesSet)> {
    match &config.data {
        DataSource::Generate(_) => {
            let shape = config.scaled_data().expect("generated source");
            let train = gen_dataset(&shape.spec(derive_seed(config.seed, TRAIN_SEED_TAG)))?;
            let test = gen_dataset(&shape.spec(derive_seed(config.seed, TEST_SEED_TAG)))?;
            Ok((train, test))
        }
        DataSource::Load { train, test } => Ok((read_series_json(train)?, read_series_json(test)?)),
    }
}

fn dataset_fingerprint(sets: &[&BinaryDataset]) -> u64 {
    let mut h = Fnv1a::new();
    for d in sets {
        h.write(&(d.n_rows() as u64).to_le_bytes());
        h.write(&d.grid.fingerprint().to_le_bytes());
        for &l in &d.labels {
            h.write(&[l as u8]);
        }
        for w in d.bits.words() {
            h.write(&w.to_le_bytes());
        }
    }
    h.finish()
}

pub fn prepare_data(config: &ExperimentConfig) -> Result<PreparedData> {
    config.validate()?;
    let grid = config.scaled_grid().build()?;
    let (train_set, test_set) = load_or_generate(config)?;
    PreparedData::new(binarize(&train_set, &grid), binarize(&test_set, &grid))
}

/// Runs every configured strategy on prepared data.
pub fn run_prepared(
    config: &ExperimentConfig,
    data: &PreparedData,
) -> Result<(ExperimentReport, Vec<SearchOutput>)> {
    config.validate()?;
    let protocol = Protocol::new(&data.train, config.alpha, config.seed)?;
    let run = |s: &StrategySpec| protocol.run(*s, config.forward_cap, &data.test);
    let results: Vec<(ReportRow, SearchOutput)> = if config.parallel_strategies {
        config
            .strategies
            .par_iter()
            .map(run)
            .collect::<Result<_>>()?
    } else {
        config.strategies.iter().map(run).collect::<Result<_>>()?
    };
    let (rows, outputs) = results.into_iter().unzip();
    let report = ExperimentReport {
        // the thread count changes nothing but wall time, and the report
        // already lives in the output directory, so neither is echoed
        config: ExperimentConfig {
            threads: None,
            output_dir: PathBuf::from("."),
            ..config.clone()
        },
        grid_size: data.train.n_features(),
        data_fingerprint: format!("{:016x}", data.fingerprint),
        search_rows: protocol.search_half.n_rows(),
        validation_rows: protocol.validation_half.n_rows(),
        test_rows: data.test.n_rows(),
        rows,
    };
    Ok((report, outputs))
}

/// Writes `report.csv`, `report.json`, `traces/*.jsonl`, `subsets/*.json`
/// and the binarized datasets under `dir`.
pub fn write_outputs(
    dir: &Path,
    report: &ExperimentReport,
    outputs: &[SearchOutput],
    data: &PreparedData,
) -> Result<()> {
    write_file(&dir.join("report.csv"), report.to_csv())?;
    write_file(&dir.join("report.json"), serde_json::to_vec_pretty(report)?)?;
    for ((row, output), strategy) in report
        .rows
        .iter()
        .zip(outputs)
        .zip(&report.config.strategies)
    {
        write_file(
            &dir.join("traces").join(format!("{}.jsonl", strategy.key())),
            output.to_jsonl()?,
        )?;
        let subset = SubsetFile {
            strategy: *strategy,
            seed: report.config.seed,
            alpha: report.config.alpha,
            grid_fingerprint: data.train.grid.fingerprint(),
            features: row.features.clone(),
            validation_error: row.validation_error,
        };
        write_file(
            &dir.join("subsets").join(format!("{}.json", strategy.key())),
            serde_json::to_vec_pretty(&subset)?,
        )?;
    }
    write_bits(&data.train, &dir.join("data").join("train.bin"))?;
    write_bits(&data.test, &dir.join("data").join("test.bin"))
}

/// Runs `f` on a pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

/// Full protocol: prepare data, run all strategies, write outputs to
/// `config.output_dir`.
pub fn run_protocol(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    with_threads(config.resolve_threads(None), || {
        let data = prepare_data(config)?;
        let (report, outputs) = run_prepared(config, &data)?;
        write_outputs(&config.output_dir, &report, &outputs, &data)?;
        Ok(report)
    })?
}
