// SPDX-License-Identifier: MIT OR Apache-2.0

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::datagen::{DatasetSpec, Range};
use crate::error::{Error, Result};
use crate::indicators::GridAxes;
use crate::io::read_to_string;
use crate::selection::{Measure, Method};

/// Bundled configuration: benchmark-sized data, default grid, all ten
/// method/measure pairs.
pub const DEFAULT_CONFIG: &str = include_str!("../../configs/default.json");

/// Environment variable that overrides the configured thread count.
pub const THREADS_ENV: &str = "NBSELECT_THREADS";

/// Shape of a synthetic dataset; the seed comes from the experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticData {
    pub n_normal: usize,
    pub n_per_anomaly_class: usize,
    pub length_range: Range<usize>,
    pub mean_shift_range: Range<f64>,
    pub sigma_shift_range: Range<f64>,
    pub trend_amplitude_range: Range<f64>,
}

impl SyntheticData {
    pub fn spec(&self, seed: u64) -> DatasetSpec {
        DatasetSpec {
            n_normal: self.n_normal,
            n_per_anomaly_class: self.n_per_anomaly_class,
            length_range: self.length_range,
            mean_shift_range: self.mean_shift_range,
            sigma_shift_range: self.sigma_shift_range,
            trend_amplitude_range: self.trend_amplitude_range,
            seed,
        }
    }
}

impl Default for SyntheticData {
    fn default() -> Self {
        let b = DatasetSpec::benchmark(0);
        Self {
            n_normal: b.n_normal,
            n_per_anomaly_class: b.n_per_anomaly_class,
            length_range: b.length_range,
            mean_shift_range: b.mean_shift_range,
            sigma_shift_range: b.sigma_shift_range,
            trend_amplitude_range: b.trend_amplitude_range,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    /// Training and test sets drawn from the same generator with
    /// independent seeds.
    Generate(SyntheticData),
    /// Persisted series sets (JSON).
    Load { train: PathBuf, test: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub method: Method,
    pub measure: Measure,
}

impl StrategySpec {
    pub fn key(&self) -> String {
        format!("{}_{}", self.method.name(), self.measure.name())
    }
}

fn default_alpha() -> f64 {
    1.0
}

fn default_scale() -> f64 {
    1.0
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    #[serde(default)]
    pub grid: GridAxes,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub strategies: Vec<StrategySpec>,
    /// Steps of the plain forward search; all features when absent.
    #[serde(default)]
    pub forward_cap: Option<usize>,
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub parallel_strategies: bool,
    /// Shrinks class counts and grid axes for quick runs.
    #[serde(default = "default_scale")]
    pub scale: f64,
}

impl ExperimentConfig {
    pub fn bundled() -> Self {
        serde_json::from_str(DEFAULT_CONFIG).expect("bundled config parses")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategy enabled".into()));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Config(format!(
                "alpha must be >= 0, got {}",
                self.alpha
            )));
        }
        if !(self.scale > 0.0 && self.scale <= 1.0) {
            return Err(Error::Config(format!(
                "scale must be in (0, 1], got {}",
                self.scale
            )));
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be positive".into()));
        }
        if let DataSource::Load { train, test } = &self.data {
            for p in [train, test] {
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "data file {} does not exist",
                        p.display()
                    )));
                }
            }
        }
        if let DataSource::Generate(d) = &self.data {
            d.spec(self.seed).validate()?;
        }
        self.grid.build().map(|_| ())
    }

    /// Grid axes after applying `scale`: each axis keeps
    /// `ceil(scale * len)` evenly spaced values.
    pub fn scaled_grid(&self) -> GridAxes {
        GridAxes {
            families: self.grid.families.clone(),
            window_sizes: thin(&self.grid.window_sizes, self.scale),
            thresholds: thin(&self.grid.thresholds, self.scale),
            confirmation: self.grid.confirmation.clone(),
        }
    }

    pub fn scaled_data(&self) -> Option<SyntheticData> {
        match &self.data {
            DataSource::Generate(d) => {
                let shrink = |n: usize| ((n as f64 * self.scale).round() as usize).max(1);
                Some(SyntheticData {
                    n_normal: shrink(d.n_normal),
                    n_per_anomaly_class: shrink(d.n_per_anomaly_class),
                    ..d.clone()
                })
            }
            DataSource::Load { .. } => None,
        }
    }

    /// Thread count: explicit flag, then the environment, then the config.
    pub fn resolve_threads(&self, flag: Option<usize>) -> Option<usize> {
        flag.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()))
            .or(self.threads)
            .filter(|&n| n > 0)
    }
}

fn thin<T: Clone>(axis: &[T], scale: f64) -> Vec<T> {
    let keep = ((axis.len() as f64 * scale).ceil() as usize).clamp(1, axis.len().max(1));
    if keep >= axis.len() {
        return axis.to_vec();
    }
    if keep == 1 {
        return vec![axis[axis.len() / 2].clone()];
    }
    (0..keep)
        .map(|i| axis[i * (axis.len() - 1) / (keep - 1)].clone())
        .collect()
}

/// SplitMix64 finalizer over `seed + tag * golden`, used to derive the
/// independent seeds of one experiment.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed.wrapping_add(tag.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub const TRAIN_SEED_TAG: u64 = 0;
pub const TEST_SEED_TAG: u64 = 1;
pub const SPLIT_SEED_TAG: u64 = 2;
