// SPDX-License-Identifier: MIT OR Apache-2.0

//! Binary indicators `1{score <= threshold}` over a grid of score
//! parameters and thresholds, and the bit matrix they produce.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::datagen::{LabeledSeriesSet, NUM_CLASSES};
use crate::error::{Error, Result};
use crate::stats::{score_from_profile, window_profile, BreakPoint, ScoreSpec, TestFamily};

/// Position of an indicator in the grid: family, window, confirmation and
/// threshold indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridCoords {
    pub family: usize,
    pub window: usize,
    pub confirmation: usize,
    pub threshold: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub score: ScoreSpec,
    /// Index into [`IndicatorGrid::scores`].
    pub score_index: usize,
    pub threshold: f64,
    pub coords: GridCoords,
}

impl IndicatorSpec {
    pub fn label(&self) -> String {
        format!("{}<={}", self.score.label(), self.threshold)
    }
}

/// Axes of the indicator grid, as written in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridAxes {
    pub families: Vec<TestFamily>,
    pub window_sizes: Vec<usize>,
    pub thresholds: Vec<f64>,
    pub confirmation: Vec<bool>,
}

impl Default for GridAxes {
    fn default() -> Self {
        Self {
            families: TestFamily::ALL.to_vec(),
            window_sizes: vec![20, 30, 40, 50, 60, 70],
            thresholds: vec![0.001, 0.005, 0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7],
            confirmation: vec![false, true],
        }
    }
}

impl GridAxes {
    pub fn size(&self) -> usize {
        self.families.len()
            * self.window_sizes.len()
            * self.thresholds.len()
            * self.confirmation.len()
    }

    pub fn build(&self) -> Result<IndicatorGrid> {
        build_grid(
            &self.families,
            &self.window_sizes,
            &self.thresholds,
            &self.confirmation,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorGrid {
    /// Distinct scores, in grid order.
    pub scores: Vec<ScoreSpec>,
    pub indicators: Vec<IndicatorSpec>,
}

impl IndicatorGrid {
    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    /// Stable 64-bit FNV-1a digest of the grid definition.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv1a::new();
        for ind in &self.indicators {
            h.write(&[ind.score.family as u8, ind.score.confirmation as u8]);
            h.write(&(ind.score.window_size as u64).to_le_bytes());
            match ind.score.break_point {
                BreakPoint::Sweep => h.write(&[0]),
                BreakPoint::Fraction(f) => {
                    h.write(&[1]);
                    h.write(&f.to_bits().to_le_bytes());
                }
            }
            h.write(&ind.threshold.to_bits().to_le_bytes());
        }
        h.finish()
    }
}

/// 64-bit FNV-1a.
pub(crate) struct Fnv1a(u64);

impl Fnv1a {
    pub(crate) fn new() -> Self {
        Fnv1a(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

/// Cartesian product of the axes, ordered by family, window size,
/// confirmation flag (off first), then threshold.
pub fn build_grid(
    families: &[TestFamily],
    window_sizes: &[usize],
    thresholds: &[f64],
    confirmation_axis: &[bool],
) -> Result<IndicatorGrid> {
    if families.is_empty()
        || window_sizes.is_empty()
        || thresholds.is_empty()
        || confirmation_axis.is_empty()
    {
        return Err(Error::Config(
            "every grid axis needs at least one value".into(),
        ));
    }
    if let Some(t) = thresholds.iter().find(|t| !(**t > 0.0 && **t < 1.0)) {
        return Err(Error::Config(format!("threshold {t} outside (0, 1)")));
    }
    if thresholds.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Config(
            "thresholds must be strictly increasing".into(),
        ));
    }
    let mut families = families.to_vec();
    families.sort();
    families.dedup();
    let mut windows = window_sizes.to_vec();
    windows.sort();
    windows.dedup();
    let mut confirmation = confirmation_axis.to_vec();
    confirmation.sort();
    confirmation.dedup();

    let mut scores = Vec::new();
    let mut indicators = Vec::new();
    for (qi, &family) in families.iter().enumerate() {
        for (wi, &w) in windows.iter().enumerate() {
            for (ci, &conf) in confirmation.iter().enumerate() {
                let score = ScoreSpec::new(family, w, conf)?;
                let score_index = scores.len();
                scores.push(score);
                for (ti, &threshold) in thresholds.iter().enumerate() {
                    indicators.push(IndicatorSpec {
                        score,
                        score_index,
                        threshold,
                        coords: GridCoords {
                            family: qi,
                            window: wi,
                            confirmation: ci,
                            threshold: ti,
                        },
                    });
                }
            }
        }
    }
    Ok(IndicatorGrid { scores, indicators })
}

/// Binarized dataset: `bits[i][j] = 1` iff series `i` fires indicator `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinaryDataset {
    pub bits: BitMatrix,
    /// Class index per row, each `< class_count`.
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub grid: IndicatorGrid,
}

impl BinaryDataset {
    pub fn new(
        bits: BitMatrix,
        labels: Vec<usize>,
        class_count: usize,
        grid: IndicatorGrid,
    ) -> Result<Self> {
        if bits.rows() != labels.len() {
            return Err(Error::Contract(format!(
                "{} rows but {} labels",
                bits.rows(),
                labels.len()
            )));
        }
        if bits.cols() != grid.len() {
            return Err(Error::Contract(format!(
                "{} columns but grid of {} indicators",
                bits.cols(),
                grid.len()
            )));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_count) {
            return Err(Error::Contract(format!(
                "label {l} out of range for {class_count} classes"
            )));
        }
        Ok(Self {
            bits,
            labels,
            class_count,
            grid,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.bits.rows()
    }

    pub fn n_features(&self) -> usize {
        self.bits.cols()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Packed row mask of each class.
    pub fn class_masks(&self) -> Vec<Vec<u64>> {
        let wpc = self.bits.words_per_col();
        let mut masks = vec![vec![0u64; wpc]; self.class_count];
        for (i, &l) in self.labels.iter().enumerate() {
            masks[l][i / 64] |= 1 << (i % 64);
        }
        masks
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        Self {
            bits: self.bits.select_rows(rows),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            class_count: self.class_count,
            grid: self.grid.clone(),
        }
    }
}

/// Scores of one series for every distinct score in the grid.
pub fn series_scores(values: &[f64], grid: &IndicatorGrid) -> Vec<f64> {
    let mut profiles: HashMap<(TestFamily, usize), Vec<f64>> = HashMap::new();
    grid.scores
        .iter()
        .map(|spec| {
            if values.len() < spec.min_length() {
                return 1.0;
            }
            let profile = profiles
                .entry((spec.family, spec.window_size))
                .or_insert_with(|| window_profile(values, spec.family, spec.window_size));
            score_from_profile(profile, values.len(), spec).value()
        })
        .collect()
}

pub fn binarize(set: &LabeledSeriesSet, grid: &IndicatorGrid) -> BinaryDataset {
    let scores: Vec<Vec<f64>> = set
        .series
        .par_iter()
        .map(|s| series_scores(&s.values, grid))
        .collect();
    let mut bits = BitMatrix::zeros(set.len(), grid.len());
    for (i, row) in scores.iter().enumerate() {
        for (j, ind) in grid.indicators.iter().enumerate() {
            if row[ind.score_index] <= ind.threshold {
                bits.set(i, j, true);
            }
        }
    }
    let labels = set.series.iter().map(|s| s.class.index()).collect();
    BinaryDataset {
        bits,
        labels,
        class_count: NUM_CLASSES,
        grid: grid.clone(),
    }
}
