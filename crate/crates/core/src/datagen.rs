// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic four-class time-series benchmark.
//!
//! Every series is Gaussian white noise with unit standard deviation. The
//! three anomalous classes modify the signal after a change point drawn in
//! the central 60% of the series:
//!
//! - mean change: the mean switches from 0 to `mu`,
//! - variance change: the standard deviation switches from 1 to `sigma`,
//! - trend shift: a linear ramp from 0 at the change point to `amplitude`
//!   at the last index is added to the noise.
//!
//! Randomness comes from ChaCha8 keyed by the dataset seed, with the series
//! index selecting the ChaCha stream. A series therefore depends only on
//! `(seed, index)` and generation can run in any order or in parallel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of series classes in the benchmark.
pub const NUM_CLASSES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesClass {
    Normal = 0,
    MeanChange = 1,
    VarianceChange = 2,
    TrendShift = 3,
}

impl SeriesClass {
    pub const ALL: [SeriesClass; NUM_CLASSES] = [
        SeriesClass::Normal,
        SeriesClass::MeanChange,
        SeriesClass::VarianceChange,
        SeriesClass::TrendShift,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            SeriesClass::Normal => "normal",
            SeriesClass::MeanChange => "mean_change",
            SeriesClass::VarianceChange => "variance_change",
            SeriesClass::TrendShift => "trend_shift",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn is_anomaly(self) -> bool {
        self != SeriesClass::Normal
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub values: Vec<f64>,
    pub class: SeriesClass,
    pub change_point: Option<usize>,
    /// `mu`, `sigma` or final trend amplitude, depending on the class.
    pub anomaly_magnitude: Option<f64>,
}

impl TimeSeries {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: PartialOrd + Copy> Range<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Self { lo, hi }
    }

    fn is_ordered(&self) -> bool {
        self.lo <= self.hi
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub n_normal: usize,
    pub n_per_anomaly_class: usize,
    pub length_range: Range<usize>,
    pub mean_shift_range: Range<f64>,
    pub sigma_shift_range: Range<f64>,
    pub trend_amplitude_range: Range<f64>,
    pub seed: u64,
}

impl DatasetSpec {
    /// 3000 normal series and 1000 of each anomaly class.
    pub fn benchmark(seed: u64) -> Self {
        Self {
            n_normal: 3000,
            n_per_anomaly_class: 1000,
            length_range: Range::new(100, 200),
            mean_shift_range: Range::new(1.0, 5.0),
            sigma_shift_range: Range::new(2.0, 6.0),
            trend_amplitude_range: Range::new(1.0, 5.0),
            seed,
        }
    }

    pub fn with_counts(mut self, n_normal: usize, n_per_anomaly_class: usize) -> Self {
        self.n_normal = n_normal;
        self.n_per_anomaly_class = n_per_anomaly_class;
        self
    }

    pub fn total(&self) -> usize {
        self.n_normal + 3 * self.n_per_anomaly_class
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_normal == 0 || self.n_per_anomaly_class == 0 {
            return Err(Error::Config("class counts must be positive".into()));
        }
        if !self.length_range.is_ordered() || self.length_range.lo < 2 {
            return Err(Error::Config(format!(
                "invalid length range [{}, {}]",
                self.length_range.lo, self.length_range.hi
            )));
        }
        let reals = [
            ("mean_shift_range", self.mean_shift_range),
            ("sigma_shift_range", self.sigma_shift_range),
            ("trend_amplitude_range", self.trend_amplitude_range),
        ];
        for (name, r) in reals {
            if !(r.lo.is_finite() && r.hi.is_finite() && r.is_ordered()) {
                return Err(Error::Config(format!(
                    "invalid {name} [{}, {}]",
                    r.lo, r.hi
                )));
            }
        }
        if self.sigma_shift_range.lo < 0.0 {
            return Err(Error::Config(
                "sigma_shift_range must be nonnegative".into(),
            ));
        }
        Ok(())
    }

    /// Class of the series at `index` in the generated set: normal series
    /// first, then each anomaly class in turn.
    pub fn class_at(&self, index: usize) -> SeriesClass {
        if index < self.n_normal {
            return SeriesClass::Normal;
        }
        let k = (index - self.n_normal) / self.n_per_anomaly_class;
        SeriesClass::from_index(1 + k.min(2)).unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledSeriesSet {
    pub series: Vec<TimeSeries>,
    pub spec: DatasetSpec,
}

impl LabeledSeriesSet {
    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn labels(&self) -> Vec<SeriesClass> {
        self.series.iter().map(|s| s.class).collect()
    }

    pub fn class_counts(&self) -> [usize; NUM_CLASSES] {
        let mut counts = [0; NUM_CLASSES];
        for s in &self.series {
            counts[s.class.index()] += 1;
        }
        counts
    }
}

/// Random stream for the series at `index` of a dataset seeded with `seed`.
pub fn series_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Closed change-point support `[round(0.2 L), round(0.8 L)]`.
pub fn change_point_bounds(length: usize) -> (usize, usize) {
    let l = length as f64;
    ((0.2 * l).round() as usize, (0.8 * l).round() as usize)
}

fn uniform(rng: &mut impl Rng, r: Range<f64>) -> f64 {
    if r.lo == r.hi {
        r.lo
    } else {
        rng.gen_range(r.lo..=r.hi)
    }
}

pub fn gen_series(
    class: SeriesClass,
    spec: &DatasetSpec,
    rng: &mut impl Rng,
) -> Result<TimeSeries> {
    spec.validate()?;
    let length = rng.gen_range(spec.length_range.lo..=spec.length_range.hi);
    let mut values: Vec<f64> = (0..length).map(|_| rng.sample(StandardNormal)).collect();
    if class == SeriesClass::Normal {
        return Ok(TimeSeries {
            values,
            class,
            change_point: None,
            anomaly_magnitude: None,
        });
    }

    let (lo, hi) = change_point_bounds(length);
    let change_point = rng.gen_range(lo..=hi);
    let magnitude = match class {
        SeriesClass::MeanChange => {
            let mu = uniform(rng, spec.mean_shift_range);
            values[change_point..].iter_mut().for_each(|v| *v += mu);
            mu
        }
        SeriesClass::VarianceChange => {
            let sigma = uniform(rng, spec.sigma_shift_range);
            values[change_point..].iter_mut().for_each(|v| *v *= sigma);
            sigma
        }
        SeriesClass::TrendShift => {
            let amplitude = uniform(rng, spec.trend_amplitude_range);
            let span = (length - 1 - change_point).max(1) as f64;
            for (offset, v) in values[change_point..].iter_mut().enumerate() {
                *v += amplitude * offset as f64 / span;
            }
            amplitude
        }
        SeriesClass::Normal => unreachable!(),
    };

    Ok(TimeSeries {
        values,
        class,
        change_point: Some(change_point),
        anomaly_magnitude: Some(magnitude),
    })
}

pub fn gen_dataset(spec: &DatasetSpec) -> Result<LabeledSeriesSet> {
    spec.validate()?;
    let series = (0..spec.total())
        .into_par_iter()
        .map(|i| gen_series(spec.class_at(i), spec, &mut series_rng(spec.seed, i as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(LabeledSeriesSet {
        series,
        spec: spec.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec(seed: u64) -> DatasetSpec {
        DatasetSpec::benchmark(seed).with_counts(1, 1)
    }

    #[test]
    fn normal_series_has_no_change_point() {
        let spec = DatasetSpec::benchmark(7);
        let s = gen_series(SeriesClass::Normal, &spec, &mut series_rng(7, 0)).unwrap();
        assert!(s.change_point.is_none());
        assert!(s.anomaly_magnitude.is_none());
        assert!((100..=200).contains(&s.len()));
    }

    #[test]
    fn zero_amplitude_trend_is_plain_noise() {
        let mut spec = DatasetSpec::benchmark(3);
        spec.trend_amplitude_range = Range::new(0.0, 0.0);
        let trend = gen_series(SeriesClass::TrendShift, &spec, &mut series_rng(3, 5)).unwrap();
        // Same stream: length and noise draws come first, so values match a
        // normal series generated from the same stream.
        let normal = gen_series(SeriesClass::Normal, &spec, &mut series_rng(3, 5)).unwrap();
        assert_eq!(trend.values, normal.values);
        assert!(trend.change_point.is_some());
    }

    #[test]
    fn fixed_mean_shift_is_visible_after_change_point() {
        let mut spec = DatasetSpec::benchmark(11);
        spec.mean_shift_range = Range::new(5.0, 5.0);
        let tail_mean = |s: &TimeSeries| {
            let tail = &s.values[s.change_point.unwrap()..];
            (tail.iter().sum::<f64>() / tail.len() as f64, tail.len())
        };

        let s = gen_series(SeriesClass::MeanChange, &spec, &mut series_rng(11, 0)).unwrap();
        let (mean, _) = tail_mean(&s);
        assert!((mean - 5.0).abs() < 3.0 / (s.len() as f64 / 2.0).sqrt());
        assert_eq!(s.anomaly_magnitude, Some(5.0));

        for i in 1..50 {
            let s = gen_series(SeriesClass::MeanChange, &spec, &mut series_rng(11, i)).unwrap();
            let (mean, n) = tail_mean(&s);
            assert!(
                (mean - 5.0).abs() < 4.5 / (n as f64).sqrt(),
                "series {i}: mean {mean}"
            );
        }
    }

    #[test]
    fn change_point_bounds_match_central_area() {
        assert_eq!(change_point_bounds(100), (20, 80));
        assert_eq!(change_point_bounds(150), (30, 120));
        for i in 0..200 {
            let spec = DatasetSpec::benchmark(i);
            let s = gen_series(spec.class_at(3500), &spec, &mut series_rng(i, 0)).unwrap();
            let l = s.len() as f64;
            let cp = s.change_point.unwrap() as f64;
            assert!(cp >= (0.2 * l).round() && cp <= (0.8 * l).round());
        }
    }

    #[test]
    fn one_series_per_class() {
        let set = gen_dataset(&small_spec(1)).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.class_counts(), [1, 1, 1, 1]);
        let classes: Vec<_> = set.series.iter().map(|s| s.class).collect();
        assert_eq!(classes, SeriesClass::ALL.to_vec());
    }

    #[test]
    fn benchmark_counts() {
        let spec = DatasetSpec::benchmark(5);
        assert_eq!(spec.total(), 6000);
        assert_eq!(spec.class_at(2999), SeriesClass::Normal);
        assert_eq!(spec.class_at(3000), SeriesClass::MeanChange);
        assert_eq!(spec.class_at(4000), SeriesClass::VarianceChange);
        assert_eq!(spec.class_at(5999), SeriesClass::TrendShift);
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = DatasetSpec::benchmark(99).with_counts(20, 10);
        let a = gen_dataset(&spec).unwrap();
        let b = gen_dataset(&spec).unwrap();
        assert_eq!(a, b);
        let c = gen_dataset(&DatasetSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(a.series[0].values, c.series[0].values);
    }

    #[test]
    fn normal_series_sample_mean_concentrates() {
        let spec = DatasetSpec::benchmark(2024).with_counts(1000, 1);
        let set = gen_dataset(&spec).unwrap();
        let inside = set
            .series
            .iter()
            .filter(|s| s.class == SeriesClass::Normal)
            .filter(|s| {
                let l = s.len() as f64;
                let mean = s.values.iter().sum::<f64>() / l;
                mean.abs() <= 5.0 / l.sqrt()
            })
            .count();
        assert!(inside >= 990, "{inside} of 1000 inside the band");
    }

    #[test]
    fn invalid_ranges_are_rejected() {
        let mut spec = DatasetSpec::benchmark(0);
        spec.mean_shift_range = Range::new(5.0, 1.0);
        assert!(matches!(gen_dataset(&spec), Err(Error::Config(_))));
        let spec = DatasetSpec::benchmark(0).with_counts(0, 1);
        assert!(matches!(spec.validate(), Err(Error::Config(_))));
        let mut spec = DatasetSpec::benchmark(0);
        spec.length_range = Range::new(200, 100);
        assert!(spec.validate().is_err());
    }
}
