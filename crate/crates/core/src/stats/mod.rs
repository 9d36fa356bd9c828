// SPDX-License-Identifier: MIT OR Apache-2.0

//! Two-sample tests and the split-window scores built on them.
//!
//! A score looks at `w/2` points before a candidate break point `t_b` and
//! the `w/2` points from `t_b` on, and reports the p-value of a two-sample
//! test between the two halves. Small values point to a change.

mod ftest;
mod ks;
mod mann_whitney;

use serde::{Deserialize, Serialize};

pub use ftest::{f_test_from_moments, f_test_variance};
pub use ks::{kolmogorov_sf, ks_statistic, ks_two_sample};
pub use mann_whitney::mann_whitney_u;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PValue(f64);

impl PValue {
    pub const ONE: PValue = PValue(1.0);

    /// Clamps into `[0, 1]`; NaN maps to 1.
    pub fn new(value: f64) -> Self {
        if value.is_nan() {
            PValue(1.0)
        } else {
            PValue(value.clamp(0.0, 1.0))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

fn check_sizes(test: &str, a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::ScoreEvaluation(format!(
            "{test} test needs at least 2 points per sample, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFamily {
    MannWhitneyU,
    KolmogorovSmirnov,
    FVariance,
}

impl TestFamily {
    pub const ALL: [TestFamily; 3] = [
        TestFamily::MannWhitneyU,
        TestFamily::KolmogorovSmirnov,
        TestFamily::FVariance,
    ];

    pub fn test(self, a: &[f64], b: &[f64]) -> Result<PValue> {
        match self {
            TestFamily::MannWhitneyU => mann_whitney_u(a, b),
            TestFamily::KolmogorovSmirnov => ks_two_sample(a, b),
            TestFamily::FVariance => f_test_variance(a, b),
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            TestFamily::MannWhitneyU => "U",
            TestFamily::KolmogorovSmirnov => "KS",
            TestFamily::FVariance => "F",
        }
    }
}

/// Where the break point sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BreakPoint {
    /// Every feasible position; the score is the smallest p-value found.
    #[default]
    Sweep,
    /// A single position at `round(fraction * length)`, clamped to the
    /// feasible range.
    Fraction(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreSpec {
    pub family: TestFamily,
    pub window_size: usize,
    #[serde(default)]
    pub break_point: BreakPoint,
    /// Require the window shifted by `w/2` to agree: the value at `t_b` is
    /// the larger of the two p-values.
    pub confirmation: bool,
}

impl ScoreSpec {
    pub fn new(family: TestFamily, window_size: usize, confirmation: bool) -> Result<Self> {
        let spec = Self {
            family,
            window_size,
            break_point: BreakPoint::Sweep,
            confirmation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_size < 4 || !self.window_size.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "window size must be even and at least 4, got {}",
                self.window_size
            )));
        }
        if let BreakPoint::Fraction(f) = self.break_point {
            if !(f > 0.0 && f < 1.0) {
                return Err(Error::Config(format!(
                    "break point fraction {f} outside (0, 1)"
                )));
            }
        }
        Ok(())
    }

    pub fn half(&self) -> usize {
        self.window_size / 2
    }

    /// Shortest series the score can be evaluated on.
    pub fn min_length(&self) -> usize {
        if self.confirmation {
            self.window_size + self.half()
        } else {
            self.window_size
        }
    }

    pub fn label(&self) -> String {
        format!(
            "{}(w={}{})",
            self.family.short_name(),
            self.window_size,
            if self.confirmation { ";conf" } else { "" }
        )
    }
}

/// p-values of the split-window test at every break point `t_b` in
/// `half ..= len - half`. Entry `i` corresponds to `t_b = half + i`.
pub fn window_profile(values: &[f64], family: TestFamily, window_size: usize) -> Vec<f64> {
    let h = window_size / 2;
    if values.len() < window_size || h < 2 {
        return Vec::new();
    }
    let positions = values.len() - window_size + 1;
    match family {
        TestFamily::FVariance => variance_profile(values, h, positions),
        _ => (0..positions)
            .map(|i| {
                let t = h + i;
                family
                    .test(&values[t - h..t], &values[t..t + h])
                    .map(PValue::value)
                    .unwrap_or(1.0)
            })
            .collect(),
    }
}

// Each half-window variance is computed once and shared by the two break
// points that use it.
fn variance_profile(values: &[f64], h: usize, positions: usize) -> Vec<f64> {
    let var_at = |start: usize| {
        let w = &values[start..start + h];
        let m = w.iter().sum::<f64>() / h as f64;
        w.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (h as f64 - 1.0)
    };
    let vars: Vec<f64> = (0..=values.len() - h).map(var_at).collect();
    (0..positions)
        .map(|i| f_test_from_moments(vars[i], h, vars[i + h], h).value())
        .collect()
}

/// Reduces a window profile to the scalar score for `spec`.
pub fn score_from_profile(profile: &[f64], series_len: usize, spec: &ScoreSpec) -> PValue {
    let h = spec.half();
    if series_len < spec.min_length() || profile.is_empty() {
        return PValue::ONE;
    }
    let at = |i: usize| {
        if spec.confirmation {
            profile[i].max(profile[i + h])
        } else {
            profile[i]
        }
    };
    let count = if spec.confirmation {
        profile.len() - h
    } else {
        profile.len()
    };
    match spec.break_point {
        BreakPoint::Sweep => PValue::new((0..count).map(at).fold(1.0, f64::min)),
        BreakPoint::Fraction(f) => {
            let t = (f * series_len as f64).round() as usize;
            let i = t.saturating_sub(h).min(count - 1);
            PValue::new(at(i))
        }
    }
}

/// Score of a series: p-value of the split-window test, minimised over
/// break points. Series shorter than [`ScoreSpec::min_length`] score 1.
pub fn apply_score(values: &[f64], spec: &ScoreSpec) -> PValue {
    if values.len() < spec.min_length() {
        return PValue::ONE;
    }
    let profile = window_profile(values, spec.family, spec.window_size);
    score_from_profile(&profile, values.len(), spec)
}
