// SPDX-License-Identifier: MIT OR Apache-2.0

//! Naive Bayes over binary indicators.
//!
//! Decisions compare per-class log-joints
//! `log P(Y=k) + sum_{p in S} log P(B^p = b^p | Y=k)`. Because the sum is
//! additive in features, [`JointCache`] keeps the log-joint of every
//! instance and class and updates it in `O(N K)` when a feature enters or
//! leaves the subset, which is what makes greedy wrapper searches cost
//! `O(N P^2)` overall.

use serde::{Deserialize, Serialize};

use crate::bits::and_count;
use crate::error::{Error, Result};
use crate::indicators::BinaryDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NbcModel {
    pub class_count: usize,
    pub n_features: usize,
    pub alpha: f64,
    pub class_counts: Vec<usize>,
    pub log_prior: Vec<f64>,
    /// `log P(B^p = b | Y = k)` stored at `(p * 2 + b) * K + k`.
    log_cond: Vec<f64>,
    /// Columns whose estimate hits probability 0 or 1 for some class.
    pub degenerate: Vec<usize>,
    pub grid_fingerprint: u64,
}

/// Fits class priors and Laplace-smoothed class-conditional Bernoulli
/// probabilities `(count(B^p=1, Y=k) + alpha) / (count(Y=k) + 2 alpha)`.
pub fn fit(data: &BinaryDataset, alpha: f64) -> Result<NbcModel> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::Config(format!(
            "smoothing alpha must be finite and >= 0, got {alpha}"
        )));
    }
    let k_count = data.class_count;
    let n = data.n_rows();
    if n == 0 {
        return Err(Error::Training("cannot fit on an empty dataset".into()));
    }
    let class_counts = data.class_counts();
    if let Some(k) = class_counts.iter().position(|&c| c == 0) {
        return Err(Error::Training(format!(
            "class {k} has no training instance"
        )));
    }
    let log_prior = class_counts
        .iter()
        .map(|&c| (c as f64 / n as f64).ln())
        .collect();

    let masks = data.class_masks();
    let p_count = data.n_features();
    let mut log_cond = vec![0.0; p_count * 2 * k_count];
    let mut degenerate = Vec::new();
    for p in 0..p_count {
        let col = data.bits.column(p);
        let mut flagged = false;
        for k in 0..k_count {
            let ones = and_count(col, &masks[k]) as f64;
            let total = class_counts[k] as f64;
            let denom = total + 2.0 * alpha;
            let p1 = (ones + alpha) / denom;
            let p0 = (total - ones + alpha) / denom;
            flagged |= p1 == 0.0 || p0 == 0.0;
            log_cond[(p * 2) * k_count + k] = p0.ln();
            log_cond[(p * 2 + 1) * k_count + k] = p1.ln();
        }
        if flagged {
            degenerate.push(p);
        }
    }

    Ok(NbcModel {
        class_count: k_count,
        n_features: p_count,
        alpha,
        class_counts,
        log_prior,
        log_cond,
        degenerate,
        grid_fingerprint: data.grid.fingerprint(),
    })
}

impl NbcModel {
    #[inline]
    pub fn log_cond(&self, feature: usize, bit: bool, class: usize) -> f64 {
        self.log_cond[(feature * 2 + bit as usize) * self.class_count + class]
    }

    /// Both rows (`b = 0` then `b = 1`) of a feature's log-conditional table.
    #[inline]
    pub fn feature_table(&self, feature: usize) -> &[f64] {
        let w = 2 * self.class_count;
        &self.log_cond[feature * w..(feature + 1) * w]
    }

    pub fn prob_one(&self, feature: usize, class: usize) -> f64 {
        self.log_cond(feature, true, class).exp()
    }

    fn check_subset(&self, subset: &FeatureSubset) -> Result<()> {
        if subset.universe() != self.n_features {
            return Err(Error::Contract(format!(
                "subset over {} features used with a model of {}",
                subset.universe(),
                self.n_features
            )));
        }
        Ok(())
    }

    /// Log-joints of one instance restricted to `subset`.
    pub fn log_joint(&self, subset: &FeatureSubset, bits: &[bool]) -> Vec<f64> {
        let mut out = self.log_prior.clone();
        for &p in subset.iter() {
            for (k, v) in out.iter_mut().enumerate() {
                *v += self.log_cond(p, bits[p], k);
            }
        }
        out
    }

    /// Posterior class probabilities of one instance.
    pub fn posterior(&self, subset: &FeatureSubset, bits: &[bool]) -> Result<Vec<f64>> {
        self.check_subset(subset)?;
        if bits.len() != self.n_features {
            return Err(Error::Contract(format!(
                "instance has {} bits, model expects {}",
                bits.len(),
                self.n_features
            )));
        }
        Ok(softmax(&self.log_joint(subset, bits)))
    }

    pub fn predict(&self, subset: &FeatureSubset, bits: &[bool]) -> usize {
        argmax(&self.log_joint(subset, bits))
    }

    /// Per-feature likelihood ratios `P(B^p=b^p|Y=k) / P(B^p=b^p|Y=other)`
    /// for one instance, most discriminant first.
    pub fn explain(
        &self,
        subset: &FeatureSubset,
        bits: &[bool],
        class: usize,
        other: usize,
    ) -> Vec<FeatureEvidence> {
        let mut out: Vec<FeatureEvidence> = subset
            .iter()
            .map(|&p| {
                let log_ratio = self.log_cond(p, bits[p], class) - self.log_cond(p, bits[p], other);
                FeatureEvidence {
                    feature: p,
                    bit: bits[p],
                    log_ratio,
                    ratio: log_ratio.exp(),
                }
            })
            .collect();
        out.sort_by(|a, b| {
            b.log_ratio
                .abs()
                .total_cmp(&a.log_ratio.abs())
                .then(a.feature.cmp(&b.feature))
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureEvidence {
    pub feature: usize,
    pub bit: bool,
    pub log_ratio: f64,
    pub ratio: f64,
}

/// Index of the largest entry; the lowest index wins ties.
#[inline]
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for k in 1..values.len() {
        if values[k] > values[best] {
            best = k;
        }
    }
    best
}

/// `(max, log(sum(exp(v - max))))`. A row of `-inf` yields `(-inf, ln K)`,
/// which makes the posterior uniform.
#[inline]
fn log_sum_exp_parts(values: &[f64]) -> (f64, f64) {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return (m, (values.len() as f64).ln());
    }
    let s: f64 = values.iter().map(|v| (v - m).exp()).sum();
    (m, s.ln())
}

/// Log posterior of `class` given a row of log-joints.
#[inline]
pub fn log_posterior(values: &[f64], class: usize) -> f64 {
    let (m, lse) = log_sum_exp_parts(values);
    if m == f64::NEG_INFINITY {
        return -lse;
    }
    values[class] - m - lse
}

pub fn softmax(values: &[f64]) -> Vec<f64> {
    (0..values.len())
        .map(|k| log_posterior(values, k).exp())
        .collect()
}

/// Per-row contributions of the three subset measures.
pub mod row {
    use super::{argmax, log_posterior};

    #[inline]
    pub fn misclassified(log_joint: &[f64], label: usize) -> f64 {
        (argmax(log_joint) != label) as u8 as f64
    }

    #[inline]
    pub fn error_probability(log_joint: &[f64], label: usize) -> f64 {
        1.0 - log_posterior(log_joint, label).exp()
    }

    #[inline]
    pub fn log_likelihood(log_joint: &[f64], label: usize) -> f64 {
        log_posterior(log_joint, label)
    }
}

/// Ordered feature subset with an `O(1)` membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSubset {
    order: Vec<usize>,
    member: Vec<bool>,
}

impl FeatureSubset {
    pub fn empty(universe: usize) -> Self {
        Self {
            order: Vec::new(),
            member: vec![false; universe],
        }
    }

    pub fn full(universe: usize) -> Self {
        Self {
            order: (0..universe).collect(),
            member: vec![true; universe],
        }
    }

    pub fn from_indices(universe: usize, indices: &[usize]) -> Result<Self> {
        let mut s = Self::empty(universe);
        for &p in indices {
            s.insert(p)?;
        }
        Ok(s)
    }

    pub fn universe(&self) -> usize {
        self.member.len()
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    #[inline]
    pub fn contains(&self, p: usize) -> bool {
        self.member.get(p).copied().unwrap_or(false)
    }

    pub fn iter(&self) -> std::slice::Iter<'_, usize> {
        self.order.iter()
    }

    pub fn indices(&self) -> &[usize] {
        &self.order
    }

    pub fn sorted(&self) -> Vec<usize> {
        let mut v = self.order.clone();
        v.sort_unstable();
        v
    }

    pub fn insert(&mut self, p: usize) -> Result<()> {
        if p >= self.universe() {
            return Err(Error::Contract(format!(
                "feature {p} out of range {}",
                self.universe()
            )));
        }
        if self.member[p] {
            return Err(Error::Contract(format!(
                "feature {p} already in the subset"
            )));
        }
        self.member[p] = true;
        self.order.push(p);
        Ok(())
    }

    pub fn remove(&mut self, p: usize) -> Result<()> {
        if !self.contains(p) {
            return Err(Error::Contract(format!("feature {p} not in the subset")));
        }
        self.member[p] = false;
        self.order.retain(|&q| q != p);
        Ok(())
    }
}

/// Running per-instance, per-class log-joints for the current subset.
#[derive(Debug, Clone)]
pub struct JointCache<'a> {
    model: &'a NbcModel,
    data: &'a BinaryDataset,
    /// Row-major `N x K`.
    log_joint: Vec<f64>,
    subset: FeatureSubset,
}

impl<'a> JointCache<'a> {
    pub fn new(
        model: &'a NbcModel,
        data: &'a BinaryDataset,
        subset: FeatureSubset,
    ) -> Result<Self> {
        if model.n_features != data.n_features() || model.class_count != data.class_count {
            return Err(Error::Contract(format!(
                "model ({} features, {} classes) does not match dataset ({} features, {} classes)",
                model.n_features,
                model.class_count,
                data.n_features(),
                data.class_count
            )));
        }
        model.check_subset(&subset)?;
        let log_joint = scratch_log_joints(model, data, &subset);
        Ok(Self {
            model,
            data,
            log_joint,
            subset,
        })
    }

    pub fn model(&self) -> &'a NbcModel {
        self.model
    }

    pub fn data(&self) -> &'a BinaryDataset {
        self.data
    }

    pub fn subset(&self) -> &FeatureSubset {
        &self.subset
    }

    pub fn log_joints(&self) -> &[f64] {
        &self.log_joint
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.model.class_count;
        &self.log_joint[i * k..(i + 1) * k]
    }

    pub fn add_feature(&mut self, p: usize) -> Result<()> {
        if p >= self.model.n_features || self.subset.contains(p) {
            return Err(Error::Contract(format!("cannot add feature {p}")));
        }
        self.apply(p, 1.0);
        self.subset.insert(p)
    }

    pub fn remove_feature(&mut self, p: usize) -> Result<()> {
        if !self.subset.contains(p) {
            return Err(Error::Contract(format!(
                "cannot remove feature {p}: not in the subset"
            )));
        }
        self.apply(p, -1.0);
        self.subset.remove(p)
    }

    fn apply(&mut self, p: usize, sign: f64) {
        let k = self.model.class_count;
        let table = self.model.feature_table(p);
        let col = self.data.bits.column(p);
        for (i, row) in self.log_joint.chunks_exact_mut(k).enumerate() {
            let b = ((col[i / 64] >> (i % 64)) & 1) as usize;
            let t = &table[b * k..(b + 1) * k];
            for (v, d) in row.iter_mut().zip(t) {
                *v += sign * d;
            }
        }
    }

    /// Recomputes every log-joint from the model, ignoring the cache.
    pub fn from_scratch(&self) -> Vec<f64> {
        scratch_log_joints(self.model, self.data, &self.subset)
    }

    /// Sum over instances of `f(row, label)` for the current subset.
    pub fn sum_rows(&self, f: impl Fn(&[f64], usize) -> f64) -> f64 {
        let k = self.model.class_count;
        self.log_joint
            .chunks_exact(k)
            .zip(&self.data.labels)
            .map(|(row, &y)| f(row, y))
            .sum()
    }

    /// Like [`sum_rows`](Self::sum_rows) for the subset with feature `p`
    /// added (`sign = 1`) or removed (`sign = -1`), without touching the
    /// cache.
    pub fn sum_rows_with(&self, p: usize, sign: f64, f: impl Fn(&[f64], usize) -> f64) -> f64 {
        let k = self.model.class_count;
        let table = self.model.feature_table(p);
        let col = self.data.bits.column(p);
        let mut buf = vec![0.0; k];
        let mut acc = 0.0;
        for (i, (row, &y)) in self
            .log_joint
            .chunks_exact(k)
            .zip(&self.data.labels)
            .enumerate()
        {
            let b = ((col[i / 64] >> (i % 64)) & 1) as usize;
            let t = &table[b * k..(b + 1) * k];
            for ((o, v), d) in buf.iter_mut().zip(row).zip(t) {
                *o = v + sign * d;
            }
            acc += f(&buf, y);
        }
        acc
    }

    pub fn misclassified(&self) -> usize {
        self.sum_rows(row::misclassified) as usize
    }

    pub fn classification_error(&self) -> f64 {
        ratio(self.sum_rows(row::misclassified), self.data.n_rows())
    }

    pub fn error_probability(&self) -> f64 {
        ratio(self.sum_rows(row::error_probability), self.data.n_rows())
    }

    pub fn log_conditional_likelihood(&self) -> f64 {
        self.sum_rows(row::log_likelihood)
    }
}

fn ratio(sum: f64, n: usize) -> f64 {
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

fn scratch_log_joints(model: &NbcModel, data: &BinaryDataset, subset: &FeatureSubset) -> Vec<f64> {
    let k = model.class_count;
    let mut out = Vec::with_capacity(data.n_rows() * k);
    for i in 0..data.n_rows() {
        for c in 0..k {
            let mut v = model.log_prior[c];
            for &p in subset.iter() {
                v += model.log_cond(p, data.bits.get(i, p), c);
            }
            out.push(v);
        }
    }
    out
}
