// SPDX-License-Identifier: MIT OR Apache-2.0

//! Filter and wrapper feature selection over a [`BinaryDataset`].
//!
//! Filters produce a [`Ranking`]; wrappers produce a [`SelectionTrace`] of
//! every subset they visited. Either one is handed to
//! [`select_best_subset`], which scores each visited subset on held-out
//! data and keeps the smallest one with the lowest error.

mod filter;
mod wrapper;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use filter::{mi_from_table, mi_rank, mrmr_rank, mutual_information};
pub use wrapper::{
    backward_search, floating_search, forward_search, Direction, IMPROVEMENT_EPSILON,
};

use crate::error::{Error, Result};
use crate::indicators::BinaryDataset;
use crate::nbc::{row, FeatureSubset, JointCache, NbcModel};

/// Subset quality measure. Every variant is oriented so that lower is
/// better; the log conditional likelihood is reported negated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Measure {
    ClassificationError,
    ErrorProbability,
    LogConditionalLikelihood,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Measure::ClassificationError => "error",
            Measure::ErrorProbability => "probability",
            Measure::LogConditionalLikelihood => "likelihood",
        }
    }

    fn finish(self, sum: f64, n: usize) -> f64 {
        match self {
            Measure::LogConditionalLikelihood => -sum,
            _ if n == 0 => 0.0,
            _ => sum / n as f64,
        }
    }

    pub fn evaluate(self, cache: &JointCache<'_>) -> f64 {
        let n = cache.data().n_rows();
        let sum = match self {
            Measure::ClassificationError => cache.sum_rows(row::misclassified),
            Measure::ErrorProbability => cache.sum_rows(row::error_probability),
            Measure::LogConditionalLikelihood => cache.sum_rows(row::log_likelihood),
        };
        self.finish(sum, n)
    }

    /// Measure after adding (`sign = 1`) or removing (`sign = -1`) feature
    /// `p`, computed from the frozen cache.
    pub fn evaluate_move(self, cache: &JointCache<'_>, p: usize, sign: f64) -> f64 {
        let n = cache.data().n_rows();
        let sum = match self {
            Measure::ClassificationError => cache.sum_rows_with(p, sign, row::misclassified),
            Measure::ErrorProbability => cache.sum_rows_with(p, sign, row::error_probability),
            Measure::LogConditionalLikelihood => cache.sum_rows_with(p, sign, row::log_likelihood),
        };
        self.finish(sum, n)
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "error" | "classification_error" => Ok(Measure::ClassificationError),
            "probability" | "error_probability" => Ok(Measure::ErrorProbability),
            "likelihood" | "log_conditional_likelihood" => Ok(Measure::LogConditionalLikelihood),
            other => Err(Error::Config(format!(
                "unknown measure '{other}' (expected error, probability or likelihood)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    MiFilter,
    MrmrFilter,
    Forward,
    Backward,
    ForwardBackward,
    BackwardForward,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::MiFilter,
        Method::MrmrFilter,
        Method::Forward,
        Method::Backward,
        Method::ForwardBackward,
        Method::BackwardForward,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::MiFilter => "mi",
            Method::MrmrFilter => "mrmr",
            Method::Forward => "forward",
            Method::Backward => "backward",
            Method::ForwardBackward => "forward_backward",
            Method::BackwardForward => "backward_forward",
        }
    }

    pub fn title(self) -> &'static str {
        match self {
            Method::MiFilter => "MI filter",
            Method::MrmrFilter => "mRMR filter",
            Method::Forward => "Forward search",
            Method::Backward => "Backward search",
            Method::ForwardBackward => "Forward-Backward",
            Method::BackwardForward => "Backward-Forward",
        }
    }

    pub fn is_filter(self) -> bool {
        matches!(self, Method::MiFilter | Method::MrmrFilter)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.replace('-', "_");
        Method::ALL
            .into_iter()
            .find(|m| {
                m.name() == norm
                    || (norm == "mi_filter" && *m == Method::MiFilter)
                    || (norm == "mrmr_filter" && *m == Method::MrmrFilter)
            })
            .ok_or_else(|| Error::Config(format!("unknown strategy '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Add,
    Remove,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: Action,
    pub feature: usize,
    pub subset_size: usize,
    /// Search-half measure of the subset after this step.
    pub value: f64,
}

/// Every subset visited by a wrapper search, as moves from an initial
/// subset. Snapshot 0 is the initial subset, snapshot `i` follows step `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionTrace {
    pub method: Method,
    pub measure: Measure,
    pub universe: usize,
    pub initial: Vec<usize>,
    pub initial_value: f64,
    pub steps: Vec<TraceStep>,
}

#[derive(Serialize, Deserialize)]
struct TraceLine {
    step: usize,
    action: String,
    feature: Option<usize>,
    value: f64,
    subset_size: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    measure: Option<Measure>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    universe: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    subset: Option<Vec<usize>>,
}

impl SelectionTrace {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Subset after `snapshot` steps.
    pub fn subset_at(&self, snapshot: usize) -> Result<FeatureSubset> {
        let mut s = FeatureSubset::from_indices(self.universe, &self.initial)?;
        for step in &self.steps[..snapshot] {
            match step.action {
                Action::Add => s.insert(step.feature)?,
                Action::Remove => s.remove(step.feature)?,
            }
        }
        Ok(s)
    }

    /// Measure value recorded for a snapshot.
    pub fn value_at(&self, snapshot: usize) -> f64 {
        if snapshot == 0 {
            self.initial_value
        } else {
            self.steps[snapshot - 1].value
        }
    }

    /// One JSON object per line: a `start` line carrying the initial
    /// subset, then one line per step.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        let start = TraceLine {
            step: 0,
            action: "start".into(),
            feature: None,
            value: self.initial_value,
            subset_size: self.initial.len(),
            method: Some(self.method),
            measure: Some(self.measure),
            universe: Some(self.universe),
            subset: Some(self.initial.clone()),
        };
        out.push_str(&serde_json::to_string(&start)?);
        out.push('\n');
        for (i, s) in self.steps.iter().enumerate() {
            let line = TraceLine {
                step: i + 1,
                action: match s.action {
                    Action::Add => "add".into(),
                    Action::Remove => "remove".into(),
                },
                feature: Some(s.feature),
                value: s.value,
                subset_size: s.subset_size,
                method: None,
                measure: None,
                universe: None,
                subset: None,
            };
            out.push_str(&serde_json::to_string(&line)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let bad = |m: &str| Error::Config(format!("malformed trace: {m}"));
        let start: TraceLine = serde_json::from_str(lines.next().ok_or_else(|| bad("empty"))?)?;
        if start.action != "start" {
            return Err(bad("first line must be the start record"));
        }
        let mut trace = SelectionTrace {
            method: start.method.ok_or_else(|| bad("missing method"))?,
            measure: start.measure.ok_or_else(|| bad("missing measure"))?,
            universe: start.universe.ok_or_else(|| bad("missing universe"))?,
            initial: start.subset.ok_or_else(|| bad("missing initial subset"))?,
            initial_value: start.value,
            steps: Vec::new(),
        };
        for l in lines {
            let line: TraceLine = serde_json::from_str(l)?;
            let action = match line.action.as_str() {
                "add" => Action::Add,
                "remove" => Action::Remove,
                other => return Err(bad(&format!("unknown action {other}"))),
            };
            trace.steps.push(TraceStep {
                action,
                feature: line.feature.ok_or_else(|| bad("missing feature"))?,
                subset_size: line.subset_size,
                value: line.value,
            });
        }
        Ok(trace)
    }
}

/// Output of a filter: features in the filter's order with the criterion
/// value each had when it was picked.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    pub method: Method,
    pub order: Vec<usize>,
    pub criterion: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RankingHeader {
    method: Method,
    length: usize,
}

#[derive(Serialize, Deserialize)]
struct RankingLine {
    rank: usize,
    feature: usize,
    criterion: f64,
}

impl Ranking {
    /// A header line, then one `{rank, feature, criterion}` object per line.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&RankingHeader {
            method: self.method,
            length: self.order.len(),
        })?;
        out.push('\n');
        for (rank, (&feature, &criterion)) in self.order.iter().zip(&self.criterion).enumerate() {
            out.push_str(&serde_json::to_string(&RankingLine {
                rank,
                feature,
                criterion,
            })?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: RankingHeader = serde_json::from_str(
            lines
                .next()
                .ok_or_else(|| Error::Config("malformed ranking: empty".into()))?,
        )?;
        let mut ranking = Ranking {
            method: header.method,
            order: Vec::with_capacity(header.length),
            criterion: Vec::with_capacity(header.length),
        };
        for l in lines {
            let line: RankingLine = serde_json::from_str(l)?;
            ranking.order.push(line.feature);
            ranking.criterion.push(line.criterion);
        }
        Ok(ranking)
    }
}

/// A sequence of nested or chained subsets that can be replayed move by
/// move.
pub trait SubsetPath {
    fn universe(&self) -> usize;
    fn initial(&self) -> &[usize];
    fn moves(&self) -> Vec<(Action, usize)>;
}

impl SubsetPath for SelectionTrace {
    fn universe(&self) -> usize {
        self.universe
    }

    fn initial(&self) -> &[usize] {
        &self.initial
    }

    fn moves(&self) -> Vec<(Action, usize)> {
        self.steps.iter().map(|s| (s.action, s.feature)).collect()
    }
}

/// Paired with the universe size so the prefixes can be replayed.
pub struct RankingPath<'a> {
    pub ranking: &'a Ranking,
    pub universe: usize,
}

impl SubsetPath for RankingPath<'_> {
    fn universe(&self) -> usize {
        self.universe
    }

    fn initial(&self) -> &[usize] {
        &[]
    }

    fn moves(&self) -> Vec<(Action, usize)> {
        self.ranking
            .order
            .iter()
            .map(|&p| (Action::Add, p))
            .collect()
    }
}

/// The subset kept after validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetChoice {
    pub snapshot: usize,
    pub features: Vec<usize>,
    pub validation_error: f64,
    /// Validation misclassification count of every snapshot.
    pub validation_misclassified: Vec<usize>,
}

/// Scores every subset along `path` by classification error on
/// `validation` with `model`, and returns the smallest subset among those
/// with the lowest error; the earliest wins among equal sizes.
pub fn select_best_subset(
    path: &impl SubsetPath,
    model: &NbcModel,
    validation: &BinaryDataset,
) -> Result<SubsetChoice> {
    if validation.grid.fingerprint() != model.grid_fingerprint {
        return Err(Error::Contract(
            "validation data uses a different indicator grid than the model".into(),
        ));
    }
    let initial = FeatureSubset::from_indices(path.universe(), path.initial())?;
    let mut cache = JointCache::new(model, validation, initial)?;
    let mut errors = vec![cache.misclassified()];
    let mut sizes = vec![cache.subset().len()];
    let moves = path.moves();
    for &(action, p) in &moves {
        match action {
            Action::Add => cache.add_feature(p)?,
            Action::Remove => cache.remove_feature(p)?,
        }
        errors.push(cache.misclassified());
        sizes.push(cache.subset().len());
    }

    let best = choose_snapshot(&errors, &sizes);

    let mut subset = FeatureSubset::from_indices(path.universe(), path.initial())?;
    for &(action, p) in &moves[..best] {
        match action {
            Action::Add => subset.insert(p)?,
            Action::Remove => subset.remove(p)?,
        }
    }
    let n = validation.n_rows().max(1);
    Ok(SubsetChoice {
        snapshot: best,
        features: subset.indices().to_vec(),
        validation_error: errors[best] as f64 / n as f64,
        validation_misclassified: errors,
    })
}

/// Index of the smallest subset among those with the fewest errors,
/// earliest first among equal sizes.
pub fn choose_snapshot(errors: &[usize], sizes: &[usize]) -> usize {
    (0..errors.len())
        .min_by_key(|&i| (errors[i], sizes[i], i))
        .expect("at least one snapshot")
}

/// Classification error of `features` on `data`, evaluated from scratch.
pub fn subset_error(model: &NbcModel, data: &BinaryDataset, features: &[usize]) -> Result<f64> {
    let subset = FeatureSubset::from_indices(model.n_features, features)?;
    Ok(JointCache::new(model, data, subset)?.classification_error())
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed {
        moves: Vec<(Action, usize)>,
    }

    impl SubsetPath for Fixed {
        fn universe(&self) -> usize {
            4
        }
        fn initial(&self) -> &[usize] {
            &[]
        }
        fn moves(&self) -> Vec<(Action, usize)> {
            self.moves.clone()
        }
    }

    #[test]
    fn measure_names_round_trip() {
        for m in [
            Measure::ClassificationError,
            Measure::ErrorProbability,
            Measure::LogConditionalLikelihood,
        ] {
            assert_eq!(m.name().parse::<Measure>().unwrap(), m);
        }
        assert!("accuracy".parse::<Measure>().is_err());
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert_eq!(
            "backward-forward".parse::<Method>().unwrap(),
            Method::BackwardForward
        );
        assert_eq!("mi_filter".parse::<Method>().unwrap(), Method::MiFilter);
    }

    #[test]
    fn ranking_jsonl_round_trip() {
        let r = Ranking {
            method: Method::MrmrFilter,
            order: vec![3, 0, 2],
            criterion: vec![0.5, 0.1, -0.25],
        };
        assert_eq!(Ranking::from_jsonl(&r.to_jsonl().unwrap()).unwrap(), r);
    }

    #[test]
    fn choice_rule() {
        // errors 0.3, 0.1, 0.1, 0.2 on 10 instances, sizes 1..4
        assert_eq!(choose_snapshot(&[3, 1, 1, 2], &[1, 2, 3, 4]), 1);
        // equal size, equal error: earliest wins
        assert_eq!(choose_snapshot(&[2, 1, 1], &[3, 2, 2]), 1);
        // a later, smaller subset beats an earlier, larger one
        assert_eq!(choose_snapshot(&[1, 1], &[5, 4]), 1);
    }

    #[test]
    fn jsonl_round_trip() {
        let trace = SelectionTrace {
            method: Method::BackwardForward,
            measure: Measure::ErrorProbability,
            universe: 3,
            initial: vec![0, 1, 2],
            initial_value: 0.25,
            steps: vec![
                TraceStep {
                    action: Action::Remove,
                    feature: 1,
                    subset_size: 2,
                    value: 0.2,
                },
                TraceStep {
                    action: Action::Add,
                    feature: 1,
                    subset_size: 3,
                    value: 0.1 + 0.2,
                },
            ],
        };
        let text = trace.to_jsonl().unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(SelectionTrace::from_jsonl(&text).unwrap(), trace);
        assert_eq!(trace.subset_at(1).unwrap().indices(), &[0, 2]);
        assert_eq!(trace.value_at(2), 0.1 + 0.2);
    }

    #[test]
    fn smallest_among_minimal_errors() {
        // Validation errors per snapshot are counted on real data below; here
        // only the choice rule is exercised through the public function.
        use crate::bits::BitMatrix;
        use crate::indicators::build_grid;
        use crate::nbc::fit;
        use crate::stats::TestFamily;

        let grid = build_grid(
            &[TestFamily::FVariance],
            &[20],
            &[0.1, 0.2, 0.3, 0.4],
            &[false],
        )
        .unwrap();
        // Feature 0 separates the classes, the others are noise that can only hurt.
        let rows = [
            [true, false, true, false],
            [true, true, false, false],
            [false, false, true, true],
            [false, true, false, true],
        ];
        let mut bits = BitMatrix::zeros(4, 4);
        for (i, r) in rows.iter().enumerate() {
            for (j, &b) in r.iter().enumerate() {
                bits.set(i, j, b);
            }
        }
        let data = BinaryDataset::new(bits, vec![0, 0, 1, 1], 2, grid).unwrap();
        let model = fit(&data, 1.0).unwrap();
        let path = Fixed {
            moves: vec![
                (Action::Add, 0),
                (Action::Add, 1),
                (Action::Add, 2),
                (Action::Add, 3),
            ],
        };
        let choice = select_best_subset(&path, &model, &data).unwrap();
        assert_eq!(choice.validation_misclassified[0], 2);
        assert_eq!(choice.validation_misclassified[1], 0);
        assert_eq!(choice.snapshot, 1);
        assert_eq!(choice.features, vec![0]);
        assert_eq!(choice.validation_error, 0.0);
    }
}
