// SPDX-License-Identifier: MIT OR Apache-2.0

//! Greedy wrapper searches driven by the naive Bayes model itself.
//!
//! Every step scores all candidate moves against a frozen [`JointCache`],
//! in parallel over candidates, then applies the best one. Candidates are
//! compared by `(measure, feature index)`, so the chosen move does not
//! depend on how the scan was split across threads.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Action, Measure, Method, SelectionTrace, TraceStep};
use crate::error::{Error, Result};
use crate::indicators::BinaryDataset;
use crate::nbc::{FeatureSubset, JointCache, NbcModel};

/// Minimum decrease of the measure for a floating-search move to count.
pub const IMPROVEMENT_EPSILON: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    fn flip(self) -> Self {
        match self {
            Direction::Forward => Direction::Backward,
            Direction::Backward => Direction::Forward,
        }
    }

    fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

fn by_value_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Best `(value, feature)` move in `direction`, if any candidate exists.
fn best_move(
    cache: &JointCache<'_>,
    measure: Measure,
    direction: Direction,
) -> Option<(f64, usize)> {
    let subset = cache.subset();
    let candidates: Vec<usize> = match direction {
        Direction::Forward => (0..subset.universe())
            .filter(|&p| !subset.contains(p))
            .collect(),
        Direction::Backward => subset.indices().to_vec(),
    };
    candidates
        .par_iter()
        .map(|&p| (measure.evaluate_move(cache, p, direction.sign()), p))
        .min_by(by_value_then_index)
}

fn apply(cache: &mut JointCache<'_>, direction: Direction, p: usize) -> Result<Action> {
    match direction {
        Direction::Forward => cache.add_feature(p).map(|_| Action::Add),
        Direction::Backward => cache.remove_feature(p).map(|_| Action::Remove),
    }
}

fn start_trace(method: Method, measure: Measure, cache: &JointCache<'_>) -> SelectionTrace {
    SelectionTrace {
        method,
        measure,
        universe: cache.subset().universe(),
        initial: cache.subset().indices().to_vec(),
        initial_value: measure.evaluate(cache),
        steps: Vec::new(),
    }
}

fn greedy(
    model: &NbcModel,
    data: &BinaryDataset,
    measure: Measure,
    direction: Direction,
    steps: usize,
) -> Result<SelectionTrace> {
    let p_count = model.n_features;
    let (initial, method) = match direction {
        Direction::Forward => (FeatureSubset::empty(p_count), Method::Forward),
        Direction::Backward => (FeatureSubset::full(p_count), Method::Backward),
    };
    let mut cache = JointCache::new(model, data, initial)?;
    let mut trace = start_trace(method, measure, &cache);
    for _ in 0..steps {
        let Some((value, p)) = best_move(&cache, measure, direction) else {
            break;
        };
        let action = apply(&mut cache, direction, p)?;
        trace.steps.push(TraceStep {
            action,
            feature: p,
            subset_size: cache.subset().len(),
            value,
        });
    }
    Ok(trace)
}

/// Adds the best feature at every step, `cap` times, starting from the
/// empty subset. Steps that worsen the measure are still taken.
pub fn forward_search(
    model: &NbcModel,
    data: &BinaryDataset,
    measure: Measure,
    cap: usize,
) -> Result<SelectionTrace> {
    if cap > model.n_features {
        return Err(Error::Config(format!(
            "forward cap {cap} exceeds the {} available features",
            model.n_features
        )));
    }
    greedy(model, data, measure, Direction::Forward, cap)
}

/// Removes the worst feature at every step, from the full set down to the
/// empty one.
pub fn backward_search(
    model: &NbcModel,
    data: &BinaryDataset,
    measure: Measure,
) -> Result<SelectionTrace> {
    greedy(model, data, measure, Direction::Backward, model.n_features)
}

/// Floating search: greedy phases that only take strictly improving moves,
/// alternating direction, until two phases in a row make no move.
///
/// A `Backward` start begins from the full set, a `Forward` start from the
/// empty set. More than `10 P` moves aborts with [`Error::SearchBudget`].
pub fn floating_search(
    model: &NbcModel,
    data: &BinaryDataset,
    measure: Measure,
    start: Direction,
) -> Result<SelectionTrace> {
    let p_count = model.n_features;
    let (initial, method) = match start {
        Direction::Forward => (FeatureSubset::empty(p_count), Method::ForwardBackward),
        Direction::Backward => (FeatureSubset::full(p_count), Method::BackwardForward),
    };
    let mut cache = JointCache::new(model, data, initial)?;
    let mut trace = start_trace(method, measure, &cache);
    let mut current = trace.initial_value;
    let budget = 10 * p_count;
    let mut direction = start;
    let mut idle_phases = 0;

    while idle_phases < 2 {
        let mut moved = false;
        while let Some((value, p)) = best_move(&cache, measure, direction) {
            if value >= current - IMPROVEMENT_EPSILON {
                break;
            }
            let action = apply(&mut cache, direction, p)?;
            current = value;
            moved = true;
            trace.steps.push(TraceStep {
                action,
                feature: p,
                subset_size: cache.subset().len(),
                value,
            });
            if trace.steps.len() > budget {
                return Err(Error::SearchBudget {
                    moves: trace.steps.len(),
                    budget,
                });
            }
        }
        idle_phases = if moved { 0 } else { idle_phases + 1 };
        direction = direction.flip();
    }
    Ok(trace)
}
