// SPDX-License-Identifier: MIT OR Apache-2.0

//! Model-free rankings: plain mutual information and greedy mRMR.

use rayon::prelude::*;

use super::{Method, Ranking};
use crate::bits::and_count;
use crate::indicators::BinaryDataset;

/// Plug-in mutual information (nats) of a contingency table given as rows
/// of counts. Empty cells contribute 0.
pub fn mi_from_table(table: &[Vec<usize>]) -> f64 {
    let n: usize = table.iter().flatten().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    let row_tot: Vec<f64> = table
        .iter()
        .map(|r| r.iter().sum::<usize>() as f64)
        .collect();
    let cols = table.first().map_or(0, Vec::len);
    let col_tot: Vec<f64> = (0..cols)
        .map(|c| table.iter().map(|r| r[c]).sum::<usize>() as f64)
        .collect();
    let mut mi = 0.0;
    for (r, row) in table.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64;
                mi += joint / n * (joint * n / (row_tot[r] * col_tot[c])).ln();
            }
        }
    }
    mi.max(0.0)
}

/// `I(B; Y)` of one binary column against class labels in `0..class_count`.
pub fn mutual_information(column: &[bool], labels: &[usize], class_count: usize) -> f64 {
    let mut table = vec![vec![0usize; class_count]; 2];
    for (&b, &y) in column.iter().zip(labels) {
        table[b as usize][y] += 1;
    }
    mi_from_table(&table)
}

/// Per-column quantities reused by both filters.
struct ColumnCounts {
    ones: Vec<usize>,
    relevance: Vec<f64>,
}

fn column_counts(data: &BinaryDataset) -> ColumnCounts {
    let masks = data.class_masks();
    let class_counts = data.class_counts();
    let (ones, relevance) = (0..data.n_features())
        .into_par_iter()
        .map(|p| {
            let col = data.bits.column(p);
            let ones_k: Vec<usize> = masks.iter().map(|m| and_count(col, m)).collect();
            let zeros_k: Vec<usize> = ones_k
                .iter()
                .zip(&class_counts)
                .map(|(o, c)| c - o)
                .collect();
            let ones: usize = ones_k.iter().sum();
            (ones, mi_from_table(&[zeros_k, ones_k]))
        })
        .unzip();
    ColumnCounts { ones, relevance }
}

/// `I(B^a; B^b)` from popcounts.
fn pair_mi(data: &BinaryDataset, counts: &ColumnCounts, a: usize, b: usize) -> f64 {
    let n = data.n_rows();
    let both = and_count(data.bits.column(a), data.bits.column(b));
    let (oa, ob) = (counts.ones[a], counts.ones[b]);
    mi_from_table(&[vec![n + both - oa - ob, ob - both], vec![oa - both, both]])
}

/// Features by decreasing `I(B^p; Y)`, ties by index.
pub fn mi_rank(data: &BinaryDataset) -> Ranking {
    let relevance = column_counts(data).relevance;
    let mut order: Vec<usize> = (0..data.n_features()).collect();
    order.sort_by(|&a, &b| relevance[b].total_cmp(&relevance[a]).then(a.cmp(&b)));
    let criterion = order.iter().map(|&p| relevance[p]).collect();
    Ranking {
        method: Method::MiFilter,
        order,
        criterion,
    }
}

/// Greedy mRMR in difference form: the first pick maximises relevance,
/// each later pick maximises `I(B^p; Y) - mean_{j in S} I(B^p; B^j)`.
pub fn mrmr_rank(data: &BinaryDataset, limit: usize) -> Ranking {
    let p_count = data.n_features();
    let limit = limit.min(p_count);
    let counts = column_counts(data);
    let mut selected = vec![false; p_count];
    let mut redundancy = vec![0.0; p_count];
    let mut order = Vec::with_capacity(limit);
    let mut criterion = Vec::with_capacity(limit);

    for step in 0..limit {
        let mut best: Option<(f64, usize)> = None;
        for p in (0..p_count).filter(|&p| !selected[p]) {
            let score = if step == 0 {
                counts.relevance[p]
            } else {
                counts.relevance[p] - redundancy[p] / step as f64
            };
            if best.is_none_or(|(s, _)| score > s) {
                best = Some((score, p));
            }
        }
        let (score, chosen) = best.expect("limit <= number of features");
        selected[chosen] = true;
        order.push(chosen);
        criterion.push(score);

        let updates: Vec<(usize, f64)> = (0..p_count)
            .into_par_iter()
            .filter(|&p| !selected[p])
            .map(|p| (p, pair_mi(data, &counts, p, chosen)))
            .collect();
        for (p, mi) in updates {
            redundancy[p] += mi;
        }
    }

    Ranking {
        method: Method::MrmrFilter,
        order,
        criterion,
    }
}
