// SPDX-License-Identifier: MIT OR Apache-2.0

#![allow(dead_code)]

use nbselect::bits::BitMatrix;
use nbselect::indicators::{build_grid, BinaryDataset, IndicatorGrid};
use nbselect::nbc::{FeatureSubset, NbcModel};
use nbselect::stats::TestFamily;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A grid with exactly `p` indicators, used as a label for hand-built bit
/// matrices.
pub fn grid_of(p: usize) -> IndicatorGrid {
    let thresholds: Vec<f64> = (1..=p).map(|t| t as f64 / (p + 1) as f64).collect();
    build_grid(&[TestFamily::MannWhitneyU], &[20], &thresholds, &[false]).unwrap()
}

pub fn dataset(rows: &[Vec<bool>], labels: &[usize], k: usize) -> BinaryDataset {
    let p = rows.first().map_or(0, |r| r.len());
    let mut bits = BitMatrix::zeros(rows.len(), p);
    for (i, r) in rows.iter().enumerate() {
        for (j, &b) in r.iter().enumerate() {
            bits.set(i, j, b);
        }
    }
    BinaryDataset::new(bits, labels.to_vec(), k, grid_of(p)).unwrap()
}

/// Random dataset where every class appears at least once and feature `j`
/// fires with a class-dependent rate, so features carry some signal.
pub fn random_dataset(seed: u64, n: usize, p: usize, k: usize) -> BinaryDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates: Vec<Vec<f64>> = (0..p)
        .map(|_| (0..k).map(|_| rng.gen_range(0.05..0.95)).collect())
        .collect();
    let labels: Vec<usize> = (0..n)
        .map(|i| if i < k { i } else { rng.gen_range(0..k) })
        .collect();
    let rows: Vec<Vec<bool>> = labels
        .iter()
        .map(|&y| (0..p).map(|j| rng.gen_bool(rates[j][y])).collect())
        .collect();
    dataset(&rows, &labels, k)
}

/// `log P(Y=k) + sum_{p in S} log P(B^p = b_p | Y=k)` summed directly.
pub fn direct_log_joint(model: &NbcModel, subset: &FeatureSubset, bits: &[bool]) -> Vec<f64> {
    (0..model.class_count)
        .map(|k| {
            let mut s = model.log_prior[k];
            for p in subset.sorted() {
                s += model.log_cond(p, bits[p], k);
            }
            s
        })
        .collect()
}

/// Plug-in mutual information in nats, straight from a joint count table.
pub fn direct_mi(x: &[usize], y: &[usize]) -> f64 {
    let n = x.len() as f64;
    let xs = x.iter().max().map_or(0, |m| m + 1);
    let ys = y.iter().max().map_or(0, |m| m + 1);
    let mut joint = vec![vec![0.0; ys]; xs];
    for (&a, &b) in x.iter().zip(y) {
        joint[a][b] += 1.0;
    }
    let px: Vec<f64> = joint.iter().map(|r| r.iter().sum::<f64>() / n).collect();
    let py: Vec<f64> = (0..ys)
        .map(|b| joint.iter().map(|r| r[b]).sum::<f64>() / n)
        .collect();
    let mut mi = 0.0;
    for a in 0..xs {
        for b in 0..ys {
            let pab = joint[a][b] / n;
            if pab > 0.0 {
                mi += pab * (pab / (px[a] * py[b])).ln();
            }
        }
    }
    mi
}

pub fn column(data: &BinaryDataset, p: usize) -> Vec<usize> {
    (0..data.n_rows())
        .map(|i| data.bits.get(i, p) as usize)
        .collect()
}

pub fn tmp_dir(name: &str) -> tempfile::TempDir {
    tempfile::Builder::new()
        .prefix(&format!("nbselect-{name}-"))
        .tempdir()
        .unwrap()
}
