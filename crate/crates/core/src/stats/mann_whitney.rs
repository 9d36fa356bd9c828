// SPDX-License-Identifier: MIT OR Apache-2.0

use statrs::function::erf::erfc;

use super::{check_sizes, PValue};
use crate::error::Result;

/// Samples where both sides are smaller than this use the exact conditional
/// null distribution instead of the normal approximation.
const EXACT_LIMIT: usize = 8;

/// Tie group in the pooled, sorted sample.
struct TieGroup {
    size: usize,
    from_a: usize,
    /// Twice the midrank, an integer.
    doubled_rank: u64,
}

fn tie_groups(a: &[f64], b: &[f64]) -> Vec<TieGroup> {
    let mut pooled: Vec<(f64, bool)> = a
        .iter()
        .map(|&v| (v, true))
        .chain(b.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut groups = Vec::new();
    let mut start = 0;
    while start < pooled.len() {
        let mut end = start + 1;
        while end < pooled.len() && pooled[end].0 == pooled[start].0 {
            end += 1;
        }
        let size = end - start;
        groups.push(TieGroup {
            size,
            from_a: pooled[start..end].iter().filter(|x| x.1).count(),
            doubled_rank: (2 * start + size + 1) as u64,
        });
        start = end;
    }
    groups
}

/// Two-sided Mann-Whitney U test.
///
/// Large samples use the normal approximation with tie and continuity
/// corrections. When both samples have fewer than 8 points the p-value is
/// taken from the exact permutation distribution of the rank sum,
/// conditional on the observed tie pattern.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<PValue> {
    check_sizes("Mann-Whitney U", a, b)?;
    let groups = tie_groups(a, b);
    if groups.len() == 1 {
        return Ok(PValue::ONE);
    }
    if a.len() < EXACT_LIMIT && b.len() < EXACT_LIMIT {
        Ok(exact_p(&groups, a.len(), b.len()))
    } else {
        Ok(normal_p(&groups, a.len(), b.len()))
    }
}

fn normal_p(groups: &[TieGroup], n1: usize, n2: usize) -> PValue {
    let (n1f, n2f) = (n1 as f64, n2 as f64);
    let n = n1f + n2f;
    let rank_sum_a: f64 = groups
        .iter()
        .map(|g| g.from_a as f64 * g.doubled_rank as f64 / 2.0)
        .sum();
    let u = rank_sum_a - n1f * (n1f + 1.0) / 2.0;
    let mean = n1f * n2f / 2.0;
    let ties: f64 = groups
        .iter()
        .map(|g| {
            let t = g.size as f64;
            t * t * t - t
        })
        .sum();
    let var = n1f * n2f / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return PValue::ONE;
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
    PValue::new(erfc(z / std::f64::consts::SQRT_2))
}

fn exact_p(groups: &[TieGroup], n1: usize, n2: usize) -> PValue {
    let n = n1 + n2;
    let max_sum = n * (n + 1);
    // ways[j][s]: number of ways to draw j points of sample a so that their
    // doubled rank sum is s.
    let mut ways = vec![vec![0u64; max_sum + 1]; n1 + 1];
    ways[0][0] = 1;
    for g in groups {
        let mut next = vec![vec![0u64; max_sum + 1]; n1 + 1];
        for j in 0..=n1 {
            for (s, &w) in ways[j].iter().enumerate() {
                if w == 0 {
                    continue;
                }
                for c in 0..=g.size.min(n1 - j) {
                    let s2 = s + c * g.doubled_rank as usize;
                    next[j + c][s2] += w * binomial(g.size, c);
                }
            }
        }
        ways = next;
    }

    let observed: u64 = groups
        .iter()
        .map(|g| g.from_a as u64 * g.doubled_rank)
        .sum();
    let center = (n1 * (n + 1)) as i64;
    let dev = (observed as i64 - center).abs();
    let total = binomial(n, n1);
    let extreme: u64 = ways[n1]
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as i64 - center).abs() >= dev)
        .map(|(_, &w)| w)
        .sum();
    PValue::new(extreme as f64 / total as f64)
}

fn binomial(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, i| acc * (n - i) as u64 / (i + 1) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_samples() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(mann_whitney_u(&a, &a).unwrap().value(), 1.0);
        let big: Vec<f64> = (0..30).map(f64::from).collect();
        assert_eq!(mann_whitney_u(&big, &big).unwrap().value(), 1.0);
    }

    #[test]
    fn separated_small_samples() {
        // Two of the 20 assignments are as extreme as the observed one.
        let p = mann_whitney_u(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
        assert!((p.value() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn all_tied_gives_one() {
        let a = [2.0; 12];
        assert_eq!(mann_whitney_u(&a, &a[..9]).unwrap().value(), 1.0);
    }

    #[test]
    fn symmetric() {
        let a: Vec<f64> = (0..20).map(|i| (i as f64 * 0.37).sin()).collect();
        let b: Vec<f64> = (0..15).map(|i| (i as f64 * 0.91).cos() + 0.3).collect();
        assert_eq!(
            mann_whitney_u(&a, &b).unwrap().value(),
            mann_whitney_u(&b, &a).unwrap().value()
        );
    }

    #[test]
    fn too_small() {
        assert!(mann_whitney_u(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn normal_approximation_reference() {
        // 10 vs 10, no ties, a entirely below b: U = 0, mean 50,
        // var = 100 * 21 / 12 = 175, z = 49.5 / sqrt(175).
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = (10..20).map(f64::from).collect();
        let z: f64 = 49.5 / 175f64.sqrt();
        let expected = erfc(z / std::f64::consts::SQRT_2);
        let p = mann_whitney_u(&a, &b).unwrap().value();
        assert!((p - expected).abs() < 1e-15);
        assert!(p < 2e-4);
    }
}
