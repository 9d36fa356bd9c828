// SPDX-License-Identifier: MIT OR Apache-2.0

use std::f64::consts::PI;

use super::{check_sizes, PValue};
use crate::error::Result;

/// Sup-distance between the empirical CDFs of two samples.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len(), b.len());
    let (mut i, mut j) = (0, 0);
    // Work on integer numerators |i * nb - j * na| to keep D exact.
    let mut best: u64 = 0;
    while i < na && j < nb {
        let v = if a[i].total_cmp(&b[j]).is_le() {
            a[i]
        } else {
            b[j]
        };
        while i < na && a[i] == v {
            i += 1;
        }
        while j < nb && b[j] == v {
            j += 1;
        }
        let gap = (i as i64 * nb as i64 - j as i64 * na as i64).unsigned_abs();
        best = best.max(gap);
    }
    best as f64 / (na as f64 * nb as f64)
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Theta-function form of the CDF, fast for small lambda.
        let y = -PI * PI / (8.0 * lambda * lambda);
        let sum: f64 = (0..20)
            .map(|k| ((2 * k + 1) as f64).powi(2) * y)
            .map(f64::exp)
            .sum();
        (1.0 - (2.0 * PI).sqrt() / lambda * sum).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for k in 1..=100 {
            let kf = k as f64;
            let term = (-2.0 * kf * kf * lambda * lambda).exp();
            sum += if k % 2 == 1 { term } else { -term };
            if term < 1e-17 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// Two-sided two-sample Kolmogorov-Smirnov test.
///
/// The asymptotic Kolmogorov distribution is evaluated at
/// `(sqrt(ne) + 0.12 + 0.11 / sqrt(ne)) * D` with `ne = na nb / (na + nb)`.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<PValue> {
    check_sizes("Kolmogorov-Smirnov", a, b)?;
    let d = ks_statistic(a, b);
    if d == 0.0 {
        return Ok(PValue::ONE);
    }
    let ne = (a.len() * b.len()) as f64 / (a.len() + b.len()) as f64;
    let sq = ne.sqrt();
    Ok(PValue::new(kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)))
}
