// SPDX-License-Identifier: MIT OR Apache-2.0

use statrs::function::beta::beta_reg;

use super::{check_sizes, PValue};
use crate::error::Result;

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// Two-sided F test for equality of variances.
///
/// Windows with zero variance on either side give `p = 1`.
pub fn f_test_variance(a: &[f64], b: &[f64]) -> Result<PValue> {
    check_sizes("F", a, b)?;
    Ok(f_test_from_moments(
        sample_variance(a),
        a.len(),
        sample_variance(b),
        b.len(),
    ))
}

/// F test from sample variances and sample sizes.
pub fn f_test_from_moments(var_a: f64, n_a: usize, var_b: f64, n_b: usize) -> PValue {
    if !(var_a > 0.0 && var_b > 0.0) {
        return PValue::ONE;
    }
    // The larger variance goes in the numerator so that swapping the
    // samples runs the identical computation.
    let ((v1, n1), (v2, n2)) = if (var_a, n_a) >= (var_b, n_b) {
        ((var_a, n_a), (var_b, n_b))
    } else {
        ((var_b, n_b), (var_a, n_a))
    };
    if v1 == v2 && n1 == n2 {
        return PValue::ONE;
    }
    let (d1, d2) = ((n1 - 1) as f64, (n2 - 1) as f64);
    let f = v1 / v2;
    let upper = beta_reg(d2 / 2.0, d1 / 2.0, d2 / (d2 + d1 * f));
    PValue::new(2.0 * upper.min(1.0 - upper))
}
