//! One-sample Kolmogorov–Smirnov test against a normal limit law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::LimitLaw;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

const SERIES_TERMS: usize = 100;

/// `P(K > x)` for the Kolmogorov distribution.
///
/// Uses the alternating series `2 Σ (−1)^(j−1) exp(−2 j² x²)` (first 100
/// terms) for `x ≥ 1` and the Jacobi theta form
/// `1 − (√(2π)/x) Σ exp(−(2j−1)² π² / (8x²))` below, where the alternating
/// series converges too slowly.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if !(x > 0.0) {
        return 1.0;
    }
    let p = if x >= 1.0 {
        let mut sum = 0.0;
        for j in 1..=SERIES_TERMS {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * x * x).exp();
            sum += if j % 2 == 1 { term } else { -term };
        }
        2.0 * sum
    } else {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let cdf: f64 = (1..=SERIES_TERMS)
            .map(|j| {
                let odd = (2 * j - 1) as f64;
                (-odd * odd * pi2 / (8.0 * x * x)).exp()
            })
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / x;
        1.0 - cdf
    };
    p.clamp(0.0, 1.0)
}

/// KS distance between the empirical CDF of `samples` and the normal CDF of
/// `reference`, with the asymptotic p-value at `√B · D`.
pub fn ks_test(samples: &[f64], reference: &LimitLaw) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::invalid("samples", "empty"));
    }
    if !(reference.variance > 0.0) {
        return Err(Error::invalid("reference", "variance must be positive"));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::invalid("samples", "contains NaN"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len() as f64;
    let statistic = sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = reference.cdf(x);
            ((i + 1) as f64 / b - f).max(f - i as f64 / b)
        })
        .fold(0.0, f64::max);
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_survival(b.sqrt() * statistic),
    })
}
