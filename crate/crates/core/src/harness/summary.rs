use serde::{Deserialize, Serialize};

use super::config::Resolved;
use super::ks::{ks_test, KsResult};
use super::replication::ReplicationResult;
use crate::error::{Error, Result};
use crate::evt::LimitLaw;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileSummary {
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    pub mean_standardized: f64,
    pub sd_standardized: f64,
    /// Median of `|x̂_p / x_p − 1|`.
    pub median_rel_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub replications: usize,
    pub replication_failures: usize,
    pub mean_gamma_hat: f64,
    pub mean_gamma_hat_oracle: f64,
    pub mean_bias: f64,
    pub rmse: f64,
    pub mean_standardized: f64,
    pub empirical_sd_of_standardized: f64,
    pub ks_statistic: f64,
    pub ks_p_value: f64,
    /// Absent when `d_n ≤ 1` makes the standardization undefined.
    pub quantile: Option<QuantileSummary>,
    pub ci_coverage: f64,
    /// `(median, p90)` of `C_n`.
    pub c_n_quantiles: (f64, f64),
    /// `(median, p90)` of `max|X − X̂| / X_(n−k,n)`.
    pub c_n_threshold_quantiles: (f64, f64),
    pub median_max_abs_error: f64,
    /// Share of replications with `√k · C_n` under the negligibility threshold.
    pub negligible_fraction: f64,
    pub proof_chain_checked: usize,
    pub proof_chain_violations: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation; 0 for a single value.
fn sd(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let mu = mean(xs);
    (xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Linear-interpolation quantile of an unsorted sample.
pub fn sample_quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Folds the rep-ordered table into summary statistics.
pub fn summarize(
    table: &[ReplicationResult],
    resolved: &Resolved,
    negligible_threshold: f64,
) -> Result<ExperimentSummary> {
    let ok: Vec<&ReplicationResult> = table.iter().filter(|r| !r.is_failed()).collect();
    if ok.is_empty() {
        return Err(Error::FailureCeiling {
            failed: table.len(),
            total: table.len(),
        });
    }
    let col = |f: fn(&ReplicationResult) -> f64| -> Vec<f64> { ok.iter().map(|r| f(r)).collect() };
    let gamma = resolved.gamma;
    let gamma_hat = col(|r| r.gamma_hat);
    let std_gamma = col(|r| r.std_gamma_err);
    let std_law = standardized(&resolved.limit_law)?;
    let KsResult { statistic, p_value } = ks_test(&std_gamma, &std_law)?;

    let std_quant = col(|r| r.std_quant_err);
    let quantile = if std_quant.iter().all(|x| x.is_finite()) {
        let ks = ks_test(&std_quant, &std_law)?;
        let abs_rel: Vec<f64> = ok.iter().map(|r| r.rel_quant_err.abs()).collect();
        Some(QuantileSummary {
            ks_statistic: ks.statistic,
            ks_p_value: ks.p_value,
            mean_standardized: mean(&std_quant),
            sd_standardized: sd(&std_quant),
            median_rel_error: sample_quantile(&abs_rel, 0.5),
        })
    } else {
        None
    };

    let c_n = col(|r| r.c_n);
    let c_n_thr = col(|r| r.c_n_threshold);
    let sqrt_k = (resolved.k as f64).sqrt();
    let checked: Vec<bool> = ok.iter().filter_map(|r| r.proof_chain).collect();
    let count = ok.len() as f64;

    Ok(ExperimentSummary {
        replications: table.len(),
        replication_failures: table.len() - ok.len(),
        mean_gamma_hat: mean(&gamma_hat),
        mean_gamma_hat_oracle: mean(&col(|r| r.gamma_hat_oracle)),
        mean_bias: mean(&gamma_hat) - gamma,
        rmse: (gamma_hat.iter().map(|g| (g - gamma).powi(2)).sum::<f64>() / count).sqrt(),
        mean_standardized: mean(&std_gamma),
        empirical_sd_of_standardized: sd(&std_gamma),
        ks_statistic: statistic,
        ks_p_value: p_value,
        quantile,
        ci_coverage: ok.iter().filter(|r| r.ci_covers).count() as f64 / count,
        c_n_quantiles: (sample_quantile(&c_n, 0.5), sample_quantile(&c_n, 0.9)),
        c_n_threshold_quantiles: (
            sample_quantile(&c_n_thr, 0.5),
            sample_quantile(&c_n_thr, 0.9),
        ),
        median_max_abs_error: sample_quantile(&col(|r| r.max_abs_error), 0.5),
        negligible_fraction: c_n
            .iter()
            .filter(|&&c| sqrt_k * c < negligible_threshold)
            .count() as f64
            / count,
        proof_chain_checked: checked.len(),
        proof_chain_violations: checked.iter().filter(|&&b| !b).count(),
    })
}

/// `Γ/γ ~ N(λ/((1−ρ)γ), 1)`.
fn standardized(law: &LimitLaw) -> Result<LimitLaw> {
    LimitLaw::new(law.lambda / law.gamma, law.rho, 1.0)
}
