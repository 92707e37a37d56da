use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, Resolved, Source};
use super::reference::{reference_quantile, ReferenceQuantile};
use crate::error::{Error, Result};
use crate::evt::{hill, hill_confidence_interval, weissman_quantile, OrderedSample};
use crate::functionals::{max_abs_diff, nesting_stride, norm_iter};
use crate::parallel::{map_indexed, Execution};
use crate::path_gen::{Multiplier, ProductSampler};
use crate::rng::{tags, RandomStream};

/// What `x̂_p` is compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantileTruth {
    /// `U(1/p)` of a direct tail model.
    ClosedForm(f64),
    /// Monte Carlo reference for a product norm.
    MonteCarlo(ReferenceQuantile),
    /// No reference: the estimate on oracle norms stands in.
    OracleEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub rep_index: usize,
    pub gamma_hat: f64,
    pub gamma_hat_oracle: f64,
    pub x_hat: f64,
    pub x_hat_oracle: f64,
    /// `max_i |X_i − X̂_i|`.
    pub max_abs_error: f64,
    /// `max_abs_error / U(n/k)` with the closed-form `U` when known,
    /// otherwise equal to `c_n_threshold`.
    pub c_n: f64,
    /// `max_abs_error / X_(n−k,n)` on the oracle sample.
    pub c_n_threshold: f64,
    /// `√k (γ̂ − γ) / γ`.
    pub std_gamma_err: f64,
    /// `(√k / log d_n) (x̂_p / x_p − 1) / γ`; NaN when `d_n ≤ 1`.
    pub std_quant_err: f64,
    /// `x̂_p / x_p − 1`.
    pub rel_quant_err: f64,
    pub ci_covers: bool,
    /// Whether `|γ̂ − γ̂_oracle| ≤ 2 log(4) K` held, checked only when
    /// `K = c_n_threshold ≤ 1/2`.
    pub proof_chain: Option<bool>,
    pub failure: Option<String>,
}

impl ReplicationResult {
    fn failed(rep_index: usize, err: &Error) -> Self {
        Self {
            rep_index,
            gamma_hat: f64::NAN,
            gamma_hat_oracle: f64::NAN,
            x_hat: f64::NAN,
            x_hat_oracle: f64::NAN,
            max_abs_error: f64::NAN,
            c_n: f64::NAN,
            c_n_threshold: f64::NAN,
            std_gamma_err: f64::NAN,
            std_quant_err: f64::NAN,
            rel_quant_err: f64::NAN,
            ci_covers: false,
            proof_chain: None,
            failure: Some(err.to_string()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// A validated experiment with its samplers and quantile reference ready.
pub struct Prepared<'a> {
    pub config: &'a ExperimentConfig,
    pub resolved: Resolved,
    pub truth: QuantileTruth,
    sampler: Option<ProductSampler>,
    /// Closed-form `U(n/k)` when the observed law is known.
    u_at_n_over_k: Option<f64>,
    exec: Execution,
}

impl<'a> Prepared<'a> {
    pub fn new(config: &'a ExperimentConfig, exec: Execution) -> Result<Self> {
        let resolved = config.resolve()?;
        let master = RandomStream::new(config.master_seed);
        let (sampler, truth, u_at_n_over_k) = match &config.source {
            Source::Direct(model) => {
                let x_p = model.tail_quantile(1.0 / resolved.tail_prob)?;
                let u = model.tail_quantile(config.n as f64 / resolved.k as f64)?;
                (None, QuantileTruth::ClosedForm(x_p), Some(u))
            }
            Source::Product(spec) => {
                let sampler = ProductSampler::new(spec, config.m_oracle)?;
                let truth = match config.multiplier() {
                    Some(Multiplier::Tail(_)) if config.reference_draws > 0 => {
                        let r = reference_quantile(
                            spec,
                            config.norm_order,
                            config.m_oracle,
                            resolved.tail_prob,
                            config.reference_draws,
                            config.reference_pool,
                            &master.split(tags::REFERENCE),
                            exec,
                        )?;
                        QuantileTruth::MonteCarlo(*Arc::as_ref(&r))
                    }
                    _ => QuantileTruth::OracleEstimate,
                };
                (Some(sampler), truth, None)
            }
        };
        Ok(Self {
            config,
            resolved,
            truth,
            sampler,
            u_at_n_over_k,
            exec,
        })
    }

    /// Observed (coarse) and oracle values for replication `rep_index`.
    fn observe(&self, rep_index: usize) -> Result<(Vec<f64>, Vec<f64>)> {
        let cfg = self.config;
        let stream =
            RandomStream::new(cfg.master_seed).substream(tags::REPLICATION, rep_index as u64);
        match (&cfg.source, &self.sampler) {
            (Source::Direct(model), _) => {
                let x = model.sample(&stream.split(tags::DIRECT), cfg.n);
                Ok((x.clone(), x))
            }
            (Source::Product(_), Some(sampler)) => {
                let m_fine = cfg.m_oracle;
                let stride = nesting_stride(m_fine, cfg.m)?;
                let order = cfg.norm_order;
                let pairs = map_indexed(
                    self.exec,
                    cfg.n,
                    || (sampler.driver().workspace(), vec![0.0; m_fine]),
                    |(ws, row), i| {
                        sampler.fill_row(&stream, i, ws, row);
                        let coarse = norm_iter(row.iter().step_by(stride).copied(), cfg.m, order);
                        let fine = norm_iter(row.iter().copied(), m_fine, order);
                        (coarse, fine)
                    },
                );
                Ok(pairs.into_iter().unzip())
            }
            (Source::Product(_), None) => unreachable!("product source always has a sampler"),
        }
    }

    pub fn replicate(&self, rep_index: usize) -> ReplicationResult {
        self.try_replicate(rep_index)
            .unwrap_or_else(|e| ReplicationResult::failed(rep_index, &e))
    }

    fn try_replicate(&self, rep_index: usize) -> Result<ReplicationResult> {
        let Resolved {
            k,
            tail_prob,
            d_n,
            gamma,
            ..
        } = self.resolved;
        let (observed, oracle) = self.observe(rep_index)?;
        let max_abs_error = max_abs_diff(&observed, &oracle);

        let observed = OrderedSample::new(observed)?;
        let est = hill(&observed, k)?;
        let q = weissman_quantile(&observed, k, tail_prob, est.gamma_hat)?;
        let (est_o, q_o) = if self.config.is_direct() {
            (est, q)
        } else {
            let oracle = OrderedSample::new(oracle)?;
            let h = hill(&oracle, k)?;
            let q = weissman_quantile(&oracle, k, tail_prob, h.gamma_hat)?;
            (h, q)
        };

        let c_n_threshold = max_abs_error / est_o.threshold;
        let c_n = self
            .u_at_n_over_k
            .map_or(c_n_threshold, |u| max_abs_error / u);
        let proof_chain = (c_n_threshold <= 0.5)
            .then(|| (est.gamma_hat - est_o.gamma_hat).abs() <= 2.0 * 4f64.ln() * c_n_threshold);

        let x_p = match &self.truth {
            QuantileTruth::ClosedForm(v) => *v,
            QuantileTruth::MonteCarlo(r) => r.value,
            QuantileTruth::OracleEstimate => q_o.x_hat,
        };
        let sqrt_k = (k as f64).sqrt();
        let rel_quant_err = q.x_hat / x_p - 1.0;
        let std_quant_err = if d_n > 1.0 {
            sqrt_k / d_n.ln() * rel_quant_err / gamma
        } else {
            f64::NAN
        };
        let (lo, hi) = hill_confidence_interval(&est, self.config.ci_level)?;

        Ok(ReplicationResult {
            rep_index,
            gamma_hat: est.gamma_hat,
            gamma_hat_oracle: est_o.gamma_hat,
            x_hat: q.x_hat,
            x_hat_oracle: q_o.x_hat,
            max_abs_error,
            c_n,
            c_n_threshold,
            std_gamma_err: sqrt_k * (est.gamma_hat - gamma) / gamma,
            std_quant_err,
            rel_quant_err,
            ci_covers: lo <= gamma && gamma <= hi,
            proof_chain,
            failure: None,
        })
    }
}
