use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::LimitLaw;
use crate::functionals::{NormOrder, DEFAULT_NEGLIGIBLE_THRESHOLD};
use crate::path_gen::{Multiplier, ProductSpec};
use crate::tail_models::TailModel;

/// What each replication observes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    /// i.i.d. draws of the tail model itself; no discretization.
    Direct(TailModel),
    /// Norms of product paths `R·Z` observed on a grid.
    Product(ProductSpec),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum KRule {
    Fixed(usize),
    /// `k = ⌊n^λ⌋`.
    Power(f64),
}

impl KRule {
    pub fn resolve(&self, n: usize) -> Result<usize> {
        let k = match *self {
            KRule::Fixed(k) => k,
            KRule::Power(lambda) => {
                if !(lambda > 0.0 && lambda < 1.0) {
                    return Err(Error::invalid(
                        "k_rule",
                        format!("power must lie in (0, 1), got {lambda}"),
                    ));
                }
                // Small nudge so exact powers such as 10000^0.5 floor to 100.
                ((n as f64).powf(lambda) * (1.0 + 1e-12)).floor() as usize
            }
        };
        if k == 0 || k >= n {
            return Err(Error::KOutOfRange { k, n });
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TailProbRule {
    Fixed(f64),
    OneOverN,
    COverN(f64),
}

impl TailProbRule {
    pub fn resolve(&self, n: usize) -> Result<f64> {
        let p = match *self {
            TailProbRule::Fixed(p) => p,
            TailProbRule::OneOverN => 1.0 / n as f64,
            TailProbRule::COverN(c) => c / n as f64,
        };
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::invalid(
                "tail_prob",
                format!("must lie in (0, 1), got {p}"),
            ));
        }
        Ok(p)
    }
}

/// The λ in `√k · A(n/k) → λ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LambdaLimit {
    Value(f64),
    /// `√k · A(n/k)` from the direct model's closed-form `A`.
    Auto(AutoTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AutoTag {
    Auto,
}

impl Default for LambdaLimit {
    fn default() -> Self {
        LambdaLimit::Value(0.0)
    }
}

fn default_norm_order() -> NormOrder {
    NormOrder::Infinity
}
fn default_m() -> usize {
    64
}
fn default_m_oracle() -> usize {
    4096
}
fn default_tail_prob() -> TailProbRule {
    TailProbRule::OneOverN
}
fn default_ci_level() -> f64 {
    0.95
}
fn default_threshold() -> f64 {
    DEFAULT_NEGLIGIBLE_THRESHOLD
}
fn default_reference_draws() -> usize {
    10_000_000
}
fn default_reference_pool() -> usize {
    4096
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: Source,
    #[serde(default = "default_norm_order")]
    pub norm_order: NormOrder,
    pub n: usize,
    /// Observation grid; ignored for direct sources.
    #[serde(default = "default_m")]
    pub m: usize,
    /// Oracle grid, a multiple of `m`; ignored for direct sources.
    #[serde(default = "default_m_oracle")]
    pub m_oracle: usize,
    pub k_rule: KRule,
    #[serde(default = "default_tail_prob")]
    pub tail_prob_rule: TailProbRule,
    pub replications: usize,
    pub master_seed: u64,
    /// Defaults to γ of the tail model (the multiplier for products).
    #[serde(default)]
    pub true_gamma: Option<f64>,
    /// Defaults to ρ of a direct tail model; unknown otherwise.
    #[serde(default)]
    pub true_rho: Option<f64>,
    #[serde(default)]
    pub lambda_limit: LambdaLimit,
    #[serde(default = "default_ci_level")]
    pub ci_level: f64,
    /// `√k · C_n` below this counts as negligible.
    #[serde(default = "default_threshold")]
    pub negligible_threshold: f64,
    /// Size of the Monte Carlo reference sample for the true quantile of a
    /// product norm; 0 falls back to comparing against the oracle estimate.
    #[serde(default = "default_reference_draws")]
    pub reference_draws: usize,
    /// Number of independent driver norms the reference sample reuses.
    #[serde(default = "default_reference_pool")]
    pub reference_pool: usize,
}

impl ExperimentConfig {
    /// A direct-sampling experiment with defaults elsewhere.
    pub fn direct(
        model: TailModel,
        n: usize,
        k_rule: KRule,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self::with_source(Source::Direct(model), n, k_rule, replications, master_seed)
    }

    pub fn product(
        spec: ProductSpec,
        n: usize,
        m: usize,
        m_oracle: usize,
        k_rule: KRule,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            m,
            m_oracle,
            ..Self::with_source(Source::Product(spec), n, k_rule, replications, master_seed)
        }
    }

    fn with_source(
        source: Source,
        n: usize,
        k_rule: KRule,
        replications: usize,
        master_seed: u64,
    ) -> Self {
        Self {
            source,
            norm_order: default_norm_order(),
            n,
            m: default_m(),
            m_oracle: default_m_oracle(),
            k_rule,
            tail_prob_rule: default_tail_prob(),
            replications,
            master_seed,
            true_gamma: None,
            true_rho: None,
            lambda_limit: LambdaLimit::default(),
            ci_level: default_ci_level(),
            negligible_threshold: default_threshold(),
            reference_draws: default_reference_draws(),
            reference_pool: default_reference_pool(),
        }
    }

    /// Validates the config and fixes every derived quantity.
    pub fn resolve(&self) -> Result<Resolved> {
        if self.n < 2 {
            return Err(Error::invalid("n", format!("must be ≥ 2, got {}", self.n)));
        }
        if self.replications < 1 {
            return Err(Error::invalid("replications", "must be ≥ 1"));
        }
        if !(self.ci_level > 0.0 && self.ci_level < 1.0) {
            return Err(Error::invalid(
                "ci_level",
                format!("must lie in (0, 1), got {}", self.ci_level),
            ));
        }
        if let NormOrder::Finite(p) = self.norm_order {
            if !(p >= 1.0) {
                return Err(Error::invalid(
                    "norm_order",
                    format!("must be ≥ 1, got {p}"),
                ));
            }
        }
        let k = self.k_rule.resolve(self.n)?;
        let tail_prob = self.tail_prob_rule.resolve(self.n)?;
        let mut warnings = Vec::new();

        let (model_gamma, model_rho) = match &self.source {
            Source::Direct(model) => (Some(model.gamma()), model.rho()),
            Source::Product(spec) => {
                spec.validate()?;
                if self.m < 2 {
                    return Err(Error::invalid("m", format!("must be ≥ 2, got {}", self.m)));
                }
                if !self.m_oracle.is_multiple_of(self.m) {
                    return Err(Error::invalid(
                        "m_oracle",
                        format!("{} is not a multiple of m = {}", self.m_oracle, self.m),
                    ));
                }
                if self.m_oracle < 64 * self.m {
                    warnings.push(format!(
                        "oracle grid {} refines m = {} by less than ×64; measured errors understate the true ones",
                        self.m_oracle, self.m
                    ));
                }
                (spec.multiplier.tail_model().map(TailModel::gamma), None)
            }
        };
        let gamma = self.true_gamma.or(model_gamma).ok_or_else(|| {
            Error::invalid("true_gamma", "required when the source has no tail model")
        })?;
        if !(gamma > 0.0) {
            return Err(Error::invalid(
                "true_gamma",
                format!("must be positive, got {gamma}"),
            ));
        }
        let rho = self.true_rho.or(model_rho);
        let lambda = match self.lambda_limit {
            LambdaLimit::Value(v) => v,
            LambdaLimit::Auto(_) => match &self.source {
                Source::Direct(model) => model.bias_scale(self.n, k)?,
                Source::Product(_) => {
                    return Err(Error::invalid(
                        "lambda_limit",
                        "`auto` needs a direct tail model with a closed-form A",
                    ))
                }
            },
        };
        if rho.is_none() && lambda != 0.0 {
            return Err(Error::invalid("true_rho", "required when lambda_limit ≠ 0"));
        }
        // With λ = 0 the law does not depend on ρ.
        let limit_law = LimitLaw::new(lambda, rho.unwrap_or(-1.0), gamma)?;

        let np = self.n as f64 * tail_prob;
        let d_n = k as f64 / np;
        if np >= k as f64 {
            warnings.push(format!(
                "n·p = {np} ≥ k = {k}: the quantile is not extreme relative to k"
            ));
        }
        if np.ln() >= (k as f64).sqrt() {
            warnings.push(format!(
                "log(n·p) = {} ≥ √k = {}",
                np.ln(),
                (k as f64).sqrt()
            ));
        }
        if self.replications < 100 {
            warnings.push(format!(
                "B = {} < 100: KS p-values rely on the asymptotic Kolmogorov law",
                self.replications
            ));
        }
        Ok(Resolved {
            k,
            tail_prob,
            d_n,
            gamma,
            rho,
            limit_law,
            warnings,
        })
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.source, Source::Direct(_))
    }

    pub(crate) fn multiplier(&self) -> Option<&Multiplier> {
        match &self.source {
            Source::Product(spec) => Some(&spec.multiplier),
            Source::Direct(_) => None,
        }
    }
}

/// Quantities derived from an [`ExperimentConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolved {
    pub k: usize,
    pub tail_prob: f64,
    /// `k / (n · tail_prob)`.
    pub d_n: f64,
    pub gamma: f64,
    pub rho: Option<f64>,
    pub limit_law: LimitLaw,
    pub warnings: Vec<String>,
}
