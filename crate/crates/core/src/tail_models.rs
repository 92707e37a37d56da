//! Heavy-tailed laws with closed-form tail quantile functions.
//!
//! Every family here is supported on `(0, ∞)` and is described by its
//! extreme value index γ, its second-order parameter ρ and the auxiliary
//! function `A` in `(U(tx)/U(t) − x^γ)/A(t) → x^γ (x^ρ − 1)/ρ`.

use rand::distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RandomStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum Family {
    /// `1 − F(x) = (x/scale)^(−1/γ)` for `x ≥ scale`.
    Pareto { gamma: f64 },
    /// `F(x) = exp(−(x/scale)^(−1/γ))`.
    Frechet { gamma: f64 },
    /// Burr XII, `1 − F(x) = (1 + (x/scale)^τ)^(−λ)`.
    Burr { tau: f64, lambda_shape: f64 },
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Pareto { .. } => "pareto",
            Family::Frechet { .. } => "frechet",
            Family::Burr { .. } => "burr",
        }
    }
}

/// Wire form of a [`TailModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailModelSpec {
    #[serde(flatten)]
    pub family: Family,
    #[serde(default = "one")]
    pub scale: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TailModelSpec", into = "TailModelSpec")]
pub struct TailModel {
    family: Family,
    gamma: f64,
    rho: Option<f64>,
    scale: f64,
}

impl TryFrom<TailModelSpec> for TailModel {
    type Error = Error;

    fn try_from(spec: TailModelSpec) -> Result<Self> {
        let model = match spec.family {
            Family::Pareto { gamma } => TailModel::pareto(gamma)?,
            Family::Frechet { gamma } => TailModel::frechet(gamma)?,
            Family::Burr { tau, lambda_shape } => TailModel::burr(tau, lambda_shape)?,
        };
        model.with_scale(spec.scale)
    }
}

impl From<TailModel> for TailModelSpec {
    fn from(model: TailModel) -> Self {
        TailModelSpec {
            family: model.family,
            scale: model.scale,
        }
    }
}

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            name,
            format!("must be positive and finite, got {value}"),
        ))
    }
}

impl TailModel {
    /// Exact power law; `A ≡ 0`, so ρ is left undefined.
    pub fn pareto(gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(Self {
            family: Family::Pareto { gamma },
            gamma,
            rho: None,
            scale: 1.0,
        })
    }

    /// Fréchet with ρ = −1.
    pub fn frechet(gamma: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        Ok(Self {
            family: Family::Frechet { gamma },
            gamma,
            rho: Some(-1.0),
            scale: 1.0,
        })
    }

    /// Burr XII with γ = 1/(τλ) and ρ = −1/λ.
    pub fn burr(tau: f64, lambda_shape: f64) -> Result<Self> {
        check_positive("tau", tau)?;
        check_positive("lambda_shape", lambda_shape)?;
        Ok(Self {
            family: Family::Burr { tau, lambda_shape },
            gamma: 1.0 / (tau * lambda_shape),
            rho: Some(-1.0 / lambda_shape),
            scale: 1.0,
        })
    }

    /// Builds a model and checks that the supplied `(gamma, rho)` agree with
    /// the family's parameters.
    pub fn with_indices(family: Family, gamma: f64, rho: Option<f64>, scale: f64) -> Result<Self> {
        let model = TailModel::try_from(TailModelSpec { family, scale })?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0);
        if !close(model.gamma, gamma) {
            return Err(Error::invalid(
                "gamma",
                format!("{} implies γ = {}, got {gamma}", family.name(), model.gamma),
            ));
        }
        if let Some(r) = rho {
            if r > 0.0 {
                return Err(Error::invalid("rho", format!("must be ≤ 0, got {r}")));
            }
            match model.rho {
                Some(expected) if !close(expected, r) => {
                    return Err(Error::invalid(
                        "rho",
                        format!("{} implies ρ = {expected}, got {r}", family.name()),
                    ))
                }
                _ => {}
            }
        }
        Ok(model)
    }

    pub fn with_scale(mut self, scale: f64) -> Result<Self> {
        check_positive("scale", scale)?;
        self.scale = scale;
        Ok(self)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// `U(t) = F^←(1 − 1/t)`.
    pub fn tail_quantile(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 1.0 {
            return Err(Error::invalid(
                "t",
                format!("tail quantile needs t > 1, got {t}"),
            ));
        }
        Ok(self.scale * self.unit_tail_quantile(t))
    }

    fn unit_tail_quantile(&self, t: f64) -> f64 {
        match self.family {
            Family::Pareto { gamma } => t.powf(gamma),
            // −log(1 − 1/t) computed through log1p to keep precision for large t.
            Family::Frechet { gamma } => (-(-1.0 / t).ln_1p()).powf(-gamma),
            Family::Burr { tau, lambda_shape } => (t.ln() / lambda_shape).exp_m1().powf(1.0 / tau),
        }
    }

    /// Closed-form distribution function, used to check the inverse.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        let z = x / self.scale;
        match self.family {
            Family::Pareto { gamma } => {
                if z < 1.0 {
                    0.0
                } else {
                    1.0 - z.powf(-1.0 / gamma)
                }
            }
            Family::Frechet { gamma } => (-z.powf(-1.0 / gamma)).exp(),
            Family::Burr { tau, lambda_shape } => 1.0 - (1.0 + z.powf(tau)).powf(-lambda_shape),
        }
    }

    /// Second-order auxiliary function `A(t)`.
    ///
    /// Fréchet: with `s = 1/t`, `−log(1 − s) = s (1 + s/2 + O(s²))`, so
    /// `U(t) = t^γ (1 − γ/(2t) + O(t⁻²))` and
    /// `U(tx)/U(t) = x^γ (1 + (γ/(2t)) (1 − 1/x) + O(t⁻²))`.
    /// Matching `x^γ (x^ρ − 1)/ρ` with ρ = −1 gives `A(t) = γ/(2t)`.
    ///
    /// Burr: `U(t) = t^γ (1 − t^(−1/λ))^(1/τ)` expands the same way to
    /// `A(t) = (−ρ/τ) t^ρ` with ρ = −1/λ.
    pub fn second_order_aux(&self, t: f64) -> Result<f64> {
        if t.is_nan() || t <= 1.0 {
            return Err(Error::invalid(
                "t",
                format!("auxiliary function needs t > 1, got {t}"),
            ));
        }
        match self.family {
            Family::Pareto { .. } => Ok(0.0),
            Family::Frechet { gamma } => Ok(gamma / (2.0 * t)),
            Family::Burr { tau, .. } => {
                let rho = self.rho.ok_or(Error::AuxUnavailable("burr"))?;
                Ok((-rho / tau) * t.powf(rho))
            }
        }
    }

    /// `U(1/v)`: the inverse-transform image of a uniform `v ∈ (0, 1)`.
    pub fn from_uniform(&self, v: f64) -> f64 {
        self.scale * self.unit_tail_quantile(1.0 / v)
    }

    /// Draws `count` i.i.d. values from a single stream.
    pub fn sample(&self, stream: &RandomStream, count: usize) -> Vec<f64> {
        let mut rng = stream.rng();
        (0..count)
            .map(|_| self.from_uniform(Open01.sample(&mut rng)))
            .collect()
    }

    /// One draw from the stream's generator.
    pub fn draw<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.from_uniform(Open01.sample(rng))
    }

    /// `√k · A(n/k)`, the bias scale entering the Hill limit law.
    pub fn bias_scale(&self, n: usize, k: usize) -> Result<f64> {
        let t = n as f64 / k as f64;
        Ok((k as f64).sqrt() * self.second_order_aux(t)?)
    }
}
