//! Discretized L^p norms of sampled paths, their nested-grid oracles, the
//! measured approximation error and the rate calculators for choosing `m`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm exponent `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormOrder {
    Finite(f64),
    Infinity,
}

impl NormOrder {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::invalid(
                "norm_order",
                format!("must be ≥ 1, got {p}"),
            ));
        }
        if p.is_infinite() {
            return Ok(NormOrder::Infinity);
        }
        Ok(NormOrder::Finite(p))
    }
}

impl fmt::Display for NormOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NormOrder::Finite(p) => write!(f, "{p}"),
            NormOrder::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for NormOrder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(NormOrder::Infinity),
            other => {
                let p = other.parse::<f64>().map_err(|_| {
                    Error::invalid("norm_order", format!("not a number: `{other}`"))
                })?;
                NormOrder::finite(p)
            }
        }
    }
}

impl Serialize for NormOrder {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormOrder::Finite(p) => s.serialize_f64(*p),
            NormOrder::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for NormOrder {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let parsed = match Raw::deserialize(d)? {
            Raw::Num(p) => NormOrder::finite(p),
            Raw::Text(s) => s.parse(),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// Discrete norm on the left-endpoint grid: `((1/m) Σ_j |y_j|^p)^(1/p)` or
/// `max_j |y_j|`.
pub fn discrete_norm(path: &[f64], order: NormOrder) -> Result<f64> {
    if path.is_empty() {
        return Err(Error::invalid("path", "empty"));
    }
    if let NormOrder::Finite(p) = order {
        if p.is_nan() || p < 1.0 {
            return Err(Error::invalid(
                "norm_order",
                format!("must be ≥ 1, got {p}"),
            ));
        }
    }
    Ok(norm_iter(path.iter().copied(), path.len(), order))
}

/// Norm of an iterator of `len` grid values; `order` is assumed valid.
pub(crate) fn norm_iter(
    values: impl Iterator<Item = f64> + Clone,
    len: usize,
    order: NormOrder,
) -> f64 {
    let peak = values.clone().fold(0.0f64, |acc, y| acc.max(y.abs()));
    match order {
        NormOrder::Infinity => peak,
        _ if peak == 0.0 => 0.0,
        NormOrder::Finite(1.0) => values.map(f64::abs).sum::<f64>() / len as f64,
        NormOrder::Finite(p) => {
            // Factor out the peak so |y|^p cannot overflow.
            let mean = values.map(|y| (y.abs() / peak).powf(p)).sum::<f64>() / len as f64;
            peak * mean.powf(1.0 / p)
        }
    }
}

/// Every `stride`-th value of a fine row, i.e. the same path on the grid of
/// size `fine.len() / stride`.
pub fn downsample(fine: &[f64], m_coarse: usize) -> Result<impl Iterator<Item = f64> + Clone + '_> {
    let stride = nesting_stride(fine.len(), m_coarse)?;
    Ok(fine.iter().step_by(stride).copied())
}

pub(crate) fn nesting_stride(m_fine: usize, m_coarse: usize) -> Result<usize> {
    if m_coarse == 0 || !m_fine.is_multiple_of(m_coarse) {
        return Err(Error::invalid(
            "m_oracle",
            format!("fine grid {m_fine} is not a multiple of coarse grid {m_coarse}"),
        ));
    }
    Ok(m_fine / m_coarse)
}

/// The oracle norm of a path sampled on a fine grid.
pub fn oracle_norm(fine: &[f64], order: NormOrder) -> Result<f64> {
    discrete_norm(fine, order)
}

/// `(coarse, oracle)` norms of one realization observed on a fine grid that
/// nests the coarse grid of size `m_coarse`.
pub fn paired_norms(fine: &[f64], m_coarse: usize, order: NormOrder) -> Result<(f64, f64)> {
    let coarse = downsample(fine, m_coarse)?;
    let oracle = discrete_norm(fine, order)?;
    Ok((norm_iter(coarse, m_coarse, order), oracle))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxErrorReport {
    pub max_abs_error: f64,
    /// `C_n = max_abs_error / U(n/k)`.
    pub normalized: f64,
    pub n: usize,
    pub m: usize,
    pub k: usize,
}

pub fn approximation_error(
    coarse_norms: &[f64],
    oracle_norms: &[f64],
    u_at_n_over_k: f64,
    m: usize,
    k: usize,
) -> Result<ApproxErrorReport> {
    if coarse_norms.len() != oracle_norms.len() {
        return Err(Error::LengthMismatch {
            left: coarse_norms.len(),
            right: oracle_norms.len(),
        });
    }
    if !(u_at_n_over_k > 0.0) {
        return Err(Error::invalid(
            "u_at_n_over_k",
            format!("must be positive, got {u_at_n_over_k}"),
        ));
    }
    let max_abs_error = max_abs_diff(coarse_norms, oracle_norms);
    Ok(ApproxErrorReport {
        max_abs_error,
        normalized: max_abs_error / u_at_n_over_k,
        n: coarse_norms.len(),
        m,
        k,
    })
}

pub(crate) fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `√k · C_n` below this counts as negligible.
pub const DEFAULT_NEGLIGIBLE_THRESHOLD: f64 = 0.1;

/// Slack ε′ used in the trade-off exponent when none is given.
pub const DEFAULT_EPS_PRIME: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateBound {
    /// `(1/m)^η · k^γ · n^(γ′−γ)`.
    pub value: f64,
    pub sqrt_k_times_value: f64,
    pub threshold: f64,
    pub negligible: bool,
}

/// Order of the normalized approximation error under second-order
/// conditions on both the norm and the Hölder multiplier, for a power-law
/// modulus `φ(δ) = δ^η`.
pub fn error_rate_bound(
    eta: f64,
    m: usize,
    n: usize,
    k: usize,
    gamma: f64,
    gamma_prime: f64,
    threshold: f64,
) -> Result<RateBound> {
    if !(eta > 0.0) {
        return Err(Error::invalid(
            "eta",
            format!("must be positive, got {eta}"),
        ));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid(
            "gamma",
            format!("must be positive, got {gamma}"),
        ));
    }
    if !(gamma_prime >= gamma) {
        return Err(Error::invalid(
            "gamma_prime",
            format!("must be ≥ γ = {gamma}, got {gamma_prime}"),
        ));
    }
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::invalid("m/n/k", "must be positive"));
    }
    let value =
        (1.0 / m as f64).powf(eta) * (k as f64).powf(gamma) * (n as f64).powf(gamma_prime - gamma);
    let sqrt_k_times_value = (k as f64).sqrt() * value;
    Ok(RateBound {
        value,
        sqrt_k_times_value,
        threshold,
        negligible: sqrt_k_times_value < threshold,
    })
}

fn check_tradeoff(n: usize, lambda_exp: f64, gamma: f64, eta: f64, eps_prime: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("n", "must be ≥ 1"));
    }
    if !(lambda_exp > 0.0 && lambda_exp < 1.0) {
        return Err(Error::invalid(
            "lambda_exp",
            format!("must lie in (0, 1), got {lambda_exp}"),
        ));
    }
    if !(gamma > 0.0) {
        return Err(Error::invalid(
            "gamma",
            format!("must be positive, got {gamma}"),
        ));
    }
    if !(eps_prime >= 0.0) {
        return Err(Error::invalid(
            "eps_prime",
            format!("must be ≥ 0, got {eps_prime}"),
        ));
    }
    if !(eta > eps_prime) {
        return Err(Error::invalid(
            "eta",
            format!(
                "must exceed eps_prime = {eps_prime}, got {eta}; the condition is unattainable"
            ),
        ));
    }
    Ok(())
}

/// Grid size `m* = n^((λγ + ε′)/η)` at which `(1/m)^η · n^(λγ+ε′)` equals 1,
/// for `k = ⌊n^λ⌋`. `eta` is the usable Hölder exponent of the paths (for a
/// Gaussian driver with Hurst index H this is already `H − ε′`).
pub fn tradeoff_required_m(
    n: usize,
    lambda_exp: f64,
    gamma: f64,
    eta: f64,
    eps_prime: f64,
) -> Result<f64> {
    check_tradeoff(n, lambda_exp, gamma, eta, eps_prime)?;
    Ok((n as f64).powf((lambda_exp * gamma + eps_prime) / eta))
}

/// `(1/m)^η · n^(λγ + ε′)`, the quantity whose decay to zero suffices for
/// consistency of the Hill estimator on discretized norms.
pub fn tradeoff_product(
    m: usize,
    n: usize,
    lambda_exp: f64,
    gamma: f64,
    eta: f64,
    eps_prime: f64,
) -> Result<f64> {
    check_tradeoff(n, lambda_exp, gamma, eta, eps_prime)?;
    if m == 0 {
        return Err(Error::invalid("m", "must be ≥ 1"));
    }
    Ok((1.0 / m as f64).powf(eta) * (n as f64).powf(lambda_exp * gamma + eps_prime))
}

/// Smallest integer grid size not below `m_star`, ignoring float noise in
/// the last few ulps.
pub fn required_grid_size(m_star: f64) -> usize {
    let nearest = m_star.round();
    if (m_star - nearest).abs() <= 1e-9 * m_star.max(1.0) {
        nearest.max(1.0) as usize
    } else {
        m_star.ceil().max(1.0) as usize
    }
}
