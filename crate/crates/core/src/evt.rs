//! Order statistics, the Hill estimator and the Weissman extreme quantile
//! estimator.
//!
//! The same formulas apply whether the input holds true values `X_i` or
//! approximations `X̂_i`; callers decide which sample they pass.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// Ascending order statistics `X_(1,n) ≤ … ≤ X_(n,n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedSample {
    values: Vec<f64>,
}

impl OrderedSample {
    /// Stable ascending sort of `sample`. NaN is rejected.
    pub fn new(mut sample: Vec<f64>) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::InsufficientData {
                required: 2,
                got: sample.len(),
            });
        }
        if let Some(pos) = sample.iter().position(|x| x.is_nan()) {
            return Err(Error::invalid("sample", format!("NaN at index {pos}")));
        }
        sample.sort_by(f64::total_cmp);
        Ok(Self { values: sample })
    }

    pub fn from_slice(sample: &[f64]) -> Result<Self> {
        Self::new(sample.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `X_(n−k,n)` (1-based rank n−k).
    pub fn threshold(&self, k: usize) -> Result<f64> {
        let n = self.len();
        if k == 0 || k >= n {
            return Err(Error::KOutOfRange { k, n });
        }
        Ok(self.values[n - k - 1])
    }

    /// The top `k` order statistics `X_(n−k+1,n) … X_(n,n)`.
    pub fn top(&self, k: usize) -> &[f64] {
        &self.values[self.len() - k..]
    }
}

/// Convenience wrapper matching the free-function form.
pub fn order_statistics(sample: &[f64]) -> Result<OrderedSample> {
    OrderedSample::from_slice(sample)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HillEstimate {
    pub gamma_hat: f64,
    pub k: usize,
    pub n: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub x_hat: f64,
    pub tail_prob: f64,
    pub d_n: f64,
    pub gamma_hat_used: f64,
    pub threshold: f64,
    pub k: usize,
    pub n: usize,
}

fn positive_threshold(ordered: &OrderedSample, k: usize) -> Result<f64> {
    let threshold = ordered.threshold(k)?;
    if threshold <= 0.0 {
        return Err(Error::NonPositiveThreshold(threshold));
    }
    Ok(threshold)
}

/// Hill estimator `(1/k) Σ_{i<k} log(X_(n−i,n) / X_(n−k,n))`.
pub fn hill(ordered: &OrderedSample, k: usize) -> Result<HillEstimate> {
    let threshold = positive_threshold(ordered, k)?;
    let sum: f64 = ordered.top(k).iter().map(|&x| (x / threshold).ln()).sum();
    Ok(HillEstimate {
        gamma_hat: sum / k as f64,
        k,
        n: ordered.len(),
        threshold,
    })
}

/// Weissman extrapolation `X_(n−k,n) · (k/(n·p))^γ̂`.
pub fn weissman_quantile(
    ordered: &OrderedSample,
    k: usize,
    tail_prob: f64,
    gamma_hat: f64,
) -> Result<QuantileEstimate> {
    if !(tail_prob > 0.0 && tail_prob < 1.0) {
        return Err(Error::invalid(
            "tail_prob",
            format!("must lie in (0, 1), got {tail_prob}"),
        ));
    }
    if !(gamma_hat.is_finite() && gamma_hat >= 0.0) {
        return Err(Error::invalid(
            "gamma_hat",
            format!("must be ≥ 0, got {gamma_hat}"),
        ));
    }
    let threshold = positive_threshold(ordered, k)?;
    let n = ordered.len();
    let d_n = k as f64 / (n as f64 * tail_prob);
    Ok(QuantileEstimate {
        x_hat: threshold * d_n.powf(gamma_hat),
        tail_prob,
        d_n,
        gamma_hat_used: gamma_hat,
        threshold,
        k,
        n,
    })
}

/// The normal limit `N(λ/(1−ρ), γ²)` of `√k(γ̂ − γ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitLaw {
    pub mean: f64,
    pub variance: f64,
    pub lambda: f64,
    pub rho: f64,
    pub gamma: f64,
}

impl LimitLaw {
    pub fn new(lambda: f64, rho: f64, gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid(
                "gamma",
                format!("must be positive, got {gamma}"),
            ));
        }
        if !(rho <= 0.0) {
            return Err(Error::invalid("rho", format!("must be ≤ 0, got {rho}")));
        }
        if !lambda.is_finite() {
            return Err(Error::invalid("lambda", "must be finite"));
        }
        Ok(Self {
            mean: lambda / (1.0 - rho),
            variance: gamma * gamma,
            lambda,
            rho,
            gamma,
        })
    }

    pub fn sd(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        normal::cdf((x - self.mean) / self.sd())
    }

    /// The same law for `Γ/γ`, i.e. `N(mean/γ, 1)`.
    pub fn standardized(&self) -> StandardizedLaw {
        StandardizedLaw {
            mean: self.mean / self.gamma,
        }
    }
}

/// `N(mean, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StandardizedLaw {
    pub mean: f64,
}

pub fn limit_law(lambda: f64, rho: f64, gamma: f64) -> Result<LimitLaw> {
    LimitLaw::new(lambda, rho, gamma)
}

/// `γ̂ ± z_{(1+level)/2} · γ̂/√k`, the λ = 0 asymptotic interval.
pub fn hill_confidence_interval(estimate: &HillEstimate, level: f64) -> Result<(f64, f64)> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(
            "level",
            format!("must lie in (0, 1), got {level}"),
        ));
    }
    if estimate.k == 0 {
        return Err(Error::KOutOfRange {
            k: 0,
            n: estimate.n,
        });
    }
    let z = normal::quantile(0.5 * (1.0 + level));
    let half = z * estimate.gamma_hat / (estimate.k as f64).sqrt();
    Ok((estimate.gamma_hat - half, estimate.gamma_hat + half))
}

#[derive(Debug, Clone, PartialEq)]
pub struct HillPlotRow {
    pub k: usize,
    pub gamma_hat: Result<f64>,
}

/// Hill estimates over a set of `k`; bad `k` values fail their row only.
pub fn hill_plot(ordered: &OrderedSample, k_values: &[usize]) -> Result<Vec<HillPlotRow>> {
    if k_values.is_empty() {
        return Err(Error::invalid("k_values", "empty"));
    }
    Ok(k_values
        .iter()
        .map(|&k| HillPlotRow {
            k,
            gamma_hat: hill(ordered, k).map(|h| h.gamma_hat),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ordered(v: &[f64]) -> OrderedSample {
        OrderedSample::from_slice(v).unwrap()
    }

    #[test]
    fn sorting_examples() {
        assert_eq!(ordered(&[3.0, 1.0, 2.0]).values(), &[1.0, 2.0, 3.0]);
        assert_eq!(ordered(&[5.0, 5.0, 1.0]).values(), &[1.0, 5.0, 5.0]);
        assert_eq!(ordered(&[-1.0, 0.0, 2.0]).values(), &[-1.0, 0.0, 2.0]);
        assert!(matches!(
            OrderedSample::from_slice(&[1.0]),
            Err(Error::InsufficientData { .. })
        ));
        assert!(OrderedSample::from_slice(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn hill_examples() {
        let o = ordered(&[1.0, 2.0, 4.0, 8.0]);
        let h = hill(&o, 2).unwrap();
        assert!((h.gamma_hat - (4f64.ln() + 2f64.ln()) / 2.0).abs() < 1e-15);
        assert!((h.gamma_hat - 1.03972).abs() < 1e-5);
        assert_eq!(h.threshold, 2.0);
        let h = hill(&o, 1).unwrap();
        assert!((h.gamma_hat - std::f64::consts::LN_2).abs() < 1e-15);

        let geo: Vec<f64> = (0..7).map(|i| (i as f64).exp()).collect();
        let h = hill(&ordered(&geo), 3).unwrap();
        assert!((h.gamma_hat - 2.0).abs() < 1e-12);
    }

    #[test]
    fn hill_errors() {
        let o = ordered(&[1.0, 2.0, 4.0, 8.0]);
        assert_eq!(hill(&o, 0), Err(Error::KOutOfRange { k: 0, n: 4 }));
        assert_eq!(hill(&o, 4), Err(Error::KOutOfRange { k: 4, n: 4 }));
        let o = ordered(&[-3.0, 0.0, 4.0, 8.0]);
        assert_eq!(hill(&o, 2), Err(Error::NonPositiveThreshold(0.0)));
    }

    #[test]
    fn weissman_examples() {
        let o = ordered(&[1.0, 2.0, 4.0, 8.0]);
        for g in [0.1, 1.0, 7.0] {
            let q = weissman_quantile(&o, 2, 0.5, g).unwrap();
            assert_eq!(q.d_n, 1.0);
            assert_eq!(q.x_hat, 2.0);
        }
        let q = weissman_quantile(&o, 2, 0.1, 1.03972).unwrap();
        assert!((q.x_hat - 2.0 * 5f64.powf(1.03972)).abs() < 1e-12);
        assert!((q.x_hat - 10.66).abs() < 5e-3);
        let q = weissman_quantile(&o, 2, 0.05, 0.5).unwrap();
        assert!((q.x_hat - 6.3246).abs() < 1e-4);
        assert!(weissman_quantile(&o, 2, 0.0, 0.5).is_err());
        assert!(weissman_quantile(&o, 2, 1.0, 0.5).is_err());
        assert!(weissman_quantile(&o, 5, 0.1, 0.5).is_err());
    }

    #[test]
    fn limit_law_examples() {
        let l = limit_law(0.0, -1.0, 1.0).unwrap();
        assert_eq!((l.mean, l.variance), (0.0, 1.0));
        let l = limit_law(1.0, -1.0, 0.5).unwrap();
        assert_eq!((l.mean, l.variance), (0.5, 0.25));
        let l = limit_law(2.0, 0.0, 1.0).unwrap();
        assert_eq!((l.mean, l.variance), (2.0, 1.0));
        assert!(limit_law(0.0, 0.1, 1.0).is_err());
        assert!(limit_law(0.0, -1.0, 0.0).is_err());
    }

    #[test]
    fn confidence_interval_examples() {
        let two_sigma = 2.0 * normal::cdf(2.0) - 1.0;
        let est = HillEstimate {
            gamma_hat: 1.0,
            k: 100,
            n: 1000,
            threshold: 1.0,
        };
        let (lo, hi) = hill_confidence_interval(&est, two_sigma).unwrap();
        assert!((lo - 0.8).abs() < 1e-9 && (hi - 1.2).abs() < 1e-9);

        let one_sigma = 2.0 * normal::cdf(1.0) - 1.0;
        let est = HillEstimate {
            gamma_hat: 0.5,
            k: 25,
            n: 1000,
            threshold: 1.0,
        };
        let (lo, hi) = hill_confidence_interval(&est, one_sigma).unwrap();
        assert!((lo - 0.4).abs() < 1e-9 && (hi - 0.6).abs() < 1e-9);

        let width = |k| {
            let est = HillEstimate {
                gamma_hat: 1.0,
                k,
                n: usize::MAX,
                threshold: 1.0,
            };
            let (lo, hi) = hill_confidence_interval(&est, 0.95).unwrap();
            hi - lo
        };
        assert!(width(1_000_000) < width(100) && width(100_000_000) < 1e-3);
        assert!(hill_confidence_interval(&est, 1.0).is_err());
    }

    #[test]
    fn hill_plot_rows() {
        let o = ordered(&[1.0, 2.0, 4.0, 8.0]);
        let rows = hill_plot(&o, &[1, 2, 4]).unwrap();
        assert!((rows[0].gamma_hat.as_ref().unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((rows[1].gamma_hat.as_ref().unwrap() - 1.03972).abs() < 1e-5);
        assert_eq!(rows[2].gamma_hat, Err(Error::KOutOfRange { k: 4, n: 4 }));
        assert!(hill_plot(&o, &[]).is_err());

        let scaled = ordered(&[10.0, 20.0, 40.0, 80.0]);
        let rows = hill_plot(&scaled, &[2]).unwrap();
        assert!((rows[0].gamma_hat.as_ref().unwrap() - 1.03972).abs() < 1e-5);
    }

    #[test]
    fn weissman_is_threshold_when_tail_prob_is_k_over_n() {
        let o = ordered(&[0.3, 1.0, 2.0, 4.0, 8.0, 9.5, 12.0, 30.0]);
        for k in 1..8 {
            let q = weissman_quantile(&o, k, k as f64 / 8.0, 3.7).unwrap();
            assert_eq!(q.x_hat, o.threshold(k).unwrap());
        }
    }

    #[test]
    fn log_taylor_bound_on_grid() {
        let log4 = 4f64.ln();
        for i in 1..=100_000 {
            let x = 0.5 * i as f64 / 100_000.0;
            assert!((1.0 - x).ln().abs() <= x * log4, "x = {x}");
        }
    }

    proptest! {
        #[test]
        fn hill_scale_invariant(
            v in prop::collection::vec(0.01f64..1e3, 3..60),
            c in 1e-3f64..1e3,
            pow2 in -20i32..20,
        ) {
            let o = ordered(&v);
            let k = v.len() / 2;
            let base = hill(&o, k).unwrap().gamma_hat;
            let exact: Vec<f64> = v.iter().map(|x| x * 2f64.powi(pow2)).collect();
            prop_assert_eq!(hill(&ordered(&exact), k).unwrap().gamma_hat, base);
            let general: Vec<f64> = v.iter().map(|x| x * c).collect();
            let g = hill(&ordered(&general), k).unwrap().gamma_hat;
            prop_assert!((g - base).abs() <= 1e-12 * base.max(1.0));
        }

        #[test]
        fn order_statistics_are_one_lipschitz_in_sup_norm(
            pairs in prop::collection::vec((-1e3f64..1e3, -5f64..5.0), 2..200),
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let xh: Vec<f64> = pairs.iter().map(|p| p.0 + p.1).collect();
            let bound = x.iter().zip(&xh).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            let (sx, sxh) = (ordered(&x), ordered(&xh));
            for (a, b) in sx.values().iter().zip(sxh.values()) {
                prop_assert!((a - b).abs() <= bound);
            }
        }
    }
}
