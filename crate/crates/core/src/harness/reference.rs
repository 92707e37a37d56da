//! Monte Carlo reference for the true extreme quantile of a product norm.
//!
//! `‖R·Z‖ = R·‖Z‖`, so the reference pairs a large number of multiplier
//! draws with norms taken from a pool of independent driver paths on the
//! oracle grid. Results are cached per configuration for the life of the
//! process.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{norm_iter, NormOrder};
use crate::parallel::{map_indexed, Execution};
use crate::path_gen::{DriverSampler, ProductSpec};
use crate::rng::{tags, RandomStream};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceQuantile {
    pub value: f64,
    /// Order-statistic band at ±1.96 binomial standard errors.
    pub lower: f64,
    pub upper: f64,
    pub draws: usize,
    pub pool: usize,
}

const CHUNK: usize = 1 << 16;

type Cache = Mutex<HashMap<String, Arc<ReferenceQuantile>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

#[allow(clippy::too_many_arguments)]
pub fn reference_quantile(
    spec: &ProductSpec,
    order: NormOrder,
    m_oracle: usize,
    tail_prob: f64,
    draws: usize,
    pool: usize,
    stream: &RandomStream,
    exec: Execution,
) -> Result<Arc<ReferenceQuantile>> {
    let key = serde_json::json!({
        "spec": spec, "order": order, "m": m_oracle, "p": tail_prob,
        "draws": draws, "pool": pool, "stream": stream.key(),
    })
    .to_string();
    if let Some(hit) = cache().lock().expect("cache lock").get(&key) {
        return Ok(Arc::clone(hit));
    }
    let computed = Arc::new(compute(
        spec, order, m_oracle, tail_prob, draws, pool, stream, exec,
    )?);
    cache()
        .lock()
        .expect("cache lock")
        .insert(key, Arc::clone(&computed));
    Ok(computed)
}

#[allow(clippy::too_many_arguments)]
fn compute(
    spec: &ProductSpec,
    order: NormOrder,
    m_oracle: usize,
    tail_prob: f64,
    draws: usize,
    pool: usize,
    stream: &RandomStream,
    exec: Execution,
) -> Result<ReferenceQuantile> {
    if draws < 1 || pool < 1 {
        return Err(Error::invalid(
            "reference_draws",
            "reference sample must be non-empty",
        ));
    }
    let driver = DriverSampler::new(&spec.driver, m_oracle)?;
    let pool_stream = stream.split(tags::DRIVER);
    let norms = map_indexed(
        exec,
        pool,
        || (driver.workspace(), vec![0.0; m_oracle]),
        |(ws, row), i| {
            driver.fill_row(&pool_stream.substream(tags::ROW, i as u64), ws, row);
            norm_iter(row.iter().copied(), m_oracle, order)
        },
    );
    let mult_stream = stream.split(tags::MULTIPLIER);
    let chunks = draws.div_ceil(CHUNK);
    let mut sample: Vec<f64> = map_indexed(
        exec,
        chunks,
        || (),
        |_, c| {
            let len = CHUNK.min(draws - c * CHUNK);
            let s = mult_stream.substream(tags::ROW, c as u64);
            let mut rng = s.rng();
            let mut mult_rng = s.split(tags::MULTIPLIER).rng();
            (0..len)
                .map(|_| {
                    spec.multiplier.draw_with(&mut mult_rng) * norms[rng.random_range(0..pool)]
                })
                .collect::<Vec<f64>>()
        },
    )
    .into_iter()
    .flatten()
    .collect();

    let level = 1.0 - tail_prob;
    let n = draws as f64;
    let rank = |q: f64| ((n * q).ceil() as usize).clamp(1, draws) - 1;
    let half = 1.96 * (n * tail_prob * (1.0 - tail_prob)).sqrt() / n;
    let mut select = |q: f64| {
        let r = rank(q.clamp(0.0, 1.0));
        *sample.select_nth_unstable_by(r, f64::total_cmp).1
    };
    let value = select(level);
    let lower = select(level - half);
    let upper = select(level + half);
    Ok(ReferenceQuantile {
        value,
        lower,
        upper,
        draws,
        pool,
    })
}
