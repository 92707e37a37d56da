//! Reproducible Monte Carlo experiments for the estimators.
//!
//! Replication `b` draws everything from the stream
//! `(master_seed, REPLICATION, b)` and rows inside a replication split that
//! stream further, so the per-replication table is identical for any worker
//! count. Summaries fold the table in `rep_index` order.

mod config;
mod ks;
mod reference;
mod replication;
mod summary;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

pub use config::{AutoTag, ExperimentConfig, KRule, LambdaLimit, Resolved, Source, TailProbRule};
pub use ks::{kolmogorov_survival, ks_test, KsResult};
pub use reference::{reference_quantile, ReferenceQuantile};
pub use replication::{Prepared, QuantileTruth, ReplicationResult};
pub use summary::{sample_quantile, summarize, ExperimentSummary, QuantileSummary};

use crate::error::{Error, Result};
use crate::parallel::{map_indexed, with_workers, Execution};
use crate::path_gen::format_exact;
use crate::rng::{tags, RandomStream};

/// Version stamped into every JSON report.
pub const REPORT_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; `None` uses the ambient pool.
    pub workers: Option<usize>,
    pub execution: Execution,
}

impl RunOptions {
    pub fn sequential() -> Self {
        Self {
            workers: None,
            execution: Execution::Sequential,
        }
    }

    pub fn with_workers(workers: usize) -> Self {
        Self {
            workers: Some(workers),
            execution: Execution::Parallel,
        }
    }
}

/// Summary, per-replication table and the configuration that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub version: String,
    pub config: ExperimentConfig,
    pub resolved: Resolved,
    pub quantile_truth: QuantileTruth,
    pub summary: ExperimentSummary,
    #[serde(skip)]
    pub table: Vec<ReplicationResult>,
}

/// One replication, fully determined by `(master_seed, rep_index)`.
pub fn run_replication(config: &ExperimentConfig, rep_index: usize) -> Result<ReplicationResult> {
    let prepared = Prepared::new(config, Execution::Sequential)?;
    Ok(prepared.replicate(rep_index))
}

pub fn run_experiment(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentReport> {
    with_workers(opts.workers, || run_inner(config, opts.execution))?
}

fn run_inner(config: &ExperimentConfig, exec: Execution) -> Result<ExperimentReport> {
    let prepared = Prepared::new(config, exec)?;
    let table = map_indexed(
        exec,
        config.replications,
        || (),
        |_, b| prepared.replicate(b),
    );
    let failed = table.iter().filter(|r| r.is_failed()).count();
    if failed * 10 > table.len() {
        return Err(Error::FailureCeiling {
            failed,
            total: table.len(),
        });
    }
    let summary = summarize(&table, &prepared.resolved, config.negligible_threshold)?;
    Ok(ExperimentReport {
        version: REPORT_VERSION.to_string(),
        config: config.clone(),
        resolved: prepared.resolved.clone(),
        quantile_truth: prepared.truth.clone(),
        summary,
        table,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepAxis {
    M,
    K,
    N,
}

impl SweepAxis {
    fn tag(self) -> u64 {
        match self {
            SweepAxis::M => 1,
            SweepAxis::K => 2,
            SweepAxis::N => 3,
        }
    }
}

/// The configuration of one sweep cell, re-seeded from
/// `(master_seed, axis, value)`.
pub fn sweep_cell_config(
    config: &ExperimentConfig,
    axis: SweepAxis,
    value: usize,
) -> ExperimentConfig {
    let mut cell = config.clone();
    match axis {
        SweepAxis::M => cell.m = value,
        SweepAxis::K => cell.k_rule = KRule::Fixed(value),
        SweepAxis::N => cell.n = value,
    }
    cell.master_seed = RandomStream::new(config.master_seed)
        .split(tags::SWEEP)
        .substream(axis.tag(), value as u64)
        .key();
    cell
}

#[derive(Debug, Clone)]
pub struct SweepCell {
    pub value: usize,
    pub outcome: Result<ExperimentReport>,
}

/// Independent experiments along one axis; a failing cell does not stop
/// the sweep.
pub fn sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[usize],
    opts: RunOptions,
) -> Result<Vec<SweepCell>> {
    if values.is_empty() {
        return Err(Error::invalid("values", "sweep needs at least one value"));
    }
    with_workers(opts.workers, || {
        values
            .iter()
            .map(|&value| SweepCell {
                value,
                outcome: run_inner(&sweep_cell_config(config, axis, value), opts.execution),
            })
            .collect()
    })
}

pub const TABLE_HEADER: &str = "rep_index,gamma_hat,gamma_hat_oracle,x_hat,x_hat_oracle,c_n,\
std_gamma_err,std_quant_err,failed,max_abs_error,c_n_threshold";

/// Per-replication CSV in rep order.
pub fn table_csv(table: &[ReplicationResult]) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for r in table {
        let _ = write!(out, "{}", r.rep_index);
        for x in [
            r.gamma_hat,
            r.gamma_hat_oracle,
            r.x_hat,
            r.x_hat_oracle,
            r.c_n,
            r.std_gamma_err,
            r.std_quant_err,
        ] {
            let _ = write!(out, ",{}", format_exact(x));
        }
        let _ = writeln!(
            out,
            ",{},{},{}",
            u8::from(r.is_failed()),
            format_exact(r.max_abs_error),
            format_exact(r.c_n_threshold)
        );
    }
    out
}

/// Rounds every float in a JSON tree to 12 significant digits.
pub fn round_floats(value: serde_json::Value) -> serde_json::Value {
    use serde_json::Value;
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(round_floats).collect()),
        Value::Object(map) => {
            Value::Object(map.into_iter().map(|(k, v)| (k, round_floats(v))).collect())
        }
        other => other,
    }
}

impl ExperimentReport {
    /// Pretty JSON summary at 12 significant digits, with the full config.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("report serializes");
        serde_json::to_string_pretty(&round_floats(value)).expect("json")
    }

    pub fn table_csv(&self) -> String {
        table_csv(&self.table)
    }
}
