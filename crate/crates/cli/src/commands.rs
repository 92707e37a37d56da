use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use tailnorm::evt::{hill, hill_confidence_interval, weissman_quantile, OrderedSample};
use tailnorm::functionals::{
    discrete_norm, error_rate_bound, required_grid_size, tradeoff_product, tradeoff_required_m,
    DEFAULT_NEGLIGIBLE_THRESHOLD,
};
use tailnorm::harness::{self, round_floats, ExperimentConfig, RunOptions, SweepAxis};
use tailnorm::parallel::{with_workers, Execution};
use tailnorm::path_gen::{simulate_product, PathMatrix};
use tailnorm::{NormOrder, RandomStream};

use crate::config::{CheckRatesSection, SimulateSection};
use crate::CliError;

const VERSION: &str = env!("CARGO_PKG_VERSION");

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes to `out`, or stdout when absent.
fn emit(out: Option<&Path>, contents: &str) -> Result<(), CliError> {
    match out {
        Some(path) => write_file(path, contents),
        None => {
            println!("{}", contents.trim_end());
            Ok(())
        }
    }
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("json");
    s.push('\n');
    s
}

/// `results/run.json` → `results/run.<suffix>`.
pub fn sibling(out: &Path, suffix: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{suffix}"))
}

pub fn simulate(
    section: &SimulateSection,
    out: &Path,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let spec = section.product();
    spec.validate()?;
    let stream = RandomStream::new(section.master_seed);
    let paths = with_workers(workers, || {
        simulate_product(&spec, section.m, section.n, &stream, Execution::Parallel)
    })??;
    write_file(out, &paths.to_csv())?;
    let echo = json!({
        "version": VERSION,
        "command": "simulate",
        "output": out,
        "config": section,
    });
    write_file(&sibling(out, "config.json"), &pretty(&echo))
}

pub enum EstimateInput<'a> {
    Values(&'a Path),
    Paths(&'a Path, NormOrder),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateOutput {
    pub gamma_hat: f64,
    pub ci: (f64, f64),
    pub x_hat: f64,
    pub d_n: f64,
    pub threshold: f64,
    pub k: usize,
    pub n: usize,
    pub tail_prob: f64,
}

/// Values one or more per line, comma-separated; `#` starts a comment line.
pub fn parse_values(text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        for field in line.split(',') {
            let field = field.trim();
            match field.parse::<f64>() {
                Ok(x) if x.is_finite() => values.push(x),
                _ => {
                    return Err(CliError::Validation(format!(
                        "line {}: not a finite number: `{field}`",
                        i + 1
                    )))
                }
            }
        }
    }
    Ok(values)
}

pub fn estimate_values(
    values: Vec<f64>,
    k: usize,
    tail_prob: Option<f64>,
    ci_level: f64,
) -> Result<EstimateOutput, CliError> {
    let sample = OrderedSample::new(values)?;
    let n = sample.len();
    let est = hill(&sample, k)?;
    let tail_prob = tail_prob.unwrap_or(1.0 / n as f64);
    let q = weissman_quantile(&sample, k, tail_prob, est.gamma_hat)?;
    let ci = hill_confidence_interval(&est, ci_level)?;
    Ok(EstimateOutput {
        gamma_hat: est.gamma_hat,
        ci,
        x_hat: q.x_hat,
        d_n: q.d_n,
        threshold: est.threshold,
        k,
        n,
        tail_prob,
    })
}

pub fn estimate(
    input: EstimateInput<'_>,
    k: usize,
    tail_prob: Option<f64>,
    ci_level: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let (values, echo) = match input {
        EstimateInput::Values(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let values = parse_values(&text).map_err(|e| e.in_file(path))?;
            (values, json!({ "values": path }))
        }
        EstimateInput::Paths(path, order) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            let paths = PathMatrix::from_csv(&text).map_err(|e| CliError::from(e).in_file(path))?;
            let values = paths
                .rows()
                .map(|row| discrete_norm(row, order))
                .collect::<tailnorm::Result<Vec<_>>>()?;
            (values, json!({ "paths": path, "norm_order": order }))
        }
    };
    let result = estimate_values(values, k, tail_prob, ci_level)?;
    let mut config = echo;
    config["k"] = json!(k);
    config["tail_prob"] = json!(tail_prob);
    config["ci_level"] = json!(ci_level);
    let mut report = serde_json::to_value(&result).expect("json");
    report["version"] = json!(VERSION);
    report["command"] = json!("estimate");
    report["config"] = config;
    emit(out, &pretty(&report))
}

pub fn experiment(
    config: &ExperimentConfig,
    opts: RunOptions,
    out: Option<&Path>,
) -> Result<(), CliError> {
    config.resolve()?;
    let report = harness::run_experiment(config, opts)?;
    if let Some(out) = out {
        write_file(&sibling(out, "table.csv"), &report.table_csv())?;
    }
    for w in &report.resolved.warnings {
        eprintln!("warning: {w}");
    }
    emit(out, &report.to_json())
}

pub fn sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[usize],
    opts: RunOptions,
    out: Option<&Path>,
) -> Result<(), CliError> {
    config.resolve()?;
    let cells = harness::sweep(config, axis, values, opts)?;
    let axis_name = serde_json::to_value(axis).expect("json");
    let axis_name = axis_name.as_str().unwrap_or("axis");
    let mut failed = Vec::new();
    let mut out_cells = Vec::new();
    for cell in &cells {
        match &cell.outcome {
            Ok(report) => {
                if let Some(out) = out {
                    let name = format!("{axis_name}{}.table.csv", cell.value);
                    write_file(&sibling(out, &name), &report.table_csv())?;
                }
                let value: Value = serde_json::from_str(&report.to_json()).expect("json");
                out_cells.push(json!({ "value": cell.value, "report": value }));
            }
            Err(e) => {
                failed.push(cell.value);
                out_cells.push(json!({ "value": cell.value, "error": e.to_string() }));
            }
        }
    }
    let doc = json!({
        "version": VERSION,
        "command": "sweep",
        "axis": axis,
        "values": values,
        "config": round_floats(serde_json::to_value(config).expect("json")),
        "cells": out_cells,
    });
    emit(out, &pretty(&doc))?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Experiment(format!(
            "sweep cells failed at {axis_name} = {failed:?}"
        )))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCheck {
    pub required_m: usize,
    pub required_m_exact: f64,
    pub satisfied: bool,
    /// `(1/m)^η · n^(λγ + ε′)`; at most 1 exactly when satisfied.
    pub bound_value: f64,
    pub k: usize,
    pub sqrt_k_error_bound: f64,
}

pub fn check_rates_values(p: &CheckRatesSection) -> Result<RateCheck, CliError> {
    let need = |name: &str, v: Option<f64>| {
        v.ok_or_else(|| CliError::Validation(format!("check-rates: missing {name}")))
    };
    let n = need("n", p.n.map(|n| n as f64))? as usize;
    let m = need("m", p.m.map(|m| m as f64))? as usize;
    let lambda = need("lambda_exp", p.lambda_exp)?;
    let gamma = need("gamma", p.gamma)?;
    let eta = need("eta", p.eta)?;
    let eps = need("eps_prime", p.eps_prime)?;
    let m_star = tradeoff_required_m(n, lambda, gamma, eta, eps)?;
    let required_m = required_grid_size(m_star);
    let bound_value = tradeoff_product(m, n, lambda, gamma, eta, eps)?;
    let k = ((n as f64).powf(lambda) * (1.0 + 1e-12)).floor().max(1.0) as usize;
    let rate = error_rate_bound(eta, m, n, k, gamma, gamma, DEFAULT_NEGLIGIBLE_THRESHOLD)?;
    Ok(RateCheck {
        required_m,
        required_m_exact: m_star,
        satisfied: m >= required_m,
        bound_value,
        k,
        sqrt_k_error_bound: rate.sqrt_k_times_value,
    })
}

pub fn check_rates(p: &CheckRatesSection, out: Option<&Path>) -> Result<(), CliError> {
    let result = check_rates_values(p)?;
    let mut report = serde_json::to_value(&result).expect("json");
    report["version"] = json!(VERSION);
    report["command"] = json!("check-rates");
    report["config"] = serde_json::to_value(p).expect("json");
    emit(out, &pretty(&report))
}
