//! Tail-index and extreme-quantile estimation for L^p norms of stochastic
//! processes observed on a grid, plus a Monte Carlo harness that measures
//! when the discretization error stops mattering.
//!
//! - [`tail_models`]: Pareto, Fréchet and Burr laws with closed-form `U`
//!   and second-order auxiliary functions.
//! - [`evt`]: order statistics, Hill and Weissman estimators, the normal
//!   limit law and Hill confidence intervals.
//! - [`path_gen`]: Brownian, fractional Brownian and deterministic drivers,
//!   heavy-tailed multipliers and product paths.
//! - [`functionals`]: discrete norms, nested-grid oracles, measured error
//!   and rate calculators.
//! - [`harness`]: reproducible experiments, sweeps and KS checks.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evt;
pub mod functionals;
pub mod harness;
pub mod normal;
pub mod parallel;
pub mod path_gen;
pub mod rng;
pub mod tail_models;

pub use error::{Error, Result};
pub use evt::{hill, weissman_quantile, HillEstimate, LimitLaw, OrderedSample, QuantileEstimate};
pub use functionals::{discrete_norm, NormOrder};
pub use harness::{run_experiment, ExperimentConfig, ExperimentReport, RunOptions};
pub use parallel::Execution;
pub use path_gen::{PathMatrix, ProcessSpec, ProductSpec};
pub use rng::RandomStream;
pub use tail_models::TailModel;
