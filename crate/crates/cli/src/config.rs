//! TOML run configuration.
//!
//! ```toml
//! workers = 4
//! out = "results/burr.json"
//!
//! [experiment]
//! n = 20000
//! k_rule = { fixed = 200 }
//! replications = 300
//! master_seed = 7
//! lambda_limit = "auto"
//!
//! [experiment.source.direct]
//! family = "burr"
//! tau = 1.0
//! lambda_shape = 2.0
//! ```
//!
//! Unknown keys anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tailnorm::functionals::DEFAULT_EPS_PRIME;
use tailnorm::harness::{ExperimentConfig, SweepAxis};
use tailnorm::path_gen::{Multiplier, ProcessSpec, ProductSpec};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfig {
    pub workers: Option<usize>,
    pub out: Option<PathBuf>,
    pub experiment: Option<ExperimentConfig>,
    pub sweep: Option<SweepSection>,
    pub simulate: Option<SimulateSection>,
    pub check_rates: Option<CheckRatesSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: SweepAxis,
    pub values: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub multiplier: Multiplier,
    pub driver: ProcessSpec,
    pub n: usize,
    pub m: usize,
    #[serde(default)]
    pub master_seed: u64,
}

impl SimulateSection {
    pub fn product(&self) -> ProductSpec {
        ProductSpec {
            multiplier: self.multiplier,
            driver: self.driver,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRatesSection {
    pub n: Option<usize>,
    pub lambda_exp: Option<f64>,
    pub gamma: Option<f64>,
    pub eta: Option<f64>,
    pub eps_prime: Option<f64>,
    pub m: Option<usize>,
}

impl CheckRatesSection {
    /// Fields set in `over` win.
    pub fn merged(&self, over: &CheckRatesSection) -> CheckRatesSection {
        CheckRatesSection {
            n: over.n.or(self.n),
            lambda_exp: over.lambda_exp.or(self.lambda_exp),
            gamma: over.gamma.or(self.gamma),
            eta: over.eta.or(self.eta),
            eps_prime: over
                .eps_prime
                .or(self.eps_prime)
                .or(Some(DEFAULT_EPS_PRIME)),
            m: over.m.or(self.m),
        }
    }
}

pub fn parse(text: &str) -> Result<CliConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Validation(format!("config: {e}")))
}

pub fn load(path: &Path) -> Result<CliConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse(&text).map_err(|e| e.in_file(path))
}
