//! Experiment configuration, read from TOML and overridable from the CLI.
//!
//! ```toml
//! rho = 0.2
//! n_samples = 100
//! base_seed = 1
//! algorithms = ["sa", "omp"]
//! output_dir = "runs/noisy"
//! workers = 4
//!
//! [model]
//! n = 400
//! alpha = 0.5
//! rho_hat = 0.0
//! sigma_x2 = 0.0
//! sigma_xi2 = 1.0
//!
//! [schedule]          # geometric, or `stages = [{ mu = 0.0, sweeps = 5 }, ...]`
//! mu0 = 1e-8
//! r = 1.1
//! tau = 5
//! n_mu = 100
//! ```

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::annealer::{GeometricParams, Schedule, Stage};
use crate::error::ConfigError;
use crate::gram_cache::DEFAULT_REFRESH_INTERVAL;
use crate::harness::oracle::DEFAULT_ORACLE_BUDGET;
use crate::instance::ModelParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Sa,
    Omp,
    Oracle,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Sa => "sa",
            Algorithm::Omp => "omp",
            Algorithm::Oracle => "oracle",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sa" => Ok(Algorithm::Sa),
            "omp" => Ok(Algorithm::Omp),
            "oracle" => Ok(Algorithm::Oracle),
            other => Err(ConfigError::Invalid(format!("unknown algorithm `{other}`"))),
        }
    }
}

/// Generation parameters shared by all samples (seeds are per sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    pub alpha: f64,
    pub rho_hat: f64,
    pub sigma_x2: f64,
    pub sigma_xi2: f64,
}

impl ModelConfig {
    pub fn params(&self, seed: u64) -> ModelParams {
        ModelParams {
            n: self.n,
            alpha: self.alpha,
            rho_hat: self.rho_hat,
            sigma_x2: self.sigma_x2,
            sigma_xi2: self.sigma_xi2,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleConfig {
    pub mu0: f64,
    pub r: f64,
    pub tau: usize,
    pub n_mu: usize,
    /// Explicit stages; overrides the geometric parameters when present.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stages: Option<Vec<Stage>>,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        let g = GeometricParams::default();
        Self {
            mu0: g.mu0,
            r: g.r,
            tau: g.tau,
            n_mu: g.n_mu,
            stages: None,
        }
    }
}

impl ScheduleConfig {
    pub fn build(&self) -> Result<Schedule, ConfigError> {
        match &self.stages {
            Some(stages) => Schedule::new(stages.clone()),
            None => Schedule::geometric(GeometricParams {
                mu0: self.mu0,
                r: self.r,
                tau: self.tau,
                n_mu: self.n_mu,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    /// Sampler sparsity; the support size is `round(N rho)`.
    pub rho: f64,
    #[serde(default)]
    pub schedule: ScheduleConfig,
    pub n_samples: usize,
    #[serde(default)]
    pub base_seed: u64,
    #[serde(default = "default_algorithms")]
    pub algorithms: Vec<Algorithm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_oracle_budget")]
    pub oracle_budget: u64,
    #[serde(default = "default_refresh_interval")]
    pub refresh_interval: usize,
    /// Final-stage MSE below this counts as recovering the planted solution.
    #[serde(default = "default_success_threshold")]
    pub success_threshold: f64,
    /// Write one trace CSV per SA run.
    #[serde(default = "default_true")]
    pub sample_traces: bool,
}

fn default_algorithms() -> Vec<Algorithm> {
    vec![Algorithm::Sa]
}
fn default_workers() -> usize {
    1
}
fn default_oracle_budget() -> u64 {
    DEFAULT_ORACLE_BUDGET
}
fn default_refresh_interval() -> usize {
    DEFAULT_REFRESH_INTERVAL
}
fn default_success_threshold() -> f64 {
    1e-6
}
fn default_true() -> bool {
    true
}

impl Default for ExperimentConfig {
    /// The noisy setting without a planted solution at N = 400.
    fn default() -> Self {
        Self {
            model: ModelConfig {
                n: 400,
                alpha: 0.5,
                rho_hat: 0.0,
                sigma_x2: 0.0,
                sigma_xi2: 1.0,
            },
            rho: 0.2,
            schedule: ScheduleConfig::default(),
            n_samples: 100,
            base_seed: 0,
            algorithms: vec![Algorithm::Sa, Algorithm::Omp],
            output_dir: None,
            workers: default_workers(),
            oracle_budget: DEFAULT_ORACLE_BUDGET,
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
            success_threshold: default_success_threshold(),
            sample_traces: true,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self, ConfigError> {
        toml::from_str(s).map_err(|e| ConfigError::Invalid(format!("config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Hard errors for unusable configs; warnings for settings outside the
    /// planted-recovery regime.
    pub fn validate(&self) -> Result<Schedule, ConfigError> {
        self.model
            .params(self.base_seed)
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        let (n, alpha) = (self.model.n, self.model.alpha);
        if !(self.rho > 0.0 && self.rho < alpha) {
            return Err(ConfigError::Sparsity {
                rho: self.rho,
                alpha,
            });
        }
        let m = self.model.params(0).m();
        let k = (self.rho * n as f64).round() as usize;
        if k == 0 || k > m || k >= n {
            return Err(ConfigError::SupportSize { k, m, n });
        }
        if self.n_samples == 0 {
            return Err(ConfigError::Invalid("n_samples must be positive".into()));
        }
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(ConfigError::Invalid("no algorithms selected".into()));
        }
        if self.model.sigma_x2 > 0.0 && !(self.model.rho_hat < self.rho) {
            log::warn!(
                "rho = {} does not exceed rho_hat = {}; the planted support cannot fit",
                self.rho,
                self.model.rho_hat
            );
        }
        self.schedule.build()
    }

    pub fn has(&self, algo: Algorithm) -> bool {
        self.algorithms.contains(&algo)
    }
}
