//! Multi-sample experiments.
//!
//! Sample `s` draws its instance and chain from seed `base_seed + s` on
//! separate streams, so any subset of samples can be rerun alone. Samples
//! run on a bounded worker pool; results are reduced in sample order and
//! every CSV is independent of the worker count. Wall-clock timings go to
//! their own file so that all other outputs are byte-reproducible.
//!
//! Output directory layout:
//!
//! | file                   | contents                                           |
//! |------------------------|----------------------------------------------------|
//! | `samples.csv`          | one row per (sample, algorithm)                    |
//! | `aggregate.csv`        | `quantity,algorithm,mean,err,n_samples`            |
//! | `trace_aggregate.csv`  | per-stage SA averages across samples               |
//! | `traces/sa_NNNN.csv`   | per-run SA trace                                   |
//! | `failures.csv`         | samples excluded because of an error               |
//! | `timing.csv`           | wall-clock seconds per (sample, algorithm)         |
//! | `metadata.json`        | config echo, RNG, format versions, build id        |

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde_json::json;

use crate::annealer::{fmt_f64, fmt_opt, run_sa_with, AnnealTrace, SaOptions, Schedule};
use crate::error::{ConfigError, Error};
use crate::gram_cache::SupportState;
use crate::harness::config::{Algorithm, ExperimentConfig};
use crate::harness::metrics::{mse, Summary};
use crate::harness::oracle::exhaustive_oracle_k;
use crate::harness::reference::{lookup, REFERENCE_LABEL, REFERENCE_TABLE_VERSION};
use crate::instance::{ProblemInstance, INSTANCE_FORMAT_VERSION};
use crate::omp::run_omp_k;
use crate::rng::{sample_seed, RNG_IDENTIFIER};

pub const OUTPUT_FORMAT_VERSION: u32 = 1;
pub const SAMPLES_CSV_HEADER: &str = "sample,seed,algorithm,k,planted_count,eps,eps_final,mse,success";
pub const AGGREGATE_CSV_HEADER: &str = "quantity,algorithm,mean,err,n_samples";
pub const STAGE_AGGREGATE_CSV_HEADER: &str =
    "stage,mu,T,eps_mean,eps_err,mse_mean,mse_err,accept_rate,n_samples";

/// Outcome of one algorithm on one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgoResult {
    pub algorithm: Algorithm,
    /// For SA the last stage's sweep average; otherwise the final distortion.
    pub eps: f64,
    /// Distortion of the returned support.
    pub eps_final: f64,
    /// For SA the last stage's sweep average; absent without a planted solution.
    pub mse: Option<f64>,
    pub success: Option<bool>,
    pub energy: f64,
    pub mask: Vec<bool>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub index: usize,
    pub seed: u64,
    pub k: usize,
    pub planted_count: usize,
    pub results: Vec<AlgoResult>,
    pub sa_trace: Option<AnnealTrace>,
    /// SA energy of the random starting support.
    pub sa_initial_energy: Option<f64>,
}

impl SampleResult {
    pub fn get(&self, algo: Algorithm) -> Option<&AlgoResult> {
        self.results.iter().find(|r| r.algorithm == algo)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFailure {
    pub index: usize,
    pub seed: u64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AggregateRow {
    pub quantity: &'static str,
    pub algorithm: Algorithm,
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageAggregate {
    pub stage: usize,
    pub mu: f64,
    pub eps: Summary,
    pub mse: Option<Summary>,
    pub accept_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AggregateResult {
    pub rows: Vec<AggregateRow>,
    pub stages: Vec<StageAggregate>,
    pub failures: Vec<SampleFailure>,
}

impl AggregateResult {
    pub fn get(&self, quantity: &str, algorithm: Algorithm) -> Option<&Summary> {
        self.rows
            .iter()
            .find(|r| r.quantity == quantity && r.algorithm == algorithm)
            .map(|r| &r.summary)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub samples: Vec<SampleResult>,
    pub aggregate: AggregateResult,
}

/// Runs the configured experiment and, when `output_dir` is set, writes
/// its CSV files there.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, Error> {
    let schedule = config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("worker pool: {e}")))?;
    let outcomes: Vec<Result<SampleResult, Error>> = pool.install(|| {
        (0..config.n_samples)
            .into_par_iter()
            .map(|index| run_sample(config, &schedule, index))
            .collect()
    });

    let mut samples = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    for (index, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(s) => samples.push(s),
            Err(e) => {
                log::warn!("sample {index} failed and is excluded: {e}");
                failures.push(SampleFailure {
                    index,
                    seed: sample_seed(config.base_seed, index),
                    message: e.to_string(),
                });
            }
        }
    }
    if failures.len() * 10 > config.n_samples {
        return Err(Error::TooManyFailures {
            failed: failures.len(),
            total: config.n_samples,
        });
    }

    let mut aggregate = aggregate(config, &samples);
    aggregate.failures = failures;
    let report = ExperimentReport {
        config: config.clone(),
        samples,
        aggregate,
    };
    if let Some(dir) = &config.output_dir {
        report.write(dir)?;
    }
    Ok(report)
}

/// Runs every configured algorithm on sample `index`.
pub fn run_sample(
    config: &ExperimentConfig,
    schedule: &Schedule,
    index: usize,
) -> Result<SampleResult, Error> {
    let seed = sample_seed(config.base_seed, index);
    let instance = ProblemInstance::generate(&config.model.params(seed))?;
    let k = crate::annealer::support_size(&instance, config.rho)?;
    let planted = instance.has_planted();
    let success = |m: Option<f64>| m.map(|v| v < config.success_threshold);

    let mut results = Vec::new();
    let mut sa_trace = None;
    let mut sa_initial_energy = None;
    for &algo in &config.algorithms {
        let started = Instant::now();
        let result = match algo {
            Algorithm::Sa => {
                let opts = SaOptions {
                    refresh_interval: config.refresh_interval,
                };
                let out = run_sa_with(&instance, config.rho, schedule, seed, opts)?;
                let last = out.trace.stages.last().expect("schedule is non-empty");
                let mse_v = last.mse_mean();
                let r = AlgoResult {
                    algorithm: algo,
                    eps: last.eps_mean(),
                    eps_final: out.eps(),
                    mse: mse_v,
                    success: success(mse_v),
                    energy: out.energy,
                    mask: out.mask,
                    seconds: 0.0,
                };
                sa_initial_energy = Some(out.initial_energy);
                sa_trace = Some(out.trace);
                r
            }
            Algorithm::Omp => {
                let out = run_omp_k(&instance, k)?;
                let mse_v = planted.then(|| mse(&instance, &out.mask, &out.coeffs));
                AlgoResult {
                    algorithm: algo,
                    eps: out.eps,
                    eps_final: out.eps,
                    mse: mse_v,
                    success: success(mse_v),
                    energy: out.eps * instance.m() as f64,
                    mask: out.mask,
                    seconds: 0.0,
                }
            }
            Algorithm::Oracle => {
                let out = exhaustive_oracle_k(&instance, k, config.oracle_budget)?;
                let mse_v = if planted {
                    let st = SupportState::new(&instance, &out.mask)?;
                    Some(mse(&instance, &out.mask, &st.full_coefficients()))
                } else {
                    None
                };
                AlgoResult {
                    algorithm: algo,
                    eps: out.eps,
                    eps_final: out.eps,
                    mse: mse_v,
                    success: success(mse_v),
                    energy: out.energy,
                    mask: out.mask,
                    seconds: 0.0,
                }
            }
        };
        results.push(AlgoResult {
            seconds: started.elapsed().as_secs_f64(),
            ..result
        });
    }
    Ok(SampleResult {
        index,
        seed,
        k,
        planted_count: instance.planted_count(),
        results,
        sa_trace,
        sa_initial_energy,
    })
}

fn aggregate(config: &ExperimentConfig, samples: &[SampleResult]) -> AggregateResult {
    let mut rows = Vec::new();
    for &algo in &config.algorithms {
        let per: Vec<&AlgoResult> = samples.iter().filter_map(|s| s.get(algo)).collect();
        let mut push = |quantity: &'static str, values: Vec<f64>| {
            if let Some(summary) = Summary::of(&values) {
                rows.push(AggregateRow {
                    quantity,
                    algorithm: algo,
                    summary,
                });
            }
        };
        push("eps", per.iter().map(|r| r.eps).collect());
        push("eps_final", per.iter().map(|r| r.eps_final).collect());
        push("mse", per.iter().filter_map(|r| r.mse).collect());
        push(
            "success_rate",
            per.iter()
                .filter_map(|r| r.success)
                .map(|s| if s { 1.0 } else { 0.0 })
                .collect(),
        );
    }

    let traces: Vec<&AnnealTrace> = samples.iter().filter_map(|s| s.sa_trace.as_ref()).collect();
    let mut stages = Vec::new();
    if let Some(first) = traces.first() {
        for (a, rec) in first.stages.iter().enumerate() {
            let eps: Vec<f64> = traces.iter().map(|t| t.stages[a].eps_mean()).collect();
            let mses: Vec<f64> = traces.iter().filter_map(|t| t.stages[a].mse_mean()).collect();
            let acc: Vec<f64> = traces.iter().map(|t| t.stages[a].accept_rate()).collect();
            stages.push(StageAggregate {
                stage: rec.stage,
                mu: rec.mu,
                eps: Summary::of(&eps).expect("at least one trace"),
                mse: Summary::of(&mses),
                accept_rate: acc.iter().sum::<f64>() / acc.len() as f64,
            });
        }
    }
    AggregateResult {
        rows,
        stages,
        failures: Vec::new(),
    }
}

impl ExperimentReport {
    pub fn samples_csv(&self) -> String {
        let mut out = format!("{SAMPLES_CSV_HEADER}\n");
        for s in &self.samples {
            for r in &s.results {
                let success = r.success.map(|b| if b { "1" } else { "0" }).unwrap_or("");
                writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{}",
                    s.index,
                    s.seed,
                    r.algorithm,
                    s.k,
                    s.planted_count,
                    fmt_f64(r.eps),
                    fmt_f64(r.eps_final),
                    fmt_opt(r.mse),
                    success
                )
                .unwrap();
            }
        }
        out
    }

    pub fn aggregate_csv(&self) -> String {
        let mut out = format!("{AGGREGATE_CSV_HEADER}\n");
        for row in &self.aggregate.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                row.quantity,
                row.algorithm,
                fmt_f64(row.summary.mean),
                fmt_opt(row.summary.err),
                row.summary.n
            )
            .unwrap();
        }
        let m = &self.config.model;
        if let Some(r) = lookup(m.alpha, self.config.rho, m.sigma_xi2, m.sigma_x2) {
            for (name, v) in [("eps_l1", r.eps_l1), ("eps_l1_ls", r.eps_l1_ls), ("eps_limit", r.eps_limit)] {
                writeln!(out, "{name},reference,{},,", fmt_f64(v)).unwrap();
            }
        }
        out
    }

    pub fn stage_csv(&self) -> String {
        let mut out = format!("{STAGE_AGGREGATE_CSV_HEADER}\n");
        for s in &self.aggregate.stages {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                s.stage,
                fmt_f64(s.mu),
                fmt_f64(1.0 / s.mu),
                fmt_f64(s.eps.mean),
                fmt_opt(s.eps.err),
                fmt_opt(s.mse.map(|m| m.mean)),
                fmt_opt(s.mse.and_then(|m| m.err)),
                fmt_f64(s.accept_rate),
                s.eps.n
            )
            .unwrap();
        }
        out
    }

    pub fn failures_csv(&self) -> String {
        let mut out = String::from("sample,seed,error\n");
        for f in &self.aggregate.failures {
            let msg = f.message.replace(['"', '\n'], " ");
            writeln!(out, "{},{},\"{msg}\"", f.index, f.seed).unwrap();
        }
        out
    }

    pub fn timing_csv(&self) -> String {
        let mut out = String::from("sample,algorithm,seconds\n");
        for s in &self.samples {
            for r in &s.results {
                writeln!(out, "{},{},{}", s.index, r.algorithm, fmt_f64(r.seconds)).unwrap();
            }
        }
        out
    }

    pub fn metadata_json(&self) -> String {
        let config: toml::Value =
            toml::Value::try_from(&self.config).expect("config is always serializable");
        let meta = json!({
            "crate": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "build_id": env!("SPARSE_ANNEAL_BUILD_ID"),
            "rng": RNG_IDENTIFIER,
            "instance_format_version": INSTANCE_FORMAT_VERSION,
            "output_format_version": OUTPUT_FORMAT_VERSION,
            "reference_table_version": REFERENCE_TABLE_VERSION,
            "reference_label": REFERENCE_LABEL,
            "config": config,
        });
        serde_json::to_string_pretty(&meta).expect("metadata is valid json") + "\n"
    }

    /// Writes all outputs into `dir` (created if missing).
    pub fn write(&self, dir: &Path) -> Result<(), Error> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("samples.csv"), self.samples_csv())?;
        fs::write(dir.join("aggregate.csv"), self.aggregate_csv())?;
        fs::write(dir.join("failures.csv"), self.failures_csv())?;
        fs::write(dir.join("timing.csv"), self.timing_csv())?;
        fs::write(dir.join("metadata.json"), self.metadata_json())?;
        if !self.aggregate.stages.is_empty() {
            fs::write(dir.join("trace_aggregate.csv"), self.stage_csv())?;
        }
        if self.config.sample_traces {
            let traces = dir.join("traces");
            fs::create_dir_all(&traces)?;
            for s in &self.samples {
                if let Some(t) = &s.sa_trace {
                    fs::write(traces.join(format!("sa_{:04}.csv", s.index)), t.to_csv_string())?;
                }
            }
        }
        Ok(())
    }
}
