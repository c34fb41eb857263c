//! Simulated annealing driver.
//!
//! Starting from a uniformly random support of size `K = round(N ρ)`, the
//! chain runs `τ_a` sweeps at each inverse temperature `μ_a` of an
//! increasing schedule. The chain is never reset between stages. After each
//! sweep the distortion (and MSE when a planted solution exists) is recorded;
//! stage records average those values.

use std::io::{self, Write};

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, Error};
use crate::gram_cache::{SupportState, DEFAULT_REFRESH_INTERVAL};
use crate::harness::metrics::{support_mse, Summary};
use crate::instance::ProblemInstance;
use crate::rng::{stream_rng, Stream};
use crate::sampler::{McState, McStats};

pub const TRACE_CSV_HEADER: &str = "stage,mu,T,eps_mean,eps_std,mse_mean,mse_std,accept_rate";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub mu: f64,
    pub sweeps: usize,
}

/// Parameters of `μ_a = μ0 + r^(a−1) − 1`, `τ_a = τ`, `a = 1..=n_mu`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricParams {
    pub mu0: f64,
    pub r: f64,
    pub tau: usize,
    pub n_mu: usize,
}

impl Default for GeometricParams {
    fn default() -> Self {
        Self {
            mu0: 1e-8,
            r: 1.1,
            tau: 5,
            n_mu: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    stages: Vec<Stage>,
    geometric: Option<GeometricParams>,
}

impl Schedule {
    /// Explicit stages; `μ` must be finite, nonnegative and strictly increasing.
    pub fn new(stages: Vec<Stage>) -> Result<Self, ConfigError> {
        if stages.is_empty() {
            return Err(ConfigError::EmptySchedule);
        }
        for (a, s) in stages.iter().enumerate() {
            let stage = a + 1;
            if !(s.mu.is_finite() && s.mu >= 0.0) || (a > 0 && !(s.mu > stages[a - 1].mu)) {
                return Err(ConfigError::ScheduleOrder { stage });
            }
            if s.sweeps == 0 {
                return Err(ConfigError::ZeroSweeps { stage });
            }
        }
        Ok(Self {
            stages,
            geometric: None,
        })
    }

    pub fn geometric(p: GeometricParams) -> Result<Self, ConfigError> {
        geometric_schedule(p.mu0, p.r, p.tau, p.n_mu)
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    /// Generating parameters when built by [`geometric_schedule`].
    pub fn geometric_params(&self) -> Option<GeometricParams> {
        self.geometric
    }

    pub fn total_sweeps(&self) -> usize {
        self.stages.iter().map(|s| s.sweeps).sum()
    }
}

/// `μ_a = μ0 + r^(a−1) − 1` with `τ_a = τ` for `a = 1..=n_mu`.
pub fn geometric_schedule(mu0: f64, r: f64, tau: usize, n_mu: usize) -> Result<Schedule, ConfigError> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(ConfigError::NonIncreasingTemperature(r));
    }
    if !(mu0 >= 0.0) {
        return Err(ConfigError::Invalid(format!("mu0 must be nonnegative, got {mu0}")));
    }
    let stages = (0..n_mu)
        .map(|a| Stage {
            mu: mu0 + (r.powi(a as i32) - 1.0),
            sweeps: tau,
        })
        .collect();
    let mut s = Schedule::new(stages)?;
    s.geometric = Some(GeometricParams { mu0, r, tau, n_mu });
    Ok(s)
}

/// Statistics of one annealing stage.
#[derive(Debug, Clone, PartialEq)]
pub struct StageRecord {
    /// 1-based stage number.
    pub stage: usize,
    pub mu: f64,
    /// Distortion after each of the `τ_a` sweeps.
    pub sweep_eps: Vec<f64>,
    /// MSE after each sweep, when the instance has a planted solution.
    pub sweep_mse: Option<Vec<f64>>,
    pub stats: McStats,
}

impl StageRecord {
    pub fn temperature(&self) -> f64 {
        1.0 / self.mu
    }

    pub fn eps_mean(&self) -> f64 {
        self.sweep_eps.iter().sum::<f64>() / self.sweep_eps.len() as f64
    }

    pub fn eps_std(&self) -> f64 {
        Summary::std(&self.sweep_eps).unwrap_or(0.0)
    }

    pub fn mse_mean(&self) -> Option<f64> {
        self.sweep_mse.as_deref().and_then(Summary::of).map(|s| s.mean)
    }

    pub fn mse_std(&self) -> Option<f64> {
        self.sweep_mse.as_deref().and_then(Summary::std)
    }

    pub fn accept_rate(&self) -> f64 {
        self.stats.acceptance_rate()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnnealTrace {
    pub stages: Vec<StageRecord>,
}

impl AnnealTrace {
    /// Writes the per-stage table, one row per stage after the header.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "{TRACE_CSV_HEADER}")?;
        for s in &self.stages {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                s.stage,
                fmt_f64(s.mu),
                fmt_f64(s.temperature()),
                fmt_f64(s.eps_mean()),
                fmt_f64(s.eps_std()),
                fmt_opt(s.mse_mean()),
                fmt_opt(s.mse_std()),
                fmt_f64(s.accept_rate()),
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }
}

/// Floats in CSV output: shortest round-trip scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

pub fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SaOptions {
    pub refresh_interval: usize,
}

impl Default for SaOptions {
    fn default() -> Self {
        Self {
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
        }
    }
}

/// Result of one annealing run.
#[derive(Debug, Clone)]
pub struct SaOutcome {
    pub mask: Vec<bool>,
    /// Length-N coefficients, zero off the support.
    pub coeffs: Vec<f64>,
    pub energy: f64,
    pub initial_energy: f64,
    pub trace: AnnealTrace,
    pub stats: McStats,
    pub refreshes: usize,
    m: usize,
}

impl SaOutcome {
    pub fn eps(&self) -> f64 {
        self.energy / self.m as f64
    }

    /// MSE averaged over the last stage's sweeps.
    pub fn final_stage_mse(&self) -> Option<f64> {
        self.trace.stages.last().and_then(StageRecord::mse_mean)
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.mask.len()).filter(|&i| self.mask[i]).collect()
    }
}

/// `K = round(N ρ)`, checked against `0 < ρ < α` and `1 ≤ K ≤ min(M, N − 1)`.
pub fn support_size(instance: &ProblemInstance, rho: f64) -> Result<usize, ConfigError> {
    let alpha = instance.params().alpha;
    if !(rho > 0.0 && rho < alpha) {
        return Err(ConfigError::Sparsity { rho, alpha });
    }
    let (n, m) = (instance.n(), instance.m());
    let k = (rho * n as f64).round() as usize;
    if k == 0 || k > m || k >= n {
        return Err(ConfigError::SupportSize { k, m, n });
    }
    if ((k as f64 / n as f64) - rho).abs() > 1e-6 {
        log::warn!(
            "N rho = {} is not integral; using K = {k} (rho = {})",
            rho * n as f64,
            k as f64 / n as f64
        );
    }
    Ok(k)
}

pub fn run_sa(
    instance: &ProblemInstance,
    rho: f64,
    schedule: &Schedule,
    seed: u64,
) -> Result<SaOutcome, Error> {
    run_sa_with(instance, rho, schedule, seed, SaOptions::default())
}

pub fn run_sa_with(
    instance: &ProblemInstance,
    rho: f64,
    schedule: &Schedule,
    seed: u64,
    opts: SaOptions,
) -> Result<SaOutcome, Error> {
    let k = support_size(instance, rho)?;
    let mut init_rng = stream_rng(seed, Stream::Annealer);
    let mut start = index::sample(&mut init_rng, instance.n(), k).into_vec();
    start.sort_unstable();
    let support =
        SupportState::from_indices(instance, &start)?.with_refresh_interval(opts.refresh_interval);
    let initial_energy = support.energy();

    let first_mu = schedule.stages()[0].mu;
    let mut mc = McState::new(support, first_mu, stream_rng(seed, Stream::Sampler))?;
    let track_mse = instance.has_planted();
    let mut trace = AnnealTrace::default();
    let mut total = McStats::default();

    for (a, stage) in schedule.stages().iter().enumerate() {
        mc.set_mu(stage.mu);
        mc.reset_stats();
        let mut sweep_eps = Vec::with_capacity(stage.sweeps);
        let mut sweep_mse = track_mse.then(|| Vec::with_capacity(stage.sweeps));
        for _ in 0..stage.sweeps {
            sweep_eps.push(mc.sweep()?);
            if let Some(v) = sweep_mse.as_mut() {
                v.push(support_mse(mc.support()));
            }
        }
        let stats = mc.stats();
        total.proposals += stats.proposals;
        total.acceptances += stats.acceptances;
        total.degenerate += stats.degenerate;
        trace.stages.push(StageRecord {
            stage: a + 1,
            mu: stage.mu,
            sweep_eps,
            sweep_mse,
            stats,
        });
    }

    let support = mc.into_support();
    Ok(SaOutcome {
        mask: support.mask().to_vec(),
        coeffs: support.full_coefficients(),
        energy: support.energy(),
        initial_energy,
        trace,
        stats: total,
        refreshes: support.refresh_count(),
        m: instance.m(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ModelParams;

    #[test]
    fn geometric_small_case() {
        let s = geometric_schedule(0.0, 2.0, 1, 3).unwrap();
        let mus: Vec<f64> = s.stages().iter().map(|s| s.mu).collect();
        assert_eq!(mus, vec![0.0, 1.0, 3.0]);
        assert!(s.stages().iter().all(|s| s.sweeps == 1));
    }

    #[test]
    fn default_schedule_endpoints() {
        let s = Schedule::geometric(GeometricParams::default()).unwrap();
        assert_eq!(s.len(), 100);
        assert_eq!(s.stages()[0].mu, 1e-8);
        let last = s.stages()[99].mu;
        // 1.1^99 ≈ 12527.8
        assert!((last - 1.1f64.powi(99) + 1.0 - 1e-8).abs() < 1e-9);
        assert!((last / 1.3e4 - 1.0).abs() < 0.05, "{last}");
        assert_eq!(s.total_sweeps(), 500);
    }

    #[test]
    fn schedule_validation() {
        assert_eq!(
            geometric_schedule(0.0, 1.0, 5, 10).unwrap_err(),
            ConfigError::NonIncreasingTemperature(1.0)
        );
        assert!(geometric_schedule(0.0, 0.5, 5, 10).is_err());
        assert!(geometric_schedule(0.0, 1.1, 0, 10).is_err());
        assert!(geometric_schedule(0.0, 1.1, 5, 0).is_err());
        let dup = vec![Stage { mu: 1.0, sweeps: 1 }, Stage { mu: 1.0, sweeps: 1 }];
        assert_eq!(Schedule::new(dup).unwrap_err(), ConfigError::ScheduleOrder { stage: 2 });
    }

    fn small_instance(seed: u64) -> ProblemInstance {
        ProblemInstance::generate(&ModelParams {
            n: 40,
            alpha: 0.6,
            rho_hat: 0.15,
            sigma_x2: 1.0,
            sigma_xi2: 0.0,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn infeasible_rho_is_config_error() {
        let inst = small_instance(1);
        assert!(matches!(
            support_size(&inst, 0.7),
            Err(ConfigError::Sparsity { .. })
        ));
        assert!(support_size(&inst, 0.0).is_err());
        assert!(matches!(
            support_size(&inst, 0.01),
            Err(ConfigError::SupportSize { k: 0, .. })
        ));
        assert_eq!(support_size(&inst, 0.25).unwrap(), 10);
    }

    #[test]
    fn trace_shape_and_csv() {
        let inst = small_instance(2);
        let sched = geometric_schedule(1e-8, 1.3, 3, 12).unwrap();
        let out = run_sa(&inst, 0.25, &sched, 9).unwrap();
        assert_eq!(out.trace.stages.len(), 12);
        for s in &out.trace.stages {
            assert_eq!(s.sweep_eps.len(), 3);
            assert_eq!(s.sweep_mse.as_ref().unwrap().len(), 3);
            assert_eq!(s.stats.proposals, 3 * 40);
        }
        assert_eq!(out.mask.iter().filter(|b| **b).count(), 10);
        assert!(out.energy <= out.initial_energy);
        let csv = out.trace.to_csv_string();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], TRACE_CSV_HEADER);
        assert_eq!(lines.len(), 13);
        assert!(lines[1].starts_with("1,1e-8,1e8,"));
    }

    #[test]
    fn runs_are_reproducible() {
        let inst = small_instance(3);
        let sched = geometric_schedule(1e-8, 1.3, 2, 10).unwrap();
        let a = run_sa(&inst, 0.25, &sched, 4).unwrap();
        let b = run_sa(&inst, 0.25, &sched, 4).unwrap();
        assert_eq!(a.trace, b.trace);
        assert_eq!(a.mask, b.mask);
        assert_eq!(a.energy.to_bits(), b.energy.to_bits());
    }

    #[test]
    fn no_mse_without_planted_solution() {
        let inst = ProblemInstance::generate(&ModelParams {
            n: 30,
            alpha: 0.5,
            rho_hat: 0.0,
            sigma_x2: 0.0,
            sigma_xi2: 1.0,
            seed: 5,
        })
        .unwrap();
        let sched = geometric_schedule(0.0, 1.5, 2, 5).unwrap();
        let out = run_sa(&inst, 0.2, &sched, 1).unwrap();
        assert!(out.trace.stages.iter().all(|s| s.sweep_mse.is_none()));
        assert_eq!(out.final_stage_mse(), None);
        assert!(out.trace.to_csv_string().lines().nth(1).unwrap().contains(",,,"));
    }
}
