//! Wall-clock scaling of single annealing runs against N.

use std::fmt::Write as _;
use std::time::Instant;

use crate::annealer::{fmt_f64, run_sa_with, SaOptions};
use crate::error::{ConfigError, Error};
use crate::harness::config::ExperimentConfig;
use crate::instance::ProblemInstance;
use crate::rng::sample_seed;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimingRow {
    pub n: usize,
    /// Median over repeats of one full SA run (instance generation excluded).
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<TimingRow>,
    /// Least-squares slope of log(seconds) against log(N).
    pub slope: f64,
}

impl ScalingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,seconds\n");
        for r in &self.rows {
            writeln!(out, "{},{}", r.n, fmt_f64(r.seconds)).unwrap();
        }
        writeln!(out, "# loglog_slope,{}", fmt_f64(self.slope)).unwrap();
        out
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Times one SA run per repeat at each `N` in `ns`, using every other
/// setting of `config`.
pub fn timing_report(
    config: &ExperimentConfig,
    ns: &[usize],
    repeats: usize,
) -> Result<ScalingReport, Error> {
    if ns.len() < 3 {
        return Err(ConfigError::Invalid("timing needs at least three values of N".into()).into());
    }
    let repeats = repeats.max(1);
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut cfg = config.clone();
        cfg.model.n = n;
        let schedule = cfg.validate()?;
        let mut times = Vec::with_capacity(repeats);
        for rep in 0..repeats {
            let seed = sample_seed(cfg.base_seed, rep);
            let instance = ProblemInstance::generate(&cfg.model.params(seed))?;
            let opts = SaOptions {
                refresh_interval: cfg.refresh_interval,
            };
            let started = Instant::now();
            run_sa_with(&instance, cfg.rho, &schedule, seed, opts)?;
            times.push(started.elapsed().as_secs_f64());
        }
        times.sort_by(f64::total_cmp);
        rows.push(TimingRow {
            n,
            seconds: times[times.len() / 2],
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    Ok(ScalingReport {
        slope: loglog_slope(&xs, &ys),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let xs = [100.0, 200.0, 400.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| 2e-6 * x.powi(3)).collect();
        assert!((loglog_slope(&xs, &ys) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn needs_three_sizes() {
        let cfg = ExperimentConfig::default();
        assert!(timing_report(&cfg, &[100, 200], 1).is_err());
    }
}
