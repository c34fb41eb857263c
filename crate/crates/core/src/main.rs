use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sparse_anneal::annealer::{fmt_f64, run_sa_with, SaOptions};
use sparse_anneal::harness::config::{Algorithm, ExperimentConfig};
use sparse_anneal::harness::experiment::run_experiment;
use sparse_anneal::harness::metrics::mse;
use sparse_anneal::harness::oracle::exhaustive_oracle_k;
use sparse_anneal::harness::timing::timing_report;
use sparse_anneal::instance::{ModelParams, ProblemInstance};
use sparse_anneal::omp::run_omp;
use sparse_anneal::{ConfigError, Error};

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;

#[derive(Parser)]
#[command(name = "sparse-anneal", version, about = "Simulated annealing for l0-constrained sparse approximation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a multi-sample experiment and print the aggregate table.
    Run(Overrides),
    /// Generate a planted instance file.
    Generate(GenerateArgs),
    /// Solve a single instance file.
    Solve(SolveArgs),
    /// Time one SA run per N and fit the log-log slope.
    Timing(TimingArgs),
}

/// Experiment settings; flags override values from `--config`.
#[derive(Args, Clone, Default)]
struct Overrides {
    /// TOML experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; sample s uses seed + s.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory for CSV files.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of sa, omp, oracle.
    #[arg(long, value_delimiter = ',')]
    algo: Option<Vec<Algorithm>>,
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    mu0: Option<f64>,
    #[arg(long = "n-mu")]
    n_mu: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "rho-hat")]
    rho_hat: Option<f64>,
    #[arg(long = "sigma-x2")]
    sigma_x2: Option<f64>,
    #[arg(long = "sigma-xi2")]
    sigma_xi2: Option<f64>,
    /// Worker threads for running samples.
    #[arg(long)]
    workers: Option<usize>,
}

impl Overrides {
    fn resolve(&self) -> Result<ExperimentConfig, ConfigError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value.clone() {
                    $field = v;
                }
            };
        }
        set!(cfg.base_seed, self.seed);
        set!(cfg.n_samples, self.samples);
        set!(cfg.algorithms, self.algo);
        set!(cfg.rho, self.rho);
        set!(cfg.schedule.tau, self.tau);
        set!(cfg.schedule.r, self.r);
        set!(cfg.schedule.mu0, self.mu0);
        set!(cfg.schedule.n_mu, self.n_mu);
        set!(cfg.model.n, self.n);
        set!(cfg.model.alpha, self.alpha);
        set!(cfg.model.rho_hat, self.rho_hat);
        set!(cfg.model.sigma_x2, self.sigma_x2);
        set!(cfg.model.sigma_xi2, self.sigma_xi2);
        set!(cfg.workers, self.workers);
        if let Some(out) = &self.out {
            cfg.output_dir = Some(out.clone());
        }
        let schedule_flags = self.tau.is_some() || self.r.is_some() || self.mu0.is_some() || self.n_mu.is_some();
        if schedule_flags {
            cfg.schedule.stages = None;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long = "rho-hat")]
    rho_hat: f64,
    #[arg(long = "sigma-x2", default_value_t = 1.0)]
    sigma_x2: f64,
    #[arg(long = "sigma-xi2", default_value_t = 0.0)]
    sigma_xi2: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Write the text variant instead of binary.
    #[arg(long)]
    text: bool,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file (binary or text).
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    rho: f64,
    #[arg(long, default_value = "sa")]
    algo: Algorithm,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the SA trace CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    tau: usize,
    #[arg(long, default_value_t = 1.1)]
    r: f64,
    #[arg(long, default_value_t = 1e-8)]
    mu0: f64,
    #[arg(long = "n-mu", default_value_t = 100)]
    n_mu: usize,
}

#[derive(Args)]
struct TimingArgs {
    #[command(flatten)]
    overrides: Overrides,
    /// Comma-separated values of N.
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    ns: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    repeats: usize,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_) | Error::Param(_) | Error::Format(_) | Error::OracleBudget { .. } => {
            EXIT_CONFIG
        }
        _ => EXIT_RUNTIME,
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(o) => {
            let cfg = o.resolve()?;
            let report = run_experiment(&cfg)?;
            print!("{}", report.aggregate_csv());
            if !report.aggregate.failures.is_empty() {
                eprintln!("{} sample(s) failed and were excluded", report.aggregate.failures.len());
            }
        }
        Command::Generate(g) => {
            let params = ModelParams {
                n: g.n,
                alpha: g.alpha,
                rho_hat: g.rho_hat,
                sigma_x2: g.sigma_x2,
                sigma_xi2: g.sigma_xi2,
                seed: g.seed,
            };
            let inst = ProblemInstance::generate(&params)?;
            if g.text {
                inst.save_text(&g.out)?;
            } else {
                inst.save(&g.out)?;
            }
            eprintln!(
                "wrote {} (M = {}, N = {}, planted non-zeros = {})",
                g.out.display(),
                inst.m(),
                inst.n(),
                inst.planted_count()
            );
        }
        Command::Solve(s) => {
            let inst = ProblemInstance::load(&s.instance)?;
            let (mask, coeffs, eps) = match s.algo {
                Algorithm::Sa => {
                    let sched = sparse_anneal::geometric_schedule(s.mu0, s.r, s.tau, s.n_mu)?;
                    let out = run_sa_with(&inst, s.rho, &sched, s.seed, SaOptions::default())?;
                    if let Some(path) = &s.trace {
                        std::fs::write(path, out.trace.to_csv_string())?;
                    }
                    let eps = out.eps();
                    (out.mask, out.coeffs, eps)
                }
                Algorithm::Omp => {
                    let out = run_omp(&inst, s.rho)?;
                    (out.mask, out.coeffs, out.eps)
                }
                Algorithm::Oracle => {
                    let k = sparse_anneal::annealer::support_size(&inst, s.rho)?;
                    let out = exhaustive_oracle_k(&inst, k, u64::MAX)?;
                    let st = sparse_anneal::SupportState::new(&inst, &out.mask)?;
                    (out.mask, st.full_coefficients(), out.eps)
                }
            };
            println!("eps,{}", fmt_f64(eps));
            if inst.has_planted() {
                println!("mse,{}", fmt_f64(mse(&inst, &mask, &coeffs)));
            }
            let support: Vec<String> = (0..mask.len())
                .filter(|&i| mask[i])
                .map(|i| i.to_string())
                .collect();
            println!("support,{}", support.join(" "));
        }
        Command::Timing(t) => {
            let cfg = t.overrides.resolve()?;
            let report = timing_report(&cfg, &t.ns, t.repeats)?;
            print!("{}", report.to_csv());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
