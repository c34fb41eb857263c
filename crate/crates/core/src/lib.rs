//! Simulated annealing for the l0-constrained sparse approximation problem.
//!
//! Given a dictionary `A` and a signal `y`, find the support `c` of `K`
//! columns minimizing `E(c) = ½‖y − Ã(c) x̃(c)‖²`, where `x̃(c)` is the least
//! squares fit on the chosen columns. The crate provides:
//!
//! * [`instance`]: planted Bernoulli-Gaussian instances and their file format,
//! * [`gram_cache`]: the restricted least-squares state with `O(K² + MK)`
//!   column additions and deletions,
//! * [`sampler`]: Metropolis pair-flip moves at fixed inverse temperature,
//! * [`annealer`]: the annealing driver and its geometric schedule,
//! * [`omp`]: an orthogonal matching pursuit baseline,
//! * [`harness`]: experiments, metrics, an exhaustive oracle and timing.

pub mod annealer;
pub mod error;
pub mod gram_cache;
pub mod harness;
pub mod instance;
mod linalg;
pub mod omp;
pub mod rng;
pub mod sampler;

pub use annealer::{geometric_schedule, run_sa, AnnealTrace, Schedule, SaOutcome};
pub use error::{ConfigError, Error, FormatError, GramError, ParamError};
pub use gram_cache::SupportState;
pub use instance::{ModelParams, ProblemInstance};
pub use omp::run_omp;
pub use sampler::McState;
