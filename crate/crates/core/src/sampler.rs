//! Metropolis pair-flip updates at fixed inverse temperature.
//!
//! A move picks `i` uniformly among active indices and `j` uniformly among
//! inactive ones, so the proposal probability `1 / (K (N − K))` is the same
//! in both directions, and accepts with probability `min(1, e^{−μ ΔE})`.
//! The chain therefore samples `P(c) ∝ δ(Σc − K) e^{−μ E(c)}`.

use rand::Rng as _;

use crate::error::{ConfigError, Error, GramError};
use crate::gram_cache::{FlipWorkspace, SupportState};
use crate::rng::Rng;

/// Move counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct McStats {
    pub proposals: u64,
    pub acceptances: u64,
    /// Proposals rejected because the flipped support was numerically singular.
    pub degenerate: u64,
}

impl McStats {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposals == 0 {
            0.0
        } else {
            self.acceptances as f64 / self.proposals as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MoveOutcome {
    Accepted,
    Rejected,
    Degenerate,
}

/// Markov chain over supports of fixed cardinality.
#[derive(Debug, Clone)]
pub struct McState<'a> {
    support: SupportState<'a>,
    mu: f64,
    rng: Rng,
    stats: McStats,
    ws: FlipWorkspace,
}

/// Metropolis acceptance probability for an energy change `delta` at
/// inverse temperature `mu`.
pub fn acceptance_probability(mu: f64, delta: f64) -> f64 {
    if mu == 0.0 {
        return 1.0;
    }
    (-mu * delta).exp().min(1.0)
}

impl<'a> McState<'a> {
    /// Needs both ONES and ZEROS non-empty.
    pub fn new(support: SupportState<'a>, mu: f64, rng: Rng) -> Result<Self, ConfigError> {
        let (k, n) = (support.k(), support.instance().n());
        if k == 0 || k == n {
            return Err(ConfigError::SupportSize {
                k,
                m: support.instance().m(),
                n,
            });
        }
        if !(mu >= 0.0) {
            return Err(ConfigError::Invalid(format!(
                "inverse temperature must be nonnegative, got {mu}"
            )));
        }
        Ok(Self {
            support,
            mu,
            rng,
            stats: McStats::default(),
            ws: FlipWorkspace::new(),
        })
    }

    pub fn support(&self) -> &SupportState<'a> {
        &self.support
    }

    pub fn into_support(self) -> SupportState<'a> {
        self.support
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn set_mu(&mut self, mu: f64) {
        debug_assert!(mu >= 0.0);
        self.mu = mu;
    }

    pub fn stats(&self) -> McStats {
        self.stats
    }

    pub fn reset_stats(&mut self) {
        self.stats = McStats::default();
    }

    pub fn rng(&self) -> &Rng {
        &self.rng
    }

    /// One Metropolis pair-flip update.
    ///
    /// Consumes exactly three draws from the generator per call.
    pub fn mc_pair_flip(&mut self) -> Result<MoveOutcome, Error> {
        self.support.maintain()?;
        let ones = self.support.ones();
        let zeros = self.support.zeros();
        let i = ones[self.rng.random_range(0..ones.len())];
        let j = zeros[self.rng.random_range(0..zeros.len())];
        let u: f64 = self.rng.random();
        self.stats.proposals += 1;

        let e_old = self.support.energy();
        let e_new = match self.support.probe_pair_flip_with(i, j, &mut self.ws) {
            Ok(e) => e,
            Err(GramError::Degenerate { .. }) => {
                self.stats.degenerate += 1;
                self.support.request_refresh();
                return Ok(MoveOutcome::Degenerate);
            }
            Err(e) => return Err(e.into()),
        };
        if u < acceptance_probability(self.mu, e_new - e_old) {
            self.support.commit_probed(&mut self.ws);
            self.stats.acceptances += 1;
            Ok(MoveOutcome::Accepted)
        } else {
            Ok(MoveOutcome::Rejected)
        }
    }

    /// `N` updates; returns the distortion `E / M` afterwards.
    pub fn sweep(&mut self) -> Result<f64, Error> {
        for _ in 0..self.support.instance().n() {
            self.mc_pair_flip()?;
        }
        Ok(self.support.distortion())
    }
}
