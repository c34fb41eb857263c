//! Exhaustive best-subset search over supports of a fixed size.
//!
//! Supports are visited depth-first in lexicographic order; each level of
//! the search extends its parent's least-squares cache by one column, so a
//! leaf costs one bordered update rather than a fresh factorization.

use crate::annealer::support_size;
use crate::error::{Error, GramError};
use crate::gram_cache::SupportState;
use crate::instance::ProblemInstance;

pub const DEFAULT_ORACLE_BUDGET: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub mask: Vec<bool>,
    pub energy: f64,
    pub eps: f64,
    /// Supports whose energy was evaluated.
    pub evaluated: u64,
    /// Supports skipped because their columns are numerically dependent.
    pub singular: u64,
}

/// `C(n, k)` as a float (exact below 2^53).
pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64).round()
}

/// Global minimizer of `E(c)` over supports of size `round(N ρ)`.
pub fn exhaustive_oracle(instance: &ProblemInstance, rho: f64) -> Result<OracleResult, Error> {
    let k = support_size(instance, rho)?;
    exhaustive_oracle_k(instance, k, DEFAULT_ORACLE_BUDGET)
}

/// Global minimizer over supports of size exactly `k`. Ties keep the
/// lexicographically first support.
pub fn exhaustive_oracle_k(
    instance: &ProblemInstance,
    k: usize,
    budget: u64,
) -> Result<OracleResult, Error> {
    let n = instance.n();
    if k > instance.m() {
        return Err(GramError::InfeasibleSupport { k, m: instance.m() }.into());
    }
    let needed = binomial(n, k);
    if needed > budget as f64 {
        return Err(Error::OracleBudget { needed, budget });
    }
    let root = SupportState::new(instance, &vec![false; n])?.with_refresh_interval(0);
    let mut search = Search {
        n,
        k,
        best: None,
        evaluated: 0,
        singular: 0,
    };
    search.descend(&root, 0)?;
    let (mask, energy) = search.best.ok_or(GramError::SingularSupport { pivot: 0.0 })?;
    Ok(OracleResult {
        mask,
        energy,
        eps: energy / instance.m() as f64,
        evaluated: search.evaluated,
        singular: search.singular,
    })
}

struct Search {
    n: usize,
    k: usize,
    best: Option<(Vec<bool>, f64)>,
    evaluated: u64,
    singular: u64,
}

impl Search {
    fn descend(&mut self, state: &SupportState<'_>, start: usize) -> Result<(), Error> {
        if state.k() == self.k {
            self.evaluated += 1;
            let e = state.energy();
            if self.best.as_ref().map_or(true, |(_, b)| e < *b) {
                self.best = Some((state.mask().to_vec(), e));
            }
            return Ok(());
        }
        let remaining = self.k - state.k();
        for j in start..=self.n - remaining {
            let mut next = state.clone();
            match next.add_column(j) {
                Ok(()) => self.descend(&next, j + 1)?,
                Err(GramError::Degenerate { .. }) => {
                    self.singular += binomial(self.n - j - 1, remaining - 1) as u64;
                }
                Err(e) => return Err(e.into()),
            }
        }
        Ok(())
    }
}
