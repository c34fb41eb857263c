//! Orthogonal matching pursuit with a fixed budget of `K` columns.
//!
//! Each step picks the inactive column with the largest normalized
//! correlation `|a_kᵀ r| / ‖a_k‖` with the current residual (ties go to the
//! lowest index), adds it to the least-squares cache and refits. A column
//! that turns out numerically dependent is skipped in favour of the next
//! best candidate.

use crate::annealer::support_size;
use crate::error::{Error, GramError};
use crate::gram_cache::SupportState;
use crate::instance::ProblemInstance;
use crate::linalg::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct OmpResult {
    pub mask: Vec<bool>,
    /// Selected columns in the order they were added.
    pub order: Vec<usize>,
    /// Length-N coefficients, zero off the support.
    pub coeffs: Vec<f64>,
    pub eps: f64,
    /// Distortion after 0, 1, ..., K selections.
    pub eps_path: Vec<f64>,
    /// Candidates skipped as numerically dependent.
    pub skipped: usize,
}

/// OMP with `K = round(N ρ)` selections.
pub fn run_omp(instance: &ProblemInstance, rho: f64) -> Result<OmpResult, Error> {
    let k = support_size(instance, rho)?;
    run_omp_k(instance, k)
}

/// OMP with exactly `k` selections (`k ≤ M`).
pub fn run_omp_k(instance: &ProblemInstance, k: usize) -> Result<OmpResult, Error> {
    let n = instance.n();
    if k > instance.m() {
        return Err(GramError::InfeasibleSupport { k, m: instance.m() }.into());
    }
    let norms: Vec<f64> = (0..n)
        .map(|j| dot(instance.column(j), instance.column(j)).sqrt())
        .collect();
    let mut state = SupportState::new(instance, &vec![false; n])?.with_refresh_interval(0);
    let mut order = Vec::with_capacity(k);
    let mut eps_path = vec![state.distortion()];
    let mut skipped = 0;
    let mut scores: Vec<(f64, usize)> = Vec::with_capacity(n);

    while state.k() < k {
        scores.clear();
        let r = state.residual();
        scores.extend(state.zeros().iter().map(|&j| {
            let c = dot(instance.column(j), r).abs();
            (if norms[j] > 0.0 { c / norms[j] } else { 0.0 }, j)
        }));
        scores.sort_unstable_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut added = false;
        for &(_, j) in &scores {
            match state.add_column(j) {
                Ok(()) => {
                    order.push(j);
                    added = true;
                    break;
                }
                Err(GramError::Degenerate { .. }) => {
                    log::debug!("omp: skipping dependent column {j}");
                    skipped += 1;
                }
                Err(e) => return Err(e.into()),
            }
        }
        if !added {
            return Err(GramError::SingularSupport { pivot: 0.0 }.into());
        }
        eps_path.push(state.distortion());
    }

    Ok(OmpResult {
        mask: state.mask().to_vec(),
        order,
        coeffs: state.full_coefficients(),
        eps: state.distortion(),
        eps_path,
        skipped,
    })
}
