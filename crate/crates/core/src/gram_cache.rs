//! Restricted least squares over a support, maintained incrementally.
//!
//! For the active columns `ones` the cache holds `G = Ã^T Ã`, `G^{-1}`,
//! `Ã^T y`, the coefficients `G^{-1} Ã^T y`, the residual and the energy
//! `½‖y − Ã x̃‖²`. Adding a column borders `G^{-1}` with the Schur complement
//! `γ = g_jj − gᵀ G^{-1} g`; deleting one applies the rank-one downdate
//! `U − u uᵀ / u_kk` after moving the column to the last position. Both cost
//! `O(K²)` on the inverse plus `O(M K)` for the border and the residual.
//!
//! Matrices are packed row-major `K x K` in the order of `ones`. Deleting
//! position `p` moves the last active index into `p` (swap-remove) and
//! additions append, so pair flips keep the ordering stable apart from
//! that one swap.

use crate::error::GramError;
use crate::instance::ProblemInstance;
use crate::linalg::{axpy, dot, spd_inverse, symv};

/// Absolute threshold on Schur complements and inverse pivots.
pub const SINGULAR_TOL: f64 = 1e-10;

/// Committed moves between full re-factorizations.
pub const DEFAULT_REFRESH_INTERVAL: usize = 1000;

#[derive(Debug, Clone, Default, PartialEq)]
struct Factors {
    ones: Vec<usize>,
    gram: Vec<f64>,
    gram_inv: Vec<f64>,
    aty: Vec<f64>,
    coeffs: Vec<f64>,
    residual: Vec<f64>,
    energy: f64,
}

impl Factors {
    fn k(&self) -> usize {
        self.ones.len()
    }

    fn factorize(inst: &ProblemInstance, ones: Vec<usize>) -> Result<Self, GramError> {
        let k = ones.len();
        if k > inst.m() {
            return Err(GramError::InfeasibleSupport { k, m: inst.m() });
        }
        let mut gram = vec![0.0; k * k];
        for a in 0..k {
            let ca = inst.column(ones[a]);
            for b in 0..=a {
                let v = dot(ca, inst.column(ones[b]));
                gram[a * k + b] = v;
                gram[b * k + a] = v;
            }
        }
        let gram_inv = spd_inverse(&gram, k, SINGULAR_TOL)
            .map_err(|pivot| GramError::SingularSupport { pivot })?;
        let aty = ones.iter().map(|&j| dot(inst.column(j), inst.y())).collect();
        let mut f = Self {
            ones,
            gram,
            gram_inv,
            aty,
            coeffs: Vec::new(),
            residual: Vec::new(),
            energy: 0.0,
        };
        f.fit(inst);
        Ok(f)
    }

    /// Recomputes coefficients, residual and energy from `gram_inv`/`aty`.
    fn fit(&mut self, inst: &ProblemInstance) {
        let k = self.k();
        self.coeffs.resize(k, 0.0);
        symv(&self.gram_inv, k, &self.aty, &mut self.coeffs);
        self.residual.clear();
        self.residual.extend_from_slice(inst.y());
        for (&j, &x) in self.ones.iter().zip(&self.coeffs) {
            axpy(-x, inst.column(j), &mut self.residual);
        }
        self.energy = 0.5 * dot(&self.residual, &self.residual);
    }
}

/// Writes into `dst` the factors of `src` with position `p` removed.
/// Leaves the fit (coeffs, residual, energy) stale.
fn delete_into(src: &Factors, p: usize, dst: &mut Factors) -> Result<(), GramError> {
    let k = src.k();
    let pivot = src.gram_inv[p * k + p];
    if !(pivot.abs() >= SINGULAR_TOL) {
        return Err(GramError::Degenerate {
            index: src.ones[p],
            pivot,
        });
    }
    let nk = k - 1;
    // New position a reads old position `old(a)`; the old last slot fills `p`.
    let old = |a: usize| if a == p { k - 1 } else { a };

    dst.ones.clear();
    dst.ones.extend((0..nk).map(|a| src.ones[old(a)]));
    dst.aty.clear();
    dst.aty.extend((0..nk).map(|a| src.aty[old(a)]));
    dst.gram.resize(nk * nk, 0.0);
    dst.gram_inv.resize(nk * nk, 0.0);

    let inv = &src.gram_inv;
    let prow = &inv[p * k..(p + 1) * k];
    for a in 0..nk {
        let oa = old(a);
        let ua = prow[oa];
        let src_g = &src.gram[oa * k..(oa + 1) * k];
        let src_i = &inv[oa * k..(oa + 1) * k];
        for b in 0..=a {
            let ob = old(b);
            let g = src_g[ob];
            let v = src_i[ob] - (ua * prow[ob]) / pivot;
            dst.gram[a * nk + b] = g;
            dst.gram[b * nk + a] = g;
            dst.gram_inv[a * nk + b] = v;
            dst.gram_inv[b * nk + a] = v;
        }
    }
    Ok(())
}

/// Writes into `dst` the factors of `src` bordered by column `j`, then fits.
fn add_into(
    inst: &ProblemInstance,
    src: &Factors,
    j: usize,
    dst: &mut Factors,
    g: &mut Vec<f64>,
    w: &mut Vec<f64>,
) -> Result<(), GramError> {
    let k = src.k();
    let nk = k + 1;
    if nk > inst.m() {
        return Err(GramError::InfeasibleSupport { k: nk, m: inst.m() });
    }
    let aj = inst.column(j);
    g.clear();
    g.extend(src.ones.iter().map(|&c| dot(inst.column(c), aj)));
    let gjj = dot(aj, aj);
    w.resize(k, 0.0);
    symv(&src.gram_inv, k, g, w);
    let gamma = gjj - dot(g, w);
    if !(gamma > SINGULAR_TOL) {
        return Err(GramError::Degenerate {
            index: j,
            pivot: gamma,
        });
    }
    let inv_gamma = 1.0 / gamma;

    dst.ones.clear();
    dst.ones.extend_from_slice(&src.ones);
    dst.ones.push(j);
    dst.aty.clear();
    dst.aty.extend_from_slice(&src.aty);
    dst.aty.push(dot(aj, inst.y()));
    dst.gram.resize(nk * nk, 0.0);
    dst.gram_inv.resize(nk * nk, 0.0);

    for a in 0..k {
        let row_g = &mut dst.gram[a * nk..(a + 1) * nk];
        row_g[..k].copy_from_slice(&src.gram[a * k..(a + 1) * k]);
        row_g[k] = g[a];
        let wa = w[a];
        let src_i = &src.gram_inv[a * k..(a + 1) * k];
        let row_i = &mut dst.gram_inv[a * nk..(a + 1) * nk];
        for ((d, s), wb) in row_i[..k].iter_mut().zip(src_i).zip(w.iter()) {
            *d = s + wa * wb * inv_gamma;
        }
        row_i[k] = -wa * inv_gamma;
    }
    let last = k * nk;
    dst.gram[last..last + k].copy_from_slice(g);
    dst.gram[last + k] = gjj;
    for b in 0..k {
        dst.gram_inv[last + b] = -w[b] * inv_gamma;
    }
    dst.gram_inv[last + k] = inv_gamma;

    dst.fit(inst);
    Ok(())
}

/// Scratch buffers for probing a pair flip without touching the state.
#[derive(Debug, Clone, Default)]
pub struct FlipWorkspace {
    mid: Factors,
    out: Factors,
    g: Vec<f64>,
    w: Vec<f64>,
    pending: Option<Pending>,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    remove: usize,
    insert: usize,
    generation: u64,
}

impl FlipWorkspace {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Least-squares state of one support vector.
#[derive(Debug, Clone)]
pub struct SupportState<'a> {
    instance: &'a ProblemInstance,
    mask: Vec<bool>,
    /// Position of each index inside `f.ones` or `zeros`.
    slot: Vec<usize>,
    zeros: Vec<usize>,
    f: Factors,
    generation: u64,
    refresh_interval: usize,
    since_refresh: usize,
    refresh_due: bool,
    refreshes: usize,
}

impl<'a> SupportState<'a> {
    /// Factorizes the support `mask` from scratch.
    pub fn new(instance: &'a ProblemInstance, mask: &[bool]) -> Result<Self, GramError> {
        if mask.len() != instance.n() {
            return Err(GramError::MaskLength {
                got: mask.len(),
                expected: instance.n(),
            });
        }
        let ones: Vec<usize> = (0..mask.len()).filter(|&i| mask[i]).collect();
        Self::from_ordered(instance, ones)
    }

    /// Factorizes the support given by `ones`, keeping that ordering.
    pub fn from_indices(instance: &'a ProblemInstance, ones: &[usize]) -> Result<Self, GramError> {
        let n = instance.n();
        let mut seen = vec![false; n];
        for &i in ones {
            if i >= n || seen[i] {
                return Err(GramError::InvalidIndex { index: i });
            }
            seen[i] = true;
        }
        Self::from_ordered(instance, ones.to_vec())
    }

    fn from_ordered(instance: &'a ProblemInstance, ones: Vec<usize>) -> Result<Self, GramError> {
        let n = instance.n();
        let f = Factors::factorize(instance, ones)?;
        let mut mask = vec![false; n];
        let mut slot = vec![0; n];
        for (p, &i) in f.ones.iter().enumerate() {
            mask[i] = true;
            slot[i] = p;
        }
        let mut zeros = Vec::with_capacity(n - f.k());
        for i in 0..n {
            if !mask[i] {
                slot[i] = zeros.len();
                zeros.push(i);
            }
        }
        Ok(Self {
            instance,
            mask,
            slot,
            zeros,
            f,
            generation: 0,
            refresh_interval: DEFAULT_REFRESH_INTERVAL,
            since_refresh: 0,
            refresh_due: false,
            refreshes: 0,
        })
    }

    /// Sets the number of committed moves between re-factorizations
    /// (0 disables periodic refresh).
    pub fn with_refresh_interval(mut self, interval: usize) -> Self {
        self.refresh_interval = interval;
        self
    }

    pub fn instance(&self) -> &'a ProblemInstance {
        self.instance
    }

    /// Support size `K`.
    pub fn k(&self) -> usize {
        self.f.k()
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Active indices, in the order used by the cached matrices.
    pub fn ones(&self) -> &[usize] {
        &self.f.ones
    }

    pub fn zeros(&self) -> &[usize] {
        &self.zeros
    }

    /// `Ã^T Ã`, packed row-major in the order of [`Self::ones`].
    pub fn gram(&self) -> &[f64] {
        &self.f.gram
    }

    pub fn gram_inv(&self) -> &[f64] {
        &self.f.gram_inv
    }

    pub fn aty(&self) -> &[f64] {
        &self.f.aty
    }

    /// Restricted coefficients, aligned with [`Self::ones`].
    pub fn coeffs(&self) -> &[f64] {
        &self.f.coeffs
    }

    pub fn residual(&self) -> &[f64] {
        &self.f.residual
    }

    /// `E(c) = ½‖y − Ã x̃‖²`.
    pub fn energy(&self) -> f64 {
        self.f.energy
    }

    /// Intensive distortion `E / M`.
    pub fn distortion(&self) -> f64 {
        self.f.energy / self.instance.m() as f64
    }

    /// Length-N coefficient vector with zeros off the support.
    pub fn full_coefficients(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.instance.n()];
        for (&i, &v) in self.f.ones.iter().zip(&self.f.coeffs) {
            x[i] = v;
        }
        x
    }

    /// Number of full re-factorizations performed so far.
    pub fn refresh_count(&self) -> usize {
        self.refreshes
    }

    pub fn refresh_due(&self) -> bool {
        self.refresh_due
    }

    /// Schedules a re-factorization for the next [`Self::maintain`].
    pub fn request_refresh(&mut self) {
        self.refresh_due = true;
    }

    /// Re-factorizes if a refresh is due.
    pub fn maintain(&mut self) -> Result<(), GramError> {
        if self.refresh_due {
            self.refresh()?;
        }
        Ok(())
    }

    /// Recomputes every cache from scratch, keeping the current ordering.
    pub fn refresh(&mut self) -> Result<(), GramError> {
        self.f = Factors::factorize(self.instance, std::mem::take(&mut self.f.ones))?;
        self.refresh_due = false;
        self.since_refresh = 0;
        self.refreshes += 1;
        self.generation += 1;
        Ok(())
    }

    fn record_commit(&mut self) {
        self.generation += 1;
        self.since_refresh += 1;
        if self.refresh_interval > 0 && self.since_refresh >= self.refresh_interval {
            self.refresh_due = true;
        }
    }

    fn check_active(&self, i: usize) -> Result<usize, GramError> {
        if i < self.mask.len() && self.mask[i] {
            Ok(self.slot[i])
        } else {
            Err(GramError::InvalidIndex { index: i })
        }
    }

    fn check_inactive(&self, j: usize) -> Result<usize, GramError> {
        if j < self.mask.len() && !self.mask[j] {
            Ok(self.slot[j])
        } else {
            Err(GramError::InvalidIndex { index: j })
        }
    }

    /// Removes active column `i`. The state is unchanged on error.
    pub fn delete_column(&mut self, i: usize) -> Result<(), GramError> {
        let p = self.check_active(i)?;
        let mut next = Factors::default();
        delete_into(&self.f, p, &mut next)?;
        next.fit(self.instance);
        self.f = next;
        if p < self.f.k() {
            self.slot[self.f.ones[p]] = p;
        }
        self.mask[i] = false;
        self.slot[i] = self.zeros.len();
        self.zeros.push(i);
        self.record_commit();
        Ok(())
    }

    /// Adds inactive column `j`. The state is unchanged on error.
    pub fn add_column(&mut self, j: usize) -> Result<(), GramError> {
        let q = self.check_inactive(j)?;
        let mut next = Factors::default();
        let (mut g, mut w) = (Vec::new(), Vec::new());
        add_into(self.instance, &self.f, j, &mut next, &mut g, &mut w)?;
        self.f = next;
        self.zeros.swap_remove(q);
        if q < self.zeros.len() {
            self.slot[self.zeros[q]] = q;
        }
        self.mask[j] = true;
        self.slot[j] = self.f.k() - 1;
        self.record_commit();
        Ok(())
    }

    /// Energy after swapping active `i` for inactive `j`, leaving `self`
    /// untouched. The candidate factors stay in `ws` for
    /// [`Self::commit_probed`].
    pub fn probe_pair_flip_with(
        &self,
        i: usize,
        j: usize,
        ws: &mut FlipWorkspace,
    ) -> Result<f64, GramError> {
        ws.pending = None;
        let p = self.check_active(i)?;
        self.check_inactive(j)?;
        delete_into(&self.f, p, &mut ws.mid)?;
        add_into(self.instance, &ws.mid, j, &mut ws.out, &mut ws.g, &mut ws.w)?;
        ws.pending = Some(Pending {
            remove: i,
            insert: j,
            generation: self.generation,
        });
        Ok(ws.out.energy)
    }

    /// As [`Self::probe_pair_flip_with`] with a throwaway workspace.
    pub fn probe_pair_flip(&self, i: usize, j: usize) -> Result<f64, GramError> {
        self.probe_pair_flip_with(i, j, &mut FlipWorkspace::new())
    }

    /// Adopts the flip last probed into `ws`. The new energy is exactly the
    /// probed value.
    ///
    /// # Panics
    /// If `ws` holds no probe of the current state.
    pub fn commit_probed(&mut self, ws: &mut FlipWorkspace) {
        let pending = ws.pending.take().expect("no pending pair flip in workspace");
        assert_eq!(
            pending.generation, self.generation,
            "pair flip was probed against a different state"
        );
        let (i, j) = (pending.remove, pending.insert);
        let p = self.slot[i];
        let q = self.slot[j];
        std::mem::swap(&mut self.f, &mut ws.out);
        let k = self.f.k();
        if p < k - 1 {
            self.slot[self.f.ones[p]] = p;
        }
        self.slot[j] = k - 1;
        self.zeros[q] = i;
        self.slot[i] = q;
        self.mask[i] = false;
        self.mask[j] = true;
        self.record_commit();
    }

    /// Probes and commits the flip `i -> j`, returning the new energy.
    /// Performs any due refresh first.
    pub fn commit_pair_flip(&mut self, i: usize, j: usize) -> Result<f64, GramError> {
        self.maintain()?;
        let mut ws = FlipWorkspace::new();
        let e = self.probe_pair_flip_with(i, j, &mut ws)?;
        self.commit_probed(&mut ws);
        Ok(e)
    }
}
