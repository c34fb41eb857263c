//! Reconstruction error and sample statistics.

use crate::gram_cache::SupportState;
use crate::instance::ProblemInstance;

/// `(1/N) Σ_i (x̂_i − c_i x_i)²` for a full-length `coeffs` (zeros off the
/// support are enforced through `mask`).
pub fn mse(instance: &ProblemInstance, mask: &[bool], coeffs: &[f64]) -> f64 {
    let n = instance.n();
    let total: f64 = instance
        .x_hat()
        .iter()
        .zip(mask)
        .zip(coeffs)
        .map(|((xh, &on), x)| {
            let d = if on { xh - x } else { *xh };
            d * d
        })
        .sum();
    total / n as f64
}

/// MSE of the least-squares fit held by `state`.
pub fn support_mse(state: &SupportState<'_>) -> f64 {
    mse(state.instance(), state.mask(), &state.full_coefficients())
}

/// Mean with the error bar `stddev / √(n − 1)` (population stddev).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    /// Absent for fewer than two values.
    pub err: Option<f64>,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Option<Self> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let err = (n > 1).then(|| {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
            (var / (n - 1) as f64).sqrt()
        });
        Some(Self { mean, err, n })
    }

    /// Population standard deviation.
    pub fn std(values: &[f64]) -> Option<f64> {
        let s = Self::of(values)?;
        Some(
            (values.iter().map(|v| (v - s.mean) * (v - s.mean)).sum::<f64>() / s.n as f64).sqrt(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::ModelParams;

    fn noiseless() -> ProblemInstance {
        ProblemInstance::generate(&ModelParams {
            n: 30,
            alpha: 0.7,
            rho_hat: 0.2,
            sigma_x2: 1.0,
            sigma_xi2: 0.0,
            seed: 4,
        })
        .unwrap()
    }

    #[test]
    fn planted_support_has_zero_mse() {
        let inst = noiseless();
        let st = SupportState::new(&inst, &inst.planted_support()).unwrap();
        let x = st.full_coefficients();
        assert!(mse(&inst, st.mask(), &x) < 1e-20);
        assert!(support_mse(&st) < 1e-20);
    }

    #[test]
    fn empty_support_mse_is_planted_power() {
        let inst = noiseless();
        let want = inst.x_hat().iter().map(|v| v * v).sum::<f64>() / 30.0;
        assert_eq!(mse(&inst, &vec![false; 30], &vec![0.0; 30]), want);
        let st = SupportState::new(&inst, &vec![false; 30]).unwrap();
        assert_eq!(support_mse(&st), want);
    }

    #[test]
    fn summary_error_bar() {
        let s = Summary::of(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        // population variance 1.25, divided by n - 1 = 3
        assert!((s.err.unwrap() - (1.25f64 / 3.0).sqrt()).abs() < 1e-15);
        let one = Summary::of(&[0.7]).unwrap();
        assert_eq!(one.err, None);
        assert!(Summary::of(&[]).is_none());
    }
}
