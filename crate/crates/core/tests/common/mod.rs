//! Dense reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use sparse_anneal::{ModelParams, ProblemInstance};

pub struct DenseFit {
    pub gram: DMatrix<f64>,
    pub gram_inv: DMatrix<f64>,
    pub coeffs: DVector<f64>,
    pub energy: f64,
}

pub fn planted(n: usize, alpha: f64, rho_hat: f64, sigma_xi2: f64, seed: u64) -> ProblemInstance {
    ProblemInstance::generate(&ModelParams {
        n,
        alpha,
        rho_hat,
        sigma_x2: 1.0,
        sigma_xi2,
        seed,
    })
    .unwrap()
}

pub fn submatrix(inst: &ProblemInstance, ones: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(inst.m(), ones.len(), |r, c| inst.a(r, ones[c]))
}

/// Least squares on the columns `ones` via an SVD solve, independent of the
/// library's Cholesky path.
pub fn dense_fit(inst: &ProblemInstance, ones: &[usize]) -> DenseFit {
    let a = submatrix(inst, ones);
    let y = DVector::from_column_slice(inst.y());
    let gram = a.transpose() * &a;
    let gram_inv = gram.clone().try_inverse().expect("support is full rank");
    let coeffs = if ones.is_empty() {
        DVector::zeros(0)
    } else {
        a.clone().svd(true, true).solve(&y, 1e-14).unwrap()
    };
    let r = &y - &a * &coeffs;
    DenseFit {
        gram,
        gram_inv,
        coeffs,
        energy: 0.5 * r.norm_squared(),
    }
}

pub fn dense_energy(inst: &ProblemInstance, ones: &[usize]) -> f64 {
    dense_fit(inst, ones).energy
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Max-norm relative error of `got` against `want`.
pub fn rel_err(got: &[f64], want: &[f64]) -> f64 {
    max_abs_diff(got, want) / max_abs(want).max(f64::MIN_POSITIVE)
}

/// Row-major entries of a square nalgebra matrix.
pub fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// All `k`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(k);
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=n - (k - cur.len()) {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

pub fn mask_of(n: usize, ones: &[usize]) -> Vec<bool> {
    let mut m = vec![false; n];
    for &i in ones {
        m[i] = true;
    }
    m
}
