mod common;

use common::*;
use sparse_anneal::omp::run_omp_k;
use sparse_anneal::run_omp;

#[test]
fn single_selection_is_best_normalized_correlation() {
    for seed in 0..20 {
        let inst = planted(50, 0.5, 0.2, 0.5, seed);
        let out = run_omp_k(&inst, 1).unwrap();
        let best = (0..50)
            .max_by(|&a, &b| {
                let score = |j: usize| {
                    let c = inst.column(j);
                    let dot: f64 = c.iter().zip(inst.y()).map(|(x, y)| x * y).sum();
                    dot.abs() / c.iter().map(|x| x * x).sum::<f64>().sqrt()
                };
                score(a).total_cmp(&score(b))
            })
            .unwrap();
        assert_eq!(out.order, vec![best]);
        let brute = (0..50).map(|j| dense_energy(&inst, &[j])).fold(f64::INFINITY, f64::min);
        assert!((out.eps * inst.m() as f64 - brute).abs() < 1e-10 * brute);
    }
}

#[test]
fn noiseless_recovery_of_planted_support() {
    let inst = planted(200, 0.5, 0.05, 0.0, 3);
    let k = inst.planted_count();
    let out = run_omp_k(&inst, k).unwrap();
    assert_eq!(out.mask, inst.planted_support());
    assert!(out.eps < 1e-20);
    assert!(sparse_anneal::harness::mse(&inst, &out.mask, &out.coeffs) < 1e-20);
}

#[test]
fn path_is_monotone_and_size_exact() {
    let inst = planted(100, 0.5, 0.2, 1.0, 4);
    let out = run_omp(&inst, 0.2).unwrap();
    assert_eq!(out.mask.iter().filter(|&&b| b).count(), 20);
    assert_eq!(out.eps_path.len(), 21);
    for w in out.eps_path.windows(2) {
        assert!(w[1] <= w[0] + 1e-15);
    }
    let ones: Vec<usize> = (0..100).filter(|&i| out.mask[i]).collect();
    let want = dense_energy(&inst, &ones) / inst.m() as f64;
    assert!((out.eps - want).abs() < 1e-10 * want);
}
