//! Small dense kernels over packed row-major storage.

/// Dot product with four independent accumulators.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let mut ca = a.chunks_exact(4);
    let mut cb = b.chunks_exact(4);
    for (x, y) in (&mut ca).zip(&mut cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut tail = 0.0;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// `y += alpha * x`
#[inline]
pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out = mat * v` for a `k x k` packed matrix.
#[inline]
pub(crate) fn symv(mat: &[f64], k: usize, v: &[f64], out: &mut [f64]) {
    if k == 0 {
        return;
    }
    for (row, o) in mat.chunks_exact(k).zip(out.iter_mut()) {
        *o = dot(row, v);
    }
}

/// Inverse of a symmetric positive definite `k x k` matrix via Cholesky.
///
/// Returns the offending pivot (the Schur complement before the square root)
/// when it falls to `tol` or below. The result is exactly symmetric.
pub(crate) fn spd_inverse(mat: &[f64], k: usize, tol: f64) -> Result<Vec<f64>, f64> {
    // Lower factor L with mat = L L^T.
    let mut l = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let s = mat[i * k + j] - dot(&l[i * k..i * k + j], &l[j * k..j * k + j]);
            if i == j {
                if !(s > tol) {
                    return Err(s);
                }
                l[i * k + i] = s.sqrt();
            } else {
                l[i * k + j] = s / l[j * k + j];
            }
        }
    }
    // W = L^{-1}, lower triangular.
    let mut w = vec![0.0; k * k];
    for col in 0..k {
        w[col * k + col] = 1.0 / l[col * k + col];
        for i in col + 1..k {
            let mut s = 0.0;
            for p in col..i {
                s += l[i * k + p] * w[p * k + col];
            }
            w[i * k + col] = -s / l[i * k + i];
        }
    }
    // mat^{-1} = W^T W.
    let mut inv = vec![0.0; k * k];
    for i in 0..k {
        for j in 0..=i {
            let mut s = 0.0;
            for p in i..k {
                s += w[p * k + i] * w[p * k + j];
            }
            inv[i * k + j] = s;
            inv[j * k + i] = s;
        }
    }
    Ok(inv)
}
