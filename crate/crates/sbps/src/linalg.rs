//! Small dense linear-algebra helpers for low-dimensional problems
//! (regression systems, Laplace Hessians, preconditioners).
//!
//! Matrices are row-major `Vec<f64>` slices; nothing here is tuned for
//! dimensions beyond a few hundred.

/// Dot product.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Euclidean norm.
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Matrix-vector product for a row-major `n x n` matrix.
pub fn matvec(a: &[f64], x: &[f64], n: usize) -> Vec<f64> {
    debug_assert_eq!(a.len(), n * n);
    (0..n).map(|i| dot(&a[i * n..(i + 1) * n], x)).collect()
}

/// Cholesky factorization `A = L L^T` of a symmetric positive-definite
/// matrix. Returns the lower factor row-major, or `None` if a pivot is
/// not strictly positive.
pub fn cholesky(a: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return None;
                }
                l[i * n + j] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

/// Solves `A x = b` given the Cholesky factor `L` of `A`.
pub fn chol_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    // forward: L y = b
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    // backward: L^T x = y
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// Solves the upper-triangular system `L^T x = b`.
pub fn chol_lt_solve(l: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * x[k];
        }
        x[i] = s / l[i * n + i];
    }
    x
}

/// `log det A` from the Cholesky factor of `A`.
pub fn chol_logdet(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| l[i * n + i].ln()).sum::<f64>() * 2.0
}

/// Solves the 2x2 symmetric system `A x = b` and returns `(x, A^{-1})`.
/// `None` when the determinant vanishes numerically.
pub fn solve_sym2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<([f64; 2], [[f64; 2]; 2])> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    if det.abs() < 1e-300 || !det.is_finite() {
        return None;
    }
    let inv = [
        [a[1][1] / det, -a[0][1] / det],
        [-a[1][0] / det, a[0][0] / det],
    ];
    let x = [
        inv[0][0] * b[0] + inv[0][1] * b[1],
        inv[1][0] * b[0] + inv[1][1] * b[1],
    ];
    Some((x, inv))
}

/// Direction of the largest eigenvalue of a symmetric PD matrix,
/// by power iteration.
pub fn dominant_eigvec(a: &[f64], n: usize, iters: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    for i in 1..n {
        v[i] = 1.0 / (i as f64 + 2.0);
    }
    for _ in 0..iters {
        let w = matvec(a, &v, n);
        let nw = norm(&w);
        if nw == 0.0 {
            break;
        }
        v = w.iter().map(|x| x / nw).collect();
    }
    v
}

/// Direction of the smallest eigenvalue of a symmetric PD matrix,
/// by inverse iteration through its Cholesky factor.
pub fn smallest_eigvec(a: &[f64], n: usize, iters: usize) -> Option<Vec<f64>> {
    let l = cholesky(a, n)?;
    let mut v = vec![0.0; n];
    v[0] = 1.0;
    for i in 1..n {
        v[i] = 1.0 / (i as f64 + 2.0);
    }
    for _ in 0..iters {
        let w = chol_solve(&l, &v, n);
        let nw = norm(&w);
        if nw == 0.0 {
            break;
        }
        v = w.iter().map(|x| x / nw).collect();
    }
    Some(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_roundtrip() {
        let a = vec![4.0, 2.0, 0.5, 2.0, 5.0, 1.0, 0.5, 1.0, 3.0];
        let l = cholesky(&a, 3).unwrap();
        let b = vec![1.0, -2.0, 0.5];
        let x = chol_solve(&l, &b, 3);
        let ax = matvec(&a, &x, 3);
        for (u, v) in ax.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = vec![1.0, 2.0, 2.0, 1.0];
        assert!(cholesky(&a, 2).is_none());
    }

    #[test]
    fn logdet_matches_product() {
        let a = vec![4.0, 2.0, 2.0, 5.0];
        let l = cholesky(&a, 2).unwrap();
        let det: f64 = 4.0 * 5.0 - 4.0;
        assert!((chol_logdet(&l, 2) - det.ln()).abs() < 1e-12);
    }

    #[test]
    fn sym2_inverse() {
        let a = [[3.0, 1.0], [1.0, 2.0]];
        let (x, inv) = solve_sym2(a, [1.0, 0.0]).unwrap();
        assert!((x[0] - 0.4).abs() < 1e-12);
        assert!((x[1] + 0.2).abs() < 1e-12);
        assert!((inv[0][0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn extreme_eigvecs_of_diagonal() {
        let a = vec![9.0, 0.0, 0.0, 1.0];
        let big = dominant_eigvec(&a, 2, 200);
        let small = smallest_eigvec(&a, 2, 200).unwrap();
        assert!(big[0].abs() > 0.999);
        assert!(small[1].abs() > 0.999);
    }
}
