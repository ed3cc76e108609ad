//! Small dense complex kernels on column-major slices.

use nalgebra::DMatrix;
use num_complex::Complex64;

#[inline(always)]
fn axpy(alpha: Complex64, x: &[Complex64], y: &mut [Complex64]) {
    let (ar, ai) = (alpha.re, alpha.im);
    for (yi, xi) in y.iter_mut().zip(x) {
        yi.re += ar * xi.re - ai * xi.im;
        yi.im += ar * xi.im + ai * xi.re;
    }
}

/// `c = a * b` with `a: m×r`, `b: r×n`, `c: m×n`.
pub(crate) fn gemm_nn(m: usize, r: usize, a: &[Complex64], b: &[Complex64], c: &mut [Complex64]) {
    debug_assert_eq!(a.len(), m * r);
    let n = if r == 0 { 0 } else { b.len() / r };
    debug_assert_eq!(c.len(), m * n);
    c.fill(Complex64::new(0.0, 0.0));
    for (bj, cj) in b.chunks_exact(r).zip(c.chunks_exact_mut(m)) {
        for (q, &bq) in bj.iter().enumerate() {
            if bq.re != 0.0 || bq.im != 0.0 {
                axpy(bq, &a[q * m..(q + 1) * m], cj);
            }
        }
    }
}

/// `c = a^H * b` with `a: m×r`, `b: m×n`, `c: r×n`.
pub(crate) fn gemm_hn(m: usize, r: usize, a: &[Complex64], b: &[Complex64], c: &mut [Complex64]) {
    debug_assert_eq!(a.len(), m * r);
    for (bj, cj) in b.chunks_exact(m).zip(c.chunks_exact_mut(r)) {
        for (q, cq) in cj.iter_mut().enumerate() {
            let aq = &a[q * m..(q + 1) * m];
            let (mut re, mut im) = (0.0, 0.0);
            for (x, y) in aq.iter().zip(bj) {
                // conj(x) * y
                re += x.re * y.re + x.im * y.im;
                im += x.re * y.im - x.im * y.re;
            }
            *cq = Complex64::new(re, im);
        }
    }
}

/// `c += a * b^H` with `a: m×n`, `b: r×n`, `c: m×r`.
pub(crate) fn gemm_nh_acc(
    m: usize,
    r: usize,
    a: &[Complex64],
    b: &[Complex64],
    c: &mut [Complex64],
) {
    debug_assert_eq!(c.len(), m * r);
    for (aj, bj) in a.chunks_exact(m).zip(b.chunks_exact(r)) {
        for (q, &bq) in bj.iter().enumerate() {
            if bq.re != 0.0 || bq.im != 0.0 {
                axpy(bq.conj(), aj, &mut c[q * m..(q + 1) * m]);
            }
        }
    }
}

pub(crate) fn to_matrix(rows: usize, cols: usize, data: &[Complex64]) -> DMatrix<Complex64> {
    DMatrix::from_column_slice(rows, cols, data)
}

/// Largest eigenvalue of `a^H a` for an `m×r` block, i.e. its squared
/// spectral norm.
pub(crate) fn spectral_norm_sq(m: usize, r: usize, a: &[Complex64]) -> f64 {
    let mat = to_matrix(m, r, a);
    let gram = if m <= r {
        &mat * mat.adjoint()
    } else {
        mat.adjoint() * &mat
    };
    gram.symmetric_eigenvalues()
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v))
}

/// Frobenius norm of `a^H a` for an `m×r` block.
pub(crate) fn gram_fro_norm(m: usize, r: usize, a: &[Complex64]) -> f64 {
    let mat = to_matrix(m, r, a);
    (mat.adjoint() * &mat).norm()
}
