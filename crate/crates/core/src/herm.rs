//! Helpers for the real vector space of Hermitian matrices.
//!
//! The inner product throughout is `⟨X, Y⟩ = Re trace(X Y*)`, which equals
//! the real Frobenius inner product entrywise. `to_real_coords` is an
//! isometry onto ℝ^{n²}: diagonal entries first, then √2-scaled real and
//! imaginary parts of the strict upper triangle.

use crate::CMatrix;
use nalgebra::DVector;
use num_complex::Complex64;

pub(crate) const SQRT_2: f64 = std::f64::consts::SQRT_2;

pub(crate) fn herm_inner(x: &CMatrix, y: &CMatrix) -> f64 {
    debug_assert_eq!(x.shape(), y.shape());
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| a.re * b.re + a.im * b.im)
        .sum()
}

pub(crate) fn symmetrize(m: &CMatrix) -> CMatrix {
    let half = Complex64::new(0.5, 0.0);
    (m + m.adjoint()) * half
}

pub(crate) fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Largest entry of `M − M*`, zero iff `M` is exactly Hermitian.
pub(crate) fn hermitian_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub(crate) fn to_real_coords(m: &CMatrix) -> DVector<f64> {
    let n = m.nrows();
    let mut v = DVector::<f64>::zeros(n * n);
    for i in 0..n {
        v[i] = m[(i, i)].re;
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            v[k] = SQRT_2 * m[(i, j)].re;
            v[k + 1] = SQRT_2 * m[(i, j)].im;
            k += 2;
        }
    }
    v
}

pub(crate) fn from_real_coords(v: &DVector<f64>, n: usize) -> CMatrix {
    debug_assert_eq!(v.len(), n * n);
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = Complex64::new(v[i], 0.0);
    }
    let mut k = n;
    for i in 0..n {
        for j in (i + 1)..n {
            let z = Complex64::new(v[k] / SQRT_2, v[k + 1] / SQRT_2);
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
            k += 2;
        }
    }
    m
}
