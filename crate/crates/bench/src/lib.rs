//! Shared fixtures for the criterion benchmarks.

use linespec::{CMatrix, CVector, GFilter};
use num_complex::Complex64;

/// The band-selecting filter used throughout the benchmarks.
pub fn bench_filter() -> GFilter {
    GFilter::allpass_cascade(Complex64::from_polar(0.58, 2.0), 20).expect("valid parameters")
}

/// Deterministic pseudo-random Hermitian matrix.
pub fn random_hermitian(n: usize, seed: u64) -> CMatrix {
    let mut s = seed.wrapping_add(1);
    let mut next = move || {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
    };
    let m = CMatrix::from_fn(n, n, |_, _| Complex64::new(next(), next()));
    (&m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

/// Covariance assembled from atom outer products.
pub fn atom_mixture(filter: &GFilter, lines: &[(f64, f64)]) -> CMatrix {
    let n = filter.n();
    let mut sigma = CMatrix::zeros(n, n);
    for &(theta, power) in lines {
        let g = filter.transfer(theta);
        sigma += &g * g.adjoint() * Complex64::new(power, 0.0);
    }
    sigma
}

/// Clean two-atom measurement for solver benchmarks.
pub fn two_atom_measurement(filter: &GFilter) -> CVector {
    filter.transfer(1.9) * Complex64::from_polar(1.0, 0.4)
        + filter.transfer(2.1) * Complex64::from_polar(0.8, 2.0)
}
