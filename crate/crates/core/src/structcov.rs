//! The linear subspace of structured covariance matrices.
//!
//! An output covariance of the filter bank satisfies the equality
//! `(I − Π_b)(Σ − AΣA*)(I − Π_b) = 0` with `Π_b = bb*/(b*b)`. This module
//! represents the solution set of that constraint by an orthonormal basis
//! (under `⟨X, Y⟩ = Re trace(XY*)`), computed as the nullspace of the
//! matricized constraint map. For the delay bank the subspace is exactly
//! the Hermitian Toeplitz matrices, for which an analytic constructor with
//! fast diagonal-sum projections is provided.

use crate::error::{Error, Result};
use crate::gfilter::GFilter;
use crate::herm::{from_real_coords, herm_inner, symmetrize, to_real_coords};
use crate::CMatrix;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Relative singular-value cutoff for the nullspace extraction.
const NULLSPACE_CUTOFF: f64 = 1e-9;

/// Residual of the structural constraint: `(I−Π_b)(Σ − AΣA*)(I−Π_b)`.
///
/// `Σ` is symmetrized on entry; the result is exactly Hermitian.
pub fn constraint_residual(filter: &GFilter, sigma: &CMatrix) -> Result<CMatrix> {
    let n = filter.n();
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: sigma.nrows(),
        });
    }
    let sigma = symmetrize(sigma);
    let a = filter.state_matrix();
    let b = filter.input_vector();
    let stein = &sigma - a * &sigma * a.adjoint();
    // I − bb*/(b*b)
    let scale = Complex64::new(1.0 / b.norm_squared(), 0.0);
    let mut proj = CMatrix::identity(n, n);
    proj -= b * b.adjoint() * scale;
    Ok(symmetrize(&(&proj * stein * &proj)))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    /// Basis discovered numerically from the constraint nullspace.
    Numeric,
    /// Analytic Hermitian Toeplitz basis (delay bank); enables O(n²)
    /// coordinate maps via diagonal sums.
    Toeplitz,
}

/// Orthonormal basis of the structured-covariance subspace.
#[derive(Clone, Debug)]
pub struct StructuredSubspace {
    n: usize,
    basis: Vec<CMatrix>,
    kind: Kind,
}

/// Numerically discover the subspace for an arbitrary filter.
///
/// The constraint map is matricized over the n²-real-dimensional space of
/// Hermitian matrices and its nullspace extracted by SVD; singular values
/// below `1e−9` of the largest are treated as zero.
pub fn subspace_basis(filter: &GFilter) -> StructuredSubspace {
    let n = filter.n();
    let dim = n * n;
    let mut phi = DMatrix::<f64>::zeros(dim, dim);
    for k in 0..dim {
        let mut e = DVector::<f64>::zeros(dim);
        e[k] = 1.0;
        let residual = constraint_residual(filter, &from_real_coords(&e, n))
            .expect("shapes match by construction");
        phi.set_column(k, &to_real_coords(&residual));
    }
    let svd = phi.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s < NULLSPACE_CUTOFF * smax.max(1e-300) {
            let row = v_t.row(i).transpose();
            basis.push(from_real_coords(&row, n));
        }
    }
    StructuredSubspace {
        n,
        basis,
        kind: Kind::Numeric,
    }
}

impl StructuredSubspace {
    /// Analytic subspace for the delay bank: Hermitian Toeplitz matrices,
    /// dimension `2n − 1`.
    pub fn toeplitz(n: usize) -> StructuredSubspace {
        assert!(n >= 1);
        let mut basis = Vec::with_capacity(2 * n - 1);
        let mut t0 = CMatrix::zeros(n, n);
        let d = Complex64::new(1.0 / (n as f64).sqrt(), 0.0);
        for i in 0..n {
            t0[(i, i)] = d;
        }
        basis.push(t0);
        for k in 1..n {
            let w = 1.0 / (2.0 * (n - k) as f64).sqrt();
            let mut re_k = CMatrix::zeros(n, n);
            let mut im_k = CMatrix::zeros(n, n);
            for j in 0..(n - k) {
                re_k[(j, j + k)] = Complex64::new(w, 0.0);
                re_k[(j + k, j)] = Complex64::new(w, 0.0);
                im_k[(j, j + k)] = Complex64::new(0.0, w);
                im_k[(j + k, j)] = Complex64::new(0.0, -w);
            }
            basis.push(re_k);
            basis.push(im_k);
        }
        StructuredSubspace {
            n,
            basis,
            kind: Kind::Toeplitz,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Real dimension of the subspace.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CMatrix] {
        &self.basis
    }

    /// Coordinates `⟨M, B_k⟩` of (the Hermitian part of) `M` in the basis.
    pub fn coords_of(&self, m: &CMatrix) -> DVector<f64> {
        debug_assert_eq!(m.nrows(), self.n);
        match self.kind {
            Kind::Numeric => {
                DVector::from_iterator(self.dim(), self.basis.iter().map(|b| herm_inner(m, b)))
            }
            Kind::Toeplitz => {
                let n = self.n;
                let mut c = DVector::<f64>::zeros(self.dim());
                c[0] = (0..n).map(|i| m[(i, i)].re).sum::<f64>() / (n as f64).sqrt();
                for k in 1..n {
                    let w = 1.0 / (2.0 * (n - k) as f64).sqrt();
                    let mut re_sum = 0.0;
                    let mut im_sum = 0.0;
                    for j in 0..(n - k) {
                        let upper = m[(j, j + k)];
                        let lower = m[(j + k, j)];
                        re_sum += upper.re + lower.re;
                        im_sum += upper.im - lower.im;
                    }
                    c[2 * k - 1] = w * re_sum;
                    c[2 * k] = w * im_sum;
                }
                c
            }
        }
    }

    /// Reassemble `Σ c_k B_k`.
    pub fn assemble(&self, coords: &DVector<f64>) -> CMatrix {
        debug_assert_eq!(coords.len(), self.dim());
        match self.kind {
            Kind::Numeric => {
                let mut m = CMatrix::zeros(self.n, self.n);
                for (b, &c) in self.basis.iter().zip(coords.iter()) {
                    m += b * Complex64::new(c, 0.0);
                }
                m
            }
            Kind::Toeplitz => {
                let n = self.n;
                let mut m = CMatrix::zeros(n, n);
                let d = Complex64::new(coords[0] / (n as f64).sqrt(), 0.0);
                for i in 0..n {
                    m[(i, i)] = d;
                }
                for k in 1..n {
                    let w = 1.0 / (2.0 * (n - k) as f64).sqrt();
                    let z = Complex64::new(coords[2 * k - 1] * w, coords[2 * k] * w);
                    for j in 0..(n - k) {
                        m[(j, j + k)] = z;
                        m[(j + k, j)] = z.conj();
                    }
                }
                m
            }
        }
    }

    /// Orthogonal projection onto the subspace; idempotent and nonexpansive
    /// in Frobenius norm.
    pub fn project(&self, m: &CMatrix) -> Result<CMatrix> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(Error::ShapeMismatch {
                expected: self.n,
                got: m.nrows(),
            });
        }
        Ok(self.assemble(&self.coords_of(m)))
    }

    /// Basis dump for debugging.
    pub fn basis_to_json(&self) -> String {
        let repr: Vec<_> = self.basis.iter().map(crate::io::matrix_to_repr).collect();
        serde_json::to_string(&repr).expect("basis serializes")
    }
}
