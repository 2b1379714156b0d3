//! State-space filter banks `x(t+1) = A x(t) + b y(t)` with stable,
//! reachable `(A, b)` and the co-isometry normalization `AA* + bb* = I`.
//!
//! The transfer vector `G(z) = (zI − A)⁻¹ b` evaluated on the unit circle
//! supplies the atoms for everything downstream: a designed filter has one
//! repeated pole `p = ρ e^{iφ}`, giving a gain `‖G(e^{iθ})‖²` that peaks at
//! `θ = φ`, while `p = 0` degenerates to the plain delay bank whose atoms
//! are Fourier vectors.

use crate::error::{Error, Result};
use crate::herm::max_abs_entry;
use crate::{CMatrix, CVector};
use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::f64::consts::TAU;

/// Default transient threshold ε for discarding filter outputs.
pub const SETTLE_EPS: f64 = 1e-3;

/// Single-input filter bank with stable, reachable `(A, b)`.
#[derive(Clone, Debug)]
pub struct GFilter {
    n: usize,
    a: CMatrix,
    b: CVector,
    /// Design pole for cascade-built filters; `None` for hand-built pairs.
    pole: Option<Complex64>,
}

/// Result of pushing a finite record through the filter: the single retained
/// state vector plus transient bookkeeping.
#[derive(Clone, Debug)]
pub struct FilterOutput {
    /// Retained state sample `x(L)`.
    pub x: CVector,
    /// Minimal settle length for the default ε ([`SETTLE_EPS`]).
    pub settle_length: usize,
    /// Number of discarded outputs (`L − 1`).
    pub discarded: usize,
    /// Set when the record is too short for the transient to decay below ε.
    pub transient_warning: bool,
}

impl GFilter {
    /// Cascade of `n` identical first-order all-pass sections with pole `p`.
    ///
    /// With `η = √(1−|p|²)` the section map `[[p, η], [η, −p̄]]` is unitary,
    /// so the cascade satisfies `AA* + bb* = I` exactly in exact arithmetic:
    /// `A` is lower triangular with `A_jj = p`, `A_jk = η²(−p̄)^{j−k−1}` for
    /// `j > k`, and `b_j = η(−p̄)^{j−1}`. At `p = 0` this is the delay bank
    /// with transfer components `z⁻¹, …, z⁻ⁿ`.
    pub fn allpass_cascade(pole: Complex64, n: usize) -> Result<GFilter> {
        if pole.norm() >= 1.0 {
            return Err(Error::InvalidPole(pole.norm()));
        }
        if n == 0 {
            return Err(Error::InvalidSize);
        }
        let eta = (1.0 - pole.norm_sqr()).sqrt();
        let neg_pbar = -pole.conj();
        // powers of (−p̄), index 0..n
        let mut pw = Vec::with_capacity(n);
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            pw.push(acc);
            acc *= neg_pbar;
        }
        let mut a = CMatrix::zeros(n, n);
        let mut b = CVector::zeros(n);
        for j in 0..n {
            a[(j, j)] = pole;
            for k in 0..j {
                a[(j, k)] = pw[j - k - 1] * (eta * eta);
            }
            b[j] = pw[j] * eta;
        }
        Ok(GFilter {
            n,
            a,
            b,
            pole: Some(pole),
        })
    }

    /// Band-selecting design: pole phase at the band midpoint, radius chosen
    /// by bisection so the squared gain at the band edges is half the
    /// squared gain at the midpoint.
    ///
    /// Very wide bands still admit a solution; as the band approaches the
    /// full circle the radius tends to `3 − 2√2 ≈ 0.172`, i.e. the design
    /// degrades gracefully toward a near-delay bank rather than failing.
    pub fn band_design(theta_lo: f64, theta_hi: f64, n: usize) -> Result<GFilter> {
        if !(0.0 <= theta_lo && theta_lo < theta_hi && theta_hi < TAU) {
            return Err(Error::InvalidBand {
                lo: theta_lo,
                hi: theta_hi,
            });
        }
        if n == 0 {
            return Err(Error::InvalidSize);
        }
        let phi = 0.5 * (theta_lo + theta_hi);
        let (mut lo, mut hi) = (1e-6, 1.0 - 1e-6);
        // Half-power defect at radius ρ; positive when the edge gain is
        // still above half the center gain.
        let defect = |rho: f64| -> Result<f64> {
            let f = GFilter::allpass_cascade(Complex64::from_polar(rho, phi), n)?;
            Ok(f.gain(theta_lo) - 0.5 * f.gain(phi))
        };
        let (d_lo, d_hi) = (defect(lo)?, defect(hi)?);
        if d_lo <= 0.0 || d_hi >= 0.0 {
            return Err(Error::DesignInfeasible { lo, hi });
        }
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if defect(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        GFilter::allpass_cascade(Complex64::from_polar(0.5 * (lo + hi), phi), n)
    }

    /// Build from an explicit `(A, b)` pair, validating stability and
    /// reachability. The co-isometry normalization is not required here;
    /// it is a property of designed filters only.
    pub fn from_parts(a: CMatrix, b: CVector) -> Result<GFilter> {
        let n = a.nrows();
        if n == 0 {
            return Err(Error::InvalidSize);
        }
        if a.ncols() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: a.ncols(),
            });
        }
        if b.len() != n {
            return Err(Error::ShapeMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let filter = GFilter {
            n,
            a,
            b,
            pole: None,
        };
        let rho = filter.spectral_radius();
        if rho >= 1.0 || rho.is_nan() {
            return Err(Error::InvalidPole(rho));
        }
        if !filter.is_reachable() {
            return Err(Error::InvalidParameter(
                "(A, b) is not a reachable pair".into(),
            ));
        }
        Ok(filter)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn state_matrix(&self) -> &CMatrix {
        &self.a
    }

    pub fn input_vector(&self) -> &CVector {
        &self.b
    }

    pub fn pole(&self) -> Option<Complex64> {
        self.pole
    }

    /// True when the filter is (exactly) the zero-pole delay bank.
    pub fn is_delay_bank(&self) -> bool {
        self.pole == Some(Complex64::new(0.0, 0.0))
    }

    /// Eigenvalues of `A`. Triangular matrices (every designed cascade)
    /// read the diagonal exactly; QR iteration would scatter a repeated
    /// defective eigenvalue by `ε^{1/n}`.
    fn state_eigenvalues(&self) -> Option<Vec<Complex64>> {
        let diag = |m: &CMatrix| (0..self.n).map(|i| m[(i, i)]).collect();
        let lower = (0..self.n).all(|i| ((i + 1)..self.n).all(|j| self.a[(i, j)].norm() == 0.0));
        if lower {
            return Some(diag(&self.a));
        }
        let upper = (0..self.n).all(|j| ((j + 1)..self.n).all(|i| self.a[(i, j)].norm() == 0.0));
        if upper {
            return Some(diag(&self.a));
        }
        self.a.clone().try_schur(1e-12, 100_000).map(|schur| {
            let (_, t) = schur.unpack();
            diag(&t)
        })
    }

    /// Spectral radius of `A`.
    pub fn spectral_radius(&self) -> f64 {
        match self.state_eigenvalues() {
            Some(eigs) => eigs.iter().map(|z| z.norm()).fold(0.0, f64::max),
            // Schur did not converge (pathological input); fall back to a
            // norm-based overestimate ‖A^64‖^(1/64).
            None => {
                let mut m = self.a.clone();
                for _ in 0..6 {
                    m = &m * &m;
                }
                spectral_norm(&m).powf(1.0 / 64.0)
            }
        }
    }

    /// Rank of the controllability matrix `[b, Ab, …, A^{n−1}b]`.
    ///
    /// The Krylov matrix is exponentially ill-conditioned in `n`, so this is
    /// only meaningful for small sizes; [`GFilter::is_reachable`] is the
    /// robust check.
    pub fn controllability_rank(&self) -> usize {
        let mut ctrl = CMatrix::zeros(self.n, self.n);
        let mut col = self.b.clone();
        for k in 0..self.n {
            ctrl.set_column(k, &col);
            col = &self.a * col;
        }
        let svd = ctrl.svd(false, false);
        let smax = svd.singular_values[0];
        svd.singular_values
            .iter()
            .filter(|&&s| s > 1e-10 * smax)
            .count()
    }

    /// Reachability of `(A, b)` by the eigenvector test: no left eigenvector
    /// of `A` is orthogonal to `b`, i.e. `[A − λI, b]` has full row rank at
    /// every eigenvalue λ. Equivalent to the controllability-matrix rank
    /// condition but numerically well-posed for any `n`.
    pub fn is_reachable(&self) -> bool {
        let eigenvalues = match self.state_eigenvalues() {
            Some(eigs) => eigs,
            // eigenvalues unavailable; the Kalman test is all that is left
            None => return self.controllability_rank() == self.n,
        };
        let scale = spectral_norm(&self.a).max(self.b.norm()).max(1e-300);
        for lambda in eigenvalues {
            let mut pencil = CMatrix::zeros(self.n, self.n + 1);
            let mut shifted = self.a.clone();
            for i in 0..self.n {
                shifted[(i, i)] -= lambda;
            }
            pencil
                .view_mut((0, 0), (self.n, self.n))
                .copy_from(&shifted);
            pencil.set_column(self.n, &self.b);
            let svd = pencil.svd(false, false);
            let smin = svd
                .singular_values
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if smin <= 1e-10 * scale {
                return false;
            }
        }
        true
    }

    /// Largest entry of `AA* + bb* − I`; near zero for designed filters.
    pub fn coisometry_defect(&self) -> f64 {
        let mut m = &self.a * self.a.adjoint();
        m += &self.b * self.b.adjoint();
        for i in 0..self.n {
            m[(i, i)] -= Complex64::new(1.0, 0.0);
        }
        max_abs_entry(&m)
    }

    /// Transfer vector `G(e^{iθ}) = (e^{iθ}I − A)⁻¹ b` via a backward-stable
    /// linear solve. The system is nonsingular since ρ(A) < 1. The delay
    /// bank short-circuits to its closed form `e^{−ikθ}`.
    pub fn transfer(&self, theta: f64) -> CVector {
        if self.is_delay_bank() {
            return CVector::from_fn(self.n, |k, _| {
                Complex64::from_polar(1.0, -theta * (k as f64 + 1.0))
            });
        }
        let z = Complex64::from_polar(1.0, theta);
        let mut m = -self.a.clone();
        for i in 0..self.n {
            m[(i, i)] += z;
        }
        m.lu()
            .solve(&self.b)
            .expect("e^{iθ}I − A is nonsingular for a stable filter")
    }

    /// Squared gain `‖G(e^{iθ})‖²`.
    pub fn gain(&self, theta: f64) -> f64 {
        self.transfer(theta).norm_squared()
    }

    /// Gain samples on a uniform grid over `[0, 2π)`.
    pub fn gain_curve(&self, grid_size: usize) -> Vec<(f64, f64)> {
        (0..grid_size)
            .map(|j| {
                let theta = TAU * j as f64 / grid_size as f64;
                (theta, self.gain(theta))
            })
            .collect()
    }

    /// Minimal `k ≥ 0` with spectral norm `‖A^k‖₂ < eps`.
    pub fn settle_length(&self, eps: f64) -> usize {
        assert!(eps > 0.0, "settle threshold must be positive");
        let mut m = CMatrix::identity(self.n, self.n);
        let mut k = 0usize;
        while spectral_norm(&m) >= eps {
            m = &self.a * m;
            k += 1;
            assert!(
                k < 1_000_000,
                "settle length did not terminate; is ρ(A) < 1?"
            );
        }
        k
    }

    /// Run the recursion `x(t+1) = A x(t) + b y(t)` from `x(0) = 0` over the
    /// whole record and keep the single final state `x(L)`, discarding the
    /// `L − 1` intermediate outputs. A record too short for the transient to
    /// decay below [`SETTLE_EPS`] sets `transient_warning` rather than
    /// failing.
    pub fn filter_signal(&self, y: &[Complex64]) -> Result<FilterOutput> {
        if y.is_empty() {
            return Err(Error::EmptySignal);
        }
        let mut x = CVector::zeros(self.n);
        for &sample in y {
            x = &self.a * x + &self.b * sample;
        }
        let settle = self.settle_length(SETTLE_EPS);
        Ok(FilterOutput {
            x,
            settle_length: settle,
            discarded: y.len() - 1,
            transient_warning: settle > y.len() - 1,
        })
    }
}

/// Spectral norm (largest singular value).
pub(crate) fn spectral_norm(m: &CMatrix) -> f64 {
    m.clone().svd(false, false).singular_values[0]
}

// Designed filters serialize as {n, pole}; hand-built pairs as raw {a, b}
// nested arrays of {re, im}.
#[derive(Serialize, Deserialize)]
struct GFilterRepr {
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pole: Option<crate::io::ComplexRepr>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    a: Option<Vec<Vec<crate::io::ComplexRepr>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    b: Option<Vec<crate::io::ComplexRepr>>,
}

impl Serialize for GFilter {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self.pole {
            Some(p) => GFilterRepr {
                n: self.n,
                pole: Some(p.into()),
                a: None,
                b: None,
            },
            None => GFilterRepr {
                n: self.n,
                pole: None,
                a: Some(crate::io::matrix_to_repr(&self.a)),
                b: Some(self.b.iter().map(|&z| z.into()).collect()),
            },
        };
        repr.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GFilter {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = GFilterRepr::deserialize(deserializer)?;
        match (repr.pole, repr.a, repr.b) {
            (Some(p), None, None) => {
                GFilter::allpass_cascade(p.into(), repr.n).map_err(D::Error::custom)
            }
            (None, Some(a), Some(b)) => {
                let a = crate::io::matrix_from_repr(&a).map_err(D::Error::custom)?;
                let b = CVector::from_iterator(b.len(), b.into_iter().map(Complex64::from));
                let filter = GFilter::from_parts(a, b).map_err(D::Error::custom)?;
                if filter.n != repr.n {
                    return Err(D::Error::custom(format!(
                        "declared size {} does not match matrix size {}",
                        repr.n, filter.n
                    )));
                }
                Ok(filter)
            }
            _ => Err(D::Error::custom(
                "filter JSON needs either a pole or a raw (a, b) pair",
            )),
        }
    }
}
