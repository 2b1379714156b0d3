//! Line spectral estimation with tunable state-space filter banks.
//!
//! The classical approach recovers frequencies of a noisy cisoid mixture by
//! minimizing an atomic norm whose atoms are Fourier vectors; the covariance
//! certificate is a Hermitian Toeplitz matrix. This crate generalizes the
//! atoms to the transfer vectors `G(e^{iθ}) = (e^{iθ}I − A)⁻¹b` of a stable
//! single-input filter bank, which lets a designed filter concentrate
//! resolution inside a frequency band of interest.
//!
//! Pipeline:
//!
//! 1. [`gfilter`] — build the filter bank (repeated-pole all-pass cascade)
//!    and push the raw record through it, keeping one settled state vector.
//! 2. [`structcov`] — the linear subspace of structured covariances
//!    `(I−Π_b)(Σ − AΣA*)(I−Π_b) = 0` that generalizes "Hermitian Toeplitz".
//! 3. [`conic`] — ADMM solver for the semidefinite programs that evaluate
//!    the atomic norm (noiseless) and its regularized denoising variant.
//! 4. [`cfd`] — rank detection and frequency extraction from the optimal
//!    covariance via a Carathéodory–Fejér-type decomposition.
//! 5. [`estimator`] — the end-to-end pipeline plus the standard-ANM
//!    baseline (delay bank, Toeplitz covariance) as a special case.
//! 6. [`bench`] — reproducible Monte Carlo comparison harness with CSV and
//!    SVG outputs.

pub mod bench;
pub mod cfd;
pub mod conic;
pub mod error;
pub mod estimator;
pub mod gfilter;
mod herm;
pub mod io;
pub mod nnls;
pub mod structcov;
mod svg;

pub use cfd::{cf_decompose, dbar_curve, numerical_rank, LineEstimate, RankRule};
pub use conic::{
    kkt_report, psd_project, solve_noiseless, solve_regularized, AnmProblem, AnmSolution,
    KktReport, SolverSettings,
};
pub use error::{Error, Result};
pub use estimator::{
    estimate_frequencies, estimate_noise_variance, recover_amplitudes, select_lambda, standard_anm,
    Estimate, Estimator, EstimatorConfig, LambdaMode,
};
pub use gfilter::{FilterOutput, GFilter, SETTLE_EPS};
pub use structcov::{constraint_residual, subspace_basis, StructuredSubspace};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = DMatrix<Complex64>;
/// Dense complex vector used throughout the crate.
pub type CVector = DVector<Complex64>;
