//! Frequency extraction from a structured covariance matrix.
//!
//! A positive semidefinite structured covariance of rank `r < n` decomposes
//! uniquely as `Σ = Σ_k ρ_k G(e^{iθ_k}) G*(e^{iθ_k})` with positive weights.
//! The frequencies are recovered from the eigendecomposition: with noise
//! eigenvectors `U` (columns past the numerical rank), the normalized curve
//! `d̄(θ) = ‖U* G(e^{iθ})‖² / ‖G(e^{iθ})‖²` is nonnegative and vanishes
//! exactly at the decomposition frequencies. Solver output is only
//! approximately low-rank, so the minima of `d̄` are used instead of exact
//! roots: a dense grid scan followed by golden-section refinement.

use crate::error::{Error, Result};
use crate::gfilter::GFilter;
use crate::herm::{hermitian_defect, max_abs_entry, symmetrize, to_real_coords};
use crate::nnls::nnls;
use crate::CMatrix;
use nalgebra::DMatrix;
use std::f64::consts::TAU;

/// Grid size used by [`cf_decompose`] for the minima scan.
pub const DBAR_GRID: usize = 8192;
/// Golden-section refinement stops when the bracket is shorter than this.
const REFINE_TOL: f64 = 1e-10;
/// Refined minima closer than this (circularly) are merged.
const DEDUP_TOL: f64 = 1e-9;

/// Eigenvalue-gap rule for the numerical rank.
#[derive(Clone, Copy, Debug, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct RankRule {
    /// Absolute floor: rank stops before the first eigenvalue below this.
    pub abs_floor: f64,
    /// Ratio gap: rank stops at the first drop larger than this factor.
    pub ratio_gap: f64,
}

impl Default for RankRule {
    fn default() -> Self {
        RankRule {
            abs_floor: 1e-3,
            ratio_gap: 1e3,
        }
    }
}

/// Recovered spectral lines.
#[derive(Clone, Debug)]
pub struct LineEstimate {
    /// Strictly increasing frequencies in `[0, 2π)`.
    pub freqs: Vec<f64>,
    /// Nonnegative powers, one per frequency.
    pub powers: Vec<f64>,
    /// Numerical rank (number of lines).
    pub rank: usize,
    /// The sampled `d̄` curve used for extraction.
    pub dbar: Option<Vec<(f64, f64)>>,
    /// Set when the numerical rank had to be clamped to `n − 1`.
    pub rank_clamped: bool,
}

impl LineEstimate {
    fn empty(dbar: Option<Vec<(f64, f64)>>) -> Self {
        LineEstimate {
            freqs: Vec::new(),
            powers: Vec::new(),
            rank: 0,
            dbar,
            rank_clamped: false,
        }
    }
}

/// First `k` such that `λ_{k+1} < abs_floor` or `λ_k / λ_{k+1} > ratio_gap`;
/// `n` if no gap exists, and 0 when even `λ_1` is below the floor.
///
/// Negative entries are clamped to zero on entry.
pub fn numerical_rank(eigs: &[f64], rule: &RankRule) -> Result<usize> {
    if eigs.is_empty() {
        return Err(Error::EmptyEigenvalues);
    }
    let eigs: Vec<f64> = eigs.iter().map(|&v| v.max(0.0)).collect();
    debug_assert!(
        eigs.windows(2).all(|w| w[0] >= w[1]),
        "eigenvalues must be descending"
    );
    if eigs[0] < rule.abs_floor {
        return Ok(0);
    }
    for k in 1..eigs.len() {
        if eigs[k] < rule.abs_floor {
            return Ok(k);
        }
        if eigs[k - 1] / eigs[k] > rule.ratio_gap {
            return Ok(k);
        }
    }
    Ok(eigs.len())
}

/// Sample `d̄(θ) = ‖U* G(e^{iθ})‖² / ‖G(e^{iθ})‖²` on a uniform grid.
///
/// `noise_basis` holds the eigenvectors past the numerical rank as columns;
/// an empty basis yields the all-zero curve by convention. Values lie in
/// `[0, 1]`.
pub fn dbar_curve(
    filter: &GFilter,
    noise_basis: &CMatrix,
    grid_size: usize,
) -> Result<Vec<(f64, f64)>> {
    if grid_size < 4 {
        return Err(Error::InvalidParameter(format!(
            "grid size {grid_size} < 4"
        )));
    }
    let n = filter.n();
    if noise_basis.ncols() > 0 && noise_basis.nrows() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: noise_basis.nrows(),
        });
    }
    let w = noise_basis.adjoint();
    Ok((0..grid_size)
        .map(|j| {
            let theta = TAU * j as f64 / grid_size as f64;
            (theta, dbar_at(filter, &w, theta))
        })
        .collect())
}

/// `d̄` at a single point; `w` is the adjoint of the noise basis.
fn dbar_at(filter: &GFilter, w: &CMatrix, theta: f64) -> f64 {
    if w.nrows() == 0 {
        return 0.0;
    }
    let g = filter.transfer(theta);
    (w * &g).norm_squared() / g.norm_squared()
}

/// Decompose a Hermitian PSD structured covariance into spectral lines.
///
/// Steps: eigendecompose, apply the rank rule (clamping `r̂ = n` to `n − 1`
/// with a flag, since the decomposition needs `r < n`), scan `d̄` on a
/// dense grid, refine each local minimum by golden-section search, keep the
/// `r̂` deepest, and recover powers by nonnegative least squares against the
/// atom outer products in the trace inner product.
pub fn cf_decompose(filter: &GFilter, sigma: &CMatrix, rule: &RankRule) -> Result<LineEstimate> {
    let n = filter.n();
    if sigma.nrows() != n || sigma.ncols() != n {
        return Err(Error::ShapeMismatch {
            expected: n,
            got: sigma.nrows(),
        });
    }
    let scale = max_abs_entry(sigma).max(1.0);
    let defect = hermitian_defect(sigma);
    if defect > 1e-8 * scale {
        return Err(Error::NotHermitian(defect));
    }
    let sigma = symmetrize(sigma);

    let eig = sigma.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let eigs: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();

    let mut rank = numerical_rank(&eigs, rule)?;
    let mut rank_clamped = false;
    if rank >= n {
        rank = n - 1;
        rank_clamped = true;
    }

    let noise_cols: Vec<usize> = order[rank..].to_vec();
    let noise_basis = eig.eigenvectors.select_columns(noise_cols.iter());
    let curve = dbar_curve(filter, &noise_basis, DBAR_GRID)?;

    if rank == 0 {
        return Ok(LineEstimate::empty(Some(curve)));
    }

    // strict local minima on the periodic grid
    let w = noise_basis.adjoint();
    let vals: Vec<f64> = curve.iter().map(|&(_, v)| v).collect();
    let m = vals.len();
    let step = TAU / m as f64;
    let mut candidates: Vec<(f64, f64)> = Vec::new(); // (theta, dbar)
    for j in 0..m {
        let prev = vals[(j + m - 1) % m];
        let next = vals[(j + 1) % m];
        if vals[j] < prev && vals[j] < next {
            let center = curve[j].0;
            let (theta, value) =
                golden_section_min(|t| dbar_at(filter, &w, t), center - step, center + step);
            candidates.push((theta.rem_euclid(TAU), value));
        }
    }

    // merge near-duplicates circularly, keeping the deeper one
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, f64)> = Vec::new();
    for c in candidates {
        match merged.last_mut() {
            Some(last) if c.0 - last.0 < DEDUP_TOL => {
                if c.1 < last.1 {
                    *last = c;
                }
            }
            _ => merged.push(c),
        }
    }
    if merged.len() > 1 {
        let first = merged[0];
        let last = *merged.last().unwrap();
        if first.0 + TAU - last.0 < DEDUP_TOL {
            if last.1 < first.1 {
                merged[0] = (last.0 - TAU, last.1);
            }
            merged.pop();
            merged[0].0 = merged[0].0.rem_euclid(TAU);
        }
    }

    if merged.len() < rank {
        return Err(Error::ExtractionDeficit {
            needed: rank,
            found: merged.iter().map(|&(t, _)| t).collect(),
        });
    }
    merged.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut freqs: Vec<f64> = merged[..rank].iter().map(|&(t, _)| t).collect();
    freqs.sort_by(f64::total_cmp);

    // powers: nonnegative least squares of Σ against the atom outer
    // products, in the real coordinatization of Hermitian matrices
    let design = DMatrix::<f64>::from_columns(
        &freqs
            .iter()
            .map(|&theta| {
                let g = filter.transfer(theta);
                to_real_coords(&(&g * g.adjoint()))
            })
            .collect::<Vec<_>>(),
    );
    let (powers, _) = nnls(&design, &to_real_coords(&sigma));

    Ok(LineEstimate {
        freqs,
        powers: powers.iter().copied().collect(),
        rank,
        dbar: Some(curve),
        rank_clamped,
    })
}

/// Golden-section minimization on `[a, b]` down to a bracket of `REFINE_TOL`.
fn golden_section_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let mut x1 = b - INVPHI * (b - a);
    let mut x2 = a + INVPHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > REFINE_TOL {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INVPHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INVPHI * (b - a);
            f2 = f(x2);
        }
    }
    let xm = 0.5 * (a + b);
    (xm, f(xm))
}

/// Independent extraction route used only by tests: for the delay bank, the
/// decomposition frequencies are the unit-circle roots of the polynomial
/// `z^{n−1}·d(z, 1/z)`, found through its companion matrix.
#[cfg(test)]
pub(crate) mod oracles {
    use crate::CMatrix;
    use num_complex::Complex64;
    use std::f64::consts::TAU;

    fn circ_dist(a: f64, b: f64) -> f64 {
        let d = (a - b).rem_euclid(TAU);
        d.min(TAU - d)
    }

    /// Multiply two complex polynomials given low-to-high coefficients.
    fn poly_mul(p: &[Complex64], q: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); p.len() + q.len() - 1];
        for (i, &a) in p.iter().enumerate() {
            for (j, &b) in q.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        out
    }

    /// Roots via the companion matrix (complex Schur form).
    fn companion_roots(coeffs_low_to_high: &[Complex64]) -> Vec<Complex64> {
        let max = coeffs_low_to_high
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max);
        let mut c = coeffs_low_to_high.to_vec();
        while c.last().map(|z| z.norm() < 1e-12 * max) == Some(true) {
            c.pop();
        }
        let deg = c.len() - 1;
        let lead = c[deg];
        let mut comp = CMatrix::zeros(deg, deg);
        for i in 1..deg {
            comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
        }
        for i in 0..deg {
            comp[(i, deg - 1)] = -c[i] / lead;
        }
        let schur = comp
            .try_schur(1e-13, 200_000)
            .expect("companion Schur converges");
        let (_, t) = schur.unpack();
        (0..deg).map(|i| t[(i, i)]).collect()
    }

    /// Unit-circle root angles of `d(z, 1/z)·z^{n−1}` for the delay bank,
    /// given the noise eigenvectors as columns.
    pub(crate) fn vandermonde_freqs(noise_basis: &CMatrix) -> Vec<f64> {
        let n = noise_basis.nrows();
        let mut q = vec![Complex64::new(0.0, 0.0); 2 * n - 1];
        for col in 0..noise_basis.ncols() {
            let u: Vec<Complex64> = (0..n).map(|i| noise_basis[(i, col)]).collect();
            // f(z) = Σ_k conj(u_k) z^{n−1−k},  g(z) = Σ_k u_k z^k
            let f: Vec<Complex64> = (0..n).map(|j| u[n - 1 - j].conj()).collect();
            let g: Vec<Complex64> = u.clone();
            for (i, v) in poly_mul(&f, &g).into_iter().enumerate() {
                q[i] += v;
            }
        }
        let mut angles: Vec<f64> = companion_roots(&q)
            .into_iter()
            .filter(|z| (z.norm() - 1.0).abs() < 1e-4)
            .map(|z| z.arg().rem_euclid(TAU))
            .collect();
        angles.sort_by(f64::total_cmp);
        // unit-circle roots of the nonnegative d̄ come in pairs; merge them
        let mut merged: Vec<f64> = Vec::new();
        for a in angles {
            match merged.last() {
                Some(&last) if circ_dist(last, a) < 1e-5 => {}
                _ => merged.push(a),
            }
        }
        if merged.len() > 1 && circ_dist(merged[0], *merged.last().unwrap()) < 1e-5 {
            merged.pop();
        }
        merged
    }
}
