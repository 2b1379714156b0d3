//! End-to-end frequency estimation: filter the record, pick the
//! regularization weight, solve the SDP, extract the spectral lines.
//!
//! The baseline `standard_anm` is the delay-bank special case with filter
//! size equal to the record length: there the structured covariances are
//! Hermitian Toeplitz and the atoms are Fourier vectors, so the pipeline
//! reduces to classical atomic-norm denoising.

use crate::cfd::{cf_decompose, LineEstimate, RankRule};
use crate::conic::{solve_noiseless, solve_regularized, AnmProblem, AnmSolution, SolverSettings};
use crate::error::{Error, Result};
use crate::gfilter::GFilter;
use crate::structcov::{subspace_basis, StructuredSubspace};
use crate::CVector;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::TAU;

/// How the regularization weight λ is chosen.
#[derive(Clone, Copy, Debug)]
pub enum LambdaMode {
    /// Known noise standard deviation σ; λ = (σ/2)√(n ln n).
    OracleSigma(f64),
    /// Fixed λ.
    Explicit(f64),
    /// Estimate σ² from out-of-band DFT bins of the raw record.
    EstimateSigma { band: (f64, f64) },
}

#[derive(Clone, Debug)]
pub struct EstimatorConfig {
    pub filter: GFilter,
    pub rank_rule: RankRule,
    pub lambda_mode: LambdaMode,
    pub solver: SolverSettings,
}

/// Estimation result: the extracted lines plus the raw solver output.
#[derive(Clone, Debug)]
pub struct Estimate {
    pub lines: LineEstimate,
    pub solution: AnmSolution,
    /// λ actually used.
    pub lambda: f64,
    /// Set when the solver did not converge or the record was too short
    /// for the filter transient; the estimate is still produced.
    pub low_confidence: bool,
}

/// Reusable pipeline: the structured subspace is computed once at
/// construction and shared across records.
#[derive(Clone, Debug)]
pub struct Estimator {
    config: EstimatorConfig,
    subspace: StructuredSubspace,
}

/// Below this λ the trace term cannot steer a solver running at the default
/// tolerances; the σ = 0 floor value lands here on purpose and is treated
/// as the λ → 0⁺ limit (see [`Estimator::estimate`]).
pub const LAMBDA_FLOOR: f64 = 1e-8;

/// λ = (σ/2)·√(n·ln n), floored at 1e−8 when σ = 0.
pub fn select_lambda(sigma: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "lambda rule needs n ≥ 2, got {n}"
        )));
    }
    if sigma < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "sigma must be nonnegative, got {sigma}"
        )));
    }
    if sigma == 0.0 {
        return Ok(LAMBDA_FLOOR);
    }
    Ok(0.5 * sigma * (n as f64 * (n as f64).ln()).sqrt())
}

/// Noise variance from the mean of `|Y(ω_j)|²/L` over DFT bins outside the
/// band; unbiased for white noise when no signal energy leaks outside.
pub fn estimate_noise_variance(y: &[Complex64], band: (f64, f64)) -> Result<f64> {
    let len = y.len();
    if len < 8 {
        return Err(Error::SignalTooShort(8));
    }
    let (lo, hi) = band;
    if !(0.0 <= lo && lo < hi && hi < TAU) {
        return Err(Error::InvalidBand { lo, hi });
    }
    let mut buf = y.to_vec();
    FftPlanner::new().plan_fft_forward(len).process(&mut buf);
    let mut sum = 0.0;
    let mut count = 0usize;
    for (j, v) in buf.iter().enumerate() {
        let omega = TAU * j as f64 / len as f64;
        if omega < lo || omega > hi {
            sum += v.norm_sqr() / len as f64;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EstimationInfeasible);
    }
    Ok(sum / count as f64)
}

impl Estimator {
    pub fn new(config: EstimatorConfig) -> Estimator {
        // the delay bank's subspace is known analytically
        let subspace = if config.filter.is_delay_bank() {
            StructuredSubspace::toeplitz(config.filter.n())
        } else {
            subspace_basis(&config.filter)
        };
        Estimator { config, subspace }
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn subspace(&self) -> &StructuredSubspace {
        &self.subspace
    }

    /// Same filter and precomputed subspace, different λ selection.
    pub fn with_lambda_mode(&self, lambda_mode: LambdaMode) -> Estimator {
        Estimator {
            config: EstimatorConfig {
                lambda_mode,
                ..self.config.clone()
            },
            subspace: self.subspace.clone(),
        }
    }

    fn lambda_for(&self, y: &[Complex64]) -> Result<f64> {
        let n = self.config.filter.n();
        match self.config.lambda_mode {
            LambdaMode::OracleSigma(sigma) => select_lambda(sigma, n),
            LambdaMode::Explicit(lambda) => {
                if lambda <= 0.0 {
                    return Err(Error::InvalidParameter(format!(
                        "explicit lambda must be positive, got {lambda}"
                    )));
                }
                Ok(lambda)
            }
            LambdaMode::EstimateSigma { band } => {
                let var = estimate_noise_variance(y, band)?;
                select_lambda(var.sqrt(), n)
            }
        }
    }

    /// Full pipeline on one record.
    ///
    /// At or below [`LAMBDA_FLOOR`] the regularized program degenerates:
    /// the trace term that selects the low-rank covariance is weaker than
    /// the solver tolerance, so Σ̂ is essentially arbitrary among
    /// near-feasible points. The λ → 0⁺ limit of the program is the
    /// noiseless SDP at `s̃ = x`, which is solved instead in that case.
    pub fn estimate(&self, y: &[Complex64]) -> Result<Estimate> {
        let lambda = self.lambda_for(y)?;
        let filtered = self.config.filter.filter_signal(y)?;
        let solution = if lambda <= LAMBDA_FLOOR {
            let problem = AnmProblem::noiseless(
                &self.config.filter,
                &self.subspace,
                filtered.x,
                self.config.solver,
            )?;
            solve_noiseless(&problem)?
        } else {
            let problem = AnmProblem::regularized(
                &self.config.filter,
                &self.subspace,
                filtered.x,
                lambda,
                self.config.solver,
            )?;
            solve_regularized(&problem)?
        };
        let lines = cf_decompose(&self.config.filter, &solution.sigma, &self.config.rank_rule)?;
        let low_confidence = !solution.converged || filtered.transient_warning;
        Ok(Estimate {
            lines,
            solution,
            lambda,
            low_confidence,
        })
    }
}

/// One-shot convenience wrapper around [`Estimator`].
pub fn estimate_frequencies(y: &[Complex64], config: &EstimatorConfig) -> Result<Estimate> {
    Estimator::new(config.clone()).estimate(y)
}

/// Classical atomic-norm baseline: delay bank with `n = L`.
///
/// The nilpotent bank's state after the full record is the reversed record
/// itself, so no transient truncation is involved; the reversed record is
/// used directly as the measurement vector over the Toeplitz subspace.
pub fn standard_anm(
    y: &[Complex64],
    lambda_mode: LambdaMode,
    solver: SolverSettings,
) -> Result<Estimate> {
    let len = y.len();
    if len < 2 {
        return Err(Error::SignalTooShort(2));
    }
    let filter = GFilter::allpass_cascade(Complex64::new(0.0, 0.0), len)?;
    let subspace = StructuredSubspace::toeplitz(len);
    let lambda = match lambda_mode {
        LambdaMode::OracleSigma(sigma) => select_lambda(sigma, len)?,
        LambdaMode::Explicit(lambda) if lambda > 0.0 => lambda,
        LambdaMode::Explicit(lambda) => {
            return Err(Error::InvalidParameter(format!(
                "explicit lambda must be positive, got {lambda}"
            )))
        }
        LambdaMode::EstimateSigma { band } => {
            select_lambda(estimate_noise_variance(y, band)?.sqrt(), len)?
        }
    };
    let x = CVector::from_fn(len, |k, _| y[len - 1 - k]);
    let solution = if lambda <= LAMBDA_FLOOR {
        solve_noiseless(&AnmProblem::noiseless(&filter, &subspace, x, solver)?)?
    } else {
        solve_regularized(&AnmProblem::regularized(
            &filter, &subspace, x, lambda, solver,
        )?)?
    };
    let lines = cf_decompose(&filter, &solution.sigma, &RankRule::default())?;
    let low_confidence = !solution.converged;
    Ok(Estimate {
        lines,
        solution,
        lambda,
        low_confidence,
    })
}

/// Least-squares amplitudes of `y(t) = Σ a_k e^{iθ_k t}` at known
/// frequencies.
pub fn recover_amplitudes(y: &[Complex64], freqs: &[f64]) -> Result<Vec<Complex64>> {
    let len = y.len();
    let m = freqs.len();
    if m >= len {
        return Err(Error::InvalidParameter(format!(
            "need more samples than frequencies: {m} ≥ {len}"
        )));
    }
    for i in 0..m {
        for j in (i + 1)..m {
            if (freqs[i] - freqs[j]).abs() < 1e-9 {
                return Err(Error::IllPosed);
            }
        }
    }
    let design = DMatrix::<Complex64>::from_fn(len, m, |t, k| {
        Complex64::from_polar(1.0, freqs[k] * t as f64)
    });
    let rhs = CVector::from_column_slice(y);
    let solution = design
        .svd(true, true)
        .solve(&rhs, 1e-12)
        .map_err(|_| Error::IllPosed)?;
    Ok(solution.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn section6_filter() -> GFilter {
        GFilter::allpass_cascade(Complex64::from_polar(0.58, 2.0), 20).unwrap()
    }

    fn cisoid_mix(freqs: &[f64], amps: &[Complex64], len: usize) -> Vec<Complex64> {
        (0..len)
            .map(|t| {
                freqs
                    .iter()
                    .zip(amps.iter())
                    .map(|(&th, &a)| a * Complex64::from_polar(1.0, th * t as f64))
                    .sum()
            })
            .collect()
    }

    fn add_noise(y: &mut [Complex64], sigma: f64, rng: &mut ChaCha8Rng) {
        let s = sigma / 2.0f64.sqrt();
        for v in y.iter_mut() {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            *v += Complex64::new(s * re, s * im);
        }
    }

    #[test]
    fn lambda_rule() {
        let lam = select_lambda(1.0, 20).unwrap();
        assert!((lam - 0.5 * (20.0 * 20.0f64.ln()).sqrt()).abs() < 1e-14);
        assert!((lam - 3.87023).abs() < 1e-4);
        assert_eq!(select_lambda(0.0, 20).unwrap(), 1e-8);
        let doubled = select_lambda(2.0, 20).unwrap();
        assert!((doubled - 2.0 * lam).abs() < 1e-13);
        assert!(select_lambda(1.0, 1).is_err());
        assert!(select_lambda(-0.1, 20).is_err());
    }

    #[test]
    fn noise_variance_white_noise_concentrates() {
        let mut in_range = 0;
        for seed in 0..200u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut y = vec![Complex64::new(0.0, 0.0); 4096];
            add_noise(&mut y, 1.0, &mut rng);
            let var = estimate_noise_variance(&y, (1.75, 2.25)).unwrap();
            if (0.9..=1.1).contains(&var) {
                in_range += 1;
            }
        }
        assert!(in_range >= 198, "only {in_range}/200 in [0.9, 1.1]");
    }

    #[test]
    fn noise_variance_of_clean_cisoid_is_leakage_level() {
        let y = cisoid_mix(&[2.0], &[Complex64::new(1.0, 0.0)], 4096);
        let var = estimate_noise_variance(&y, (1.75, 2.25)).unwrap();
        assert!(var < 0.01, "leakage level {var}");
        assert!(var > 0.0);
    }

    #[test]
    fn noise_variance_edge_cases() {
        let zero = vec![Complex64::new(0.0, 0.0); 64];
        assert_eq!(estimate_noise_variance(&zero, (1.0, 2.0)).unwrap(), 0.0);
        assert!(matches!(
            estimate_noise_variance(&zero[..4], (1.0, 2.0)),
            Err(Error::SignalTooShort(_))
        ));
        assert!(estimate_noise_variance(&zero, (2.0, 1.0)).is_err());
    }

    #[test]
    fn zero_record_gives_rank_zero() {
        let config = EstimatorConfig {
            filter: section6_filter(),
            rank_rule: RankRule::default(),
            lambda_mode: LambdaMode::OracleSigma(1.0),
            solver: SolverSettings::default(),
        };
        let y = vec![Complex64::new(0.0, 0.0); 98];
        let est = estimate_frequencies(&y, &config).unwrap();
        assert_eq!(est.lines.rank, 0);
        assert!(!est.low_confidence);
    }

    #[test]
    fn noiseless_single_cisoid_at_band_center() {
        let config = EstimatorConfig {
            filter: section6_filter(),
            rank_rule: RankRule::default(),
            lambda_mode: LambdaMode::OracleSigma(1e-6),
            solver: SolverSettings::default(),
        };
        let y = cisoid_mix(&[2.0], &[Complex64::from_polar(1.0, 0.7)], 98);
        let est = estimate_frequencies(&y, &config).unwrap();
        assert_eq!(est.lines.rank, 1, "rank {}", est.lines.rank);
        assert!(
            (est.lines.freqs[0] - 2.0).abs() < 1e-3,
            "freq {}",
            est.lines.freqs[0]
        );
    }

    #[test]
    fn high_snr_three_lines_recovered() {
        // σ → 0 limit of the noisy pipeline
        let delta = TAU / 98.0;
        let freqs = [2.0 - 2.0 * delta, 2.0, 2.0 + 2.0 * delta];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let amps: Vec<Complex64> = (0..3)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..TAU)))
            .collect();
        let mut y = cisoid_mix(&freqs, &amps, 98);
        add_noise(&mut y, 1e-4, &mut rng);
        let config = EstimatorConfig {
            filter: section6_filter(),
            rank_rule: RankRule::default(),
            lambda_mode: LambdaMode::OracleSigma(1e-4),
            solver: SolverSettings::default(),
        };
        let est = estimate_frequencies(&y, &config).unwrap();
        assert_eq!(est.lines.rank, 3);
        for (f_hat, f_true) in est.lines.freqs.iter().zip(freqs.iter()) {
            assert!((f_hat - f_true).abs() < 1e-3, "{f_hat} vs {f_true}");
        }
    }

    #[test]
    fn fixed_seed_trial_at_9db_detects_three_lines() {
        let delta = TAU / 98.0;
        let freqs = [2.0 - 2.0 * delta, 2.0, 2.0 + 2.0 * delta];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let amps: Vec<Complex64> = (0..3)
            .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..TAU)))
            .collect();
        let sigma = 10f64.powf(-9.0 / 20.0);
        let mut y = cisoid_mix(&freqs, &amps, 98);
        add_noise(&mut y, sigma, &mut rng);
        let config = EstimatorConfig {
            filter: section6_filter(),
            rank_rule: RankRule::default(),
            lambda_mode: LambdaMode::OracleSigma(sigma),
            solver: SolverSettings::default(),
        };
        let est = estimate_frequencies(&y, &config).unwrap();
        assert!(!est.low_confidence);
        assert_eq!(est.lines.rank, 3);
        for (f_hat, f_true) in est.lines.freqs.iter().zip(freqs.iter()) {
            assert!((f_hat - f_true).abs() < TAU / 98.0, "{f_hat} vs {f_true}");
        }
    }

    #[test]
    fn pipeline_is_deterministic() {
        let y = cisoid_mix(&[1.9, 2.1], &[Complex64::new(1.0, 0.0); 2], 98);
        let config = EstimatorConfig {
            filter: section6_filter(),
            rank_rule: RankRule::default(),
            lambda_mode: LambdaMode::OracleSigma(0.1),
            solver: SolverSettings::default(),
        };
        let a = estimate_frequencies(&y, &config).unwrap();
        let b = estimate_frequencies(&y, &config).unwrap();
        assert_eq!(a.lines.freqs.len(), b.lines.freqs.len());
        for (x, y) in a.lines.freqs.iter().zip(b.lines.freqs.iter()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        assert_eq!(
            a.solution.objective.to_bits(),
            b.solution.objective.to_bits()
        );
    }

    #[test]
    fn standard_anm_single_cisoid() {
        let y = cisoid_mix(&[1.3], &[Complex64::from_polar(1.0, 0.2)], 32);
        let est =
            standard_anm(&y, LambdaMode::OracleSigma(1e-5), SolverSettings::default()).unwrap();
        assert_eq!(est.lines.rank, 1);
        assert!(
            (est.lines.freqs[0] - 1.3).abs() < 1e-4,
            "freq {}",
            est.lines.freqs[0]
        );
    }

    #[test]
    fn standard_anm_constant_record_is_dc() {
        let y = vec![Complex64::new(1.0, 0.0); 24];
        let est =
            standard_anm(&y, LambdaMode::OracleSigma(1e-5), SolverSettings::default()).unwrap();
        assert_eq!(est.lines.rank, 1);
        let f = est.lines.freqs[0];
        let dist = f.min(TAU - f);
        assert!(dist < 1e-4, "freq {f}");
    }

    #[test]
    fn standard_anm_extraction_agrees_with_polynomial_oracle() {
        let y = cisoid_mix(
            &[1.1, 2.6],
            &[
                Complex64::from_polar(1.0, 0.4),
                Complex64::from_polar(0.8, 2.2),
            ],
            24,
        );
        let est =
            standard_anm(&y, LambdaMode::OracleSigma(1e-6), SolverSettings::default()).unwrap();
        assert_eq!(est.lines.rank, 2);
        // independent route: unit-circle polynomial roots of the noise
        // pencil on the same optimal Σ̂
        let eig = est.solution.sigma.clone().symmetric_eigen();
        let n = 24;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let noise = eig.eigenvectors.select_columns(order[2..].iter());
        let oracle = crate::cfd::oracles::vandermonde_freqs(&noise);
        assert_eq!(oracle.len(), 2);
        for (a, b) in est.lines.freqs.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn amplitude_recovery() {
        let truth = [Complex64::from_polar(2.0, std::f64::consts::FRAC_PI_4)];
        let y = cisoid_mix(&[1.0], &truth, 32);
        let amps = recover_amplitudes(&y, &[1.0]).unwrap();
        assert!((amps[0] - truth[0]).norm() < 1e-10);

        let freqs = [0.9, 1.7, 4.0];
        let truth: Vec<Complex64> = vec![
            Complex64::new(1.0, 0.5),
            Complex64::new(-0.3, 1.1),
            Complex64::new(0.0, -2.0),
        ];
        let y = cisoid_mix(&freqs, &truth, 64);
        let amps = recover_amplitudes(&y, &freqs).unwrap();
        for (a, b) in amps.iter().zip(truth.iter()) {
            assert!((a - b).norm() < 1e-10);
        }

        assert!(matches!(
            recover_amplitudes(&y, &[1.0, 1.0 + 1e-12]),
            Err(Error::IllPosed)
        ));
    }

    #[test]
    fn amplitude_recovery_under_noise() {
        let delta = TAU / 98.0;
        let freqs = [2.0 - 2.0 * delta, 2.0, 2.0 + 2.0 * delta];
        let sigma = 10f64.powf(-9.0 / 20.0);
        let mut ok = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let amps: Vec<Complex64> = (0..3)
                .map(|_| Complex64::from_polar(1.0, rng.random_range(0.0..TAU)))
                .collect();
            let mut y = cisoid_mix(&freqs, &amps, 98);
            add_noise(&mut y, sigma, &mut rng);
            let est = recover_amplitudes(&y, &freqs).unwrap();
            let err: f64 = est
                .iter()
                .zip(amps.iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            if err < 0.5 {
                ok += 1;
            }
        }
        assert!(ok >= 95, "only {ok}/100 within 0.5");
    }
}
