//! Command-line front end: filter design, signal filtering and estimation,
//! covariance decomposition, and the Monte Carlo benchmark.
//!
//! Exit codes: 0 on success, 1 on numerical failure (unconverged solve with
//! `--strict`), 2 on usage or input errors.

use clap::{Args, Parser, Subcommand};
use linespec::bench::{emit_results, run_experiment, ExperimentConfig, Method, OutputFormat};
use linespec::cfd::{cf_decompose, RankRule};
use linespec::io::{curve_to_csv, parse_matrix_json, parse_signal_csv, EstimateRecord};
use linespec::{estimate_frequencies, EstimatorConfig, GFilter, LambdaMode, SolverSettings};
use num_complex::Complex64;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "linespec", version, about = "Line spectral estimation toolbox")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design a filter bank and export it with its gain curve.
    DesignFilter(DesignArgs),
    /// Estimate spectral lines from a signal CSV.
    Estimate(EstimateArgs),
    /// Run the Monte Carlo comparison grid.
    Benchmark(BenchmarkArgs),
    /// Decompose a structured covariance matrix into spectral lines.
    Decompose(DecomposeArgs),
}

#[derive(Args)]
struct DesignArgs {
    /// Pole magnitude (with --pole-phase); mutually exclusive with the band
    /// flags.
    #[arg(long, requires = "pole_phase", conflicts_with_all = ["band_lo", "band_hi"])]
    pole_mag: Option<f64>,
    #[arg(long, requires = "pole_mag")]
    pole_phase: Option<f64>,
    /// Lower band edge in radians (with --band-hi).
    #[arg(long, requires = "band_hi")]
    band_lo: Option<f64>,
    #[arg(long, requires = "band_lo")]
    band_hi: Option<f64>,
    /// Filter size n.
    #[arg(long)]
    size: usize,
    /// Gain-curve grid size.
    #[arg(long, default_value_t = 4096)]
    grid: usize,
    #[arg(long, env = "LINESPEC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Signal CSV with two columns `re, im`.
    #[arg(long)]
    input: PathBuf,
    /// Filter JSON produced by design-filter.
    #[arg(long)]
    filter: PathBuf,
    /// Oracle noise standard deviation.
    #[arg(long, conflicts_with_all = ["lambda", "estimate_sigma"])]
    sigma: Option<f64>,
    /// Explicit regularization weight.
    #[arg(long, conflicts_with = "estimate_sigma")]
    lambda: Option<f64>,
    /// Estimate the noise variance from out-of-band DFT bins.
    #[arg(long, requires_all = ["band_lo", "band_hi"])]
    estimate_sigma: bool,
    #[arg(long)]
    band_lo: Option<f64>,
    #[arg(long)]
    band_hi: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Exit with code 1 if the solver does not converge.
    #[arg(long)]
    strict: bool,
    #[arg(long, env = "LINESPEC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Experiment config JSON; missing fields use the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated subset of {gfilter-anm, standard-anm}.
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated SNR list in dB; `inf` for noiseless.
    #[arg(long, value_delimiter = ',')]
    snr: Option<Vec<String>>,
    /// Comma-separated θ₀ list in radians.
    #[arg(long, value_delimiter = ',')]
    theta0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', default_values_t = ["csv".to_string(), "svg".to_string()])]
    formats: Vec<String>,
    /// Write real wall times into trials.csv (breaks byte-for-byte
    /// reproducibility across runs).
    #[arg(long)]
    emit_timing: bool,
    #[arg(long, env = "LINESPEC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct DecomposeArgs {
    /// Covariance matrix JSON (nested arrays of {re, im}).
    #[arg(long)]
    sigma_matrix: PathBuf,
    #[arg(long)]
    filter: PathBuf,
    #[arg(long, env = "LINESPEC_OUT_DIR", default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
}

impl SolverArgs {
    fn apply(&self, mut settings: SolverSettings) -> SolverSettings {
        if let Some(v) = self.max_iter {
            settings.max_iter = v;
        }
        if let Some(v) = self.eps_abs {
            settings.eps_abs = v;
        }
        if let Some(v) = self.eps_rel {
            settings.eps_rel = v;
        }
        settings
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::DesignFilter(args) => cmd_design_filter(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Benchmark(args) => cmd_benchmark(args),
        Command::Decompose(args) => cmd_decompose(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

fn read_filter(path: &Path) -> anyhow::Result<GFilter> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read filter file {}: {e}", path.display()))?;
    let filter: GFilter = serde_json::from_str(&text)
        .map_err(|e| anyhow::anyhow!("invalid filter JSON {}: {e}", path.display()))?;
    Ok(filter)
}

fn cmd_design_filter(args: DesignArgs) -> anyhow::Result<ExitCode> {
    let filter = match (args.pole_mag, args.pole_phase, args.band_lo, args.band_hi) {
        (Some(mag), Some(phase), _, _) => {
            GFilter::allpass_cascade(Complex64::from_polar(mag, phase), args.size)?
        }
        (_, _, Some(lo), Some(hi)) => GFilter::band_design(lo, hi, args.size)?,
        _ => anyhow::bail!("specify either --pole-mag/--pole-phase or --band-lo/--band-hi"),
    };
    if args.grid < 4 {
        anyhow::bail!("--grid must be at least 4");
    }
    std::fs::create_dir_all(&args.out_dir)?;
    let filter_path = args.out_dir.join("filter.json");
    std::fs::write(&filter_path, serde_json::to_string_pretty(&filter)?)?;
    let gain_path = args.out_dir.join("gain.csv");
    std::fs::write(
        &gain_path,
        curve_to_csv(("theta", "gain"), &filter.gain_curve(args.grid)),
    )?;
    println!(
        "wrote {} and {}",
        filter_path.display(),
        gain_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_estimate(args: EstimateArgs) -> anyhow::Result<ExitCode> {
    let filter = read_filter(&args.filter)?;
    let text = std::fs::read_to_string(&args.input)
        .map_err(|e| anyhow::anyhow!("cannot read signal {}: {e}", args.input.display()))?;
    let signal = parse_signal_csv(&text)?;

    let lambda_mode = if let Some(sigma) = args.sigma {
        LambdaMode::OracleSigma(sigma)
    } else if let Some(lambda) = args.lambda {
        LambdaMode::Explicit(lambda)
    } else if args.estimate_sigma {
        LambdaMode::EstimateSigma {
            band: (args.band_lo.unwrap(), args.band_hi.unwrap()),
        }
    } else {
        anyhow::bail!("specify one of --sigma, --lambda, or --estimate-sigma");
    };

    let config = EstimatorConfig {
        filter,
        rank_rule: RankRule::default(),
        lambda_mode,
        solver: args.solver.apply(SolverSettings::default()),
    };
    let estimate = estimate_frequencies(&signal, &config)?;

    std::fs::create_dir_all(&args.out_dir)?;
    let record = EstimateRecord {
        freqs: estimate.lines.freqs.clone(),
        powers: estimate.lines.powers.clone(),
        rank: estimate.lines.rank,
        lambda: Some(estimate.lambda),
        converged: Some(estimate.solution.converged),
        iterations: Some(estimate.solution.iterations),
        objective: Some(estimate.solution.objective),
    };
    let json_path = args.out_dir.join("estimate.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&record)?)?;
    if let Some(curve) = &estimate.lines.dbar {
        std::fs::write(
            args.out_dir.join("dbar.csv"),
            curve_to_csv(("theta", "dbar"), curve),
        )?;
    }
    println!(
        "rank {} lambda {:.6e} converged {} -> {}",
        estimate.lines.rank,
        estimate.lambda,
        estimate.solution.converged,
        json_path.display()
    );
    if args.strict && !estimate.solution.converged {
        eprintln!("solver did not converge within the iteration budget");
        return Ok(ExitCode::from(1));
    }
    Ok(ExitCode::SUCCESS)
}

fn parse_snr(values: &[String]) -> anyhow::Result<Vec<f64>> {
    values
        .iter()
        .map(|s| match s.as_str() {
            "inf" | "+inf" => Ok(f64::INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|_| anyhow::anyhow!("bad SNR value '{other}'")),
        })
        .collect()
}

fn cmd_benchmark(args: BenchmarkArgs) -> anyhow::Result<ExitCode> {
    let mut config: ExperimentConfig = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
            serde_json::from_str(&text)
                .map_err(|e| anyhow::anyhow!("invalid config JSON {}: {e}", path.display()))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(trials) = args.trials {
        config.trials = trials;
    }
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if let Some(methods) = &args.methods {
        config.methods = methods
            .iter()
            .map(|m| m.parse::<Method>())
            .collect::<Result<Vec<_>, _>>()?;
    }
    if let Some(snr) = &args.snr {
        config.snr_db_grid = parse_snr(snr)?;
    }
    if let Some(theta0) = &args.theta0 {
        config.theta0_grid = theta0.clone();
    }
    let formats = args
        .formats
        .iter()
        .map(|f| f.parse::<OutputFormat>())
        .collect::<Result<Vec<_>, _>>()?;

    let result = run_experiment(&config)?;
    let files = emit_results(&result, &args.out_dir, &formats, args.emit_timing)?;
    for row in &result.summary {
        println!(
            "theta0={} snr={} method={} success={}/{}",
            row.theta0,
            if row.snr_db.is_infinite() {
                "inf".to_string()
            } else {
                row.snr_db.to_string()
            },
            row.method,
            row.successes,
            row.trials
        );
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_decompose(args: DecomposeArgs) -> anyhow::Result<ExitCode> {
    let filter = read_filter(&args.filter)?;
    let text = std::fs::read_to_string(&args.sigma_matrix)
        .map_err(|e| anyhow::anyhow!("cannot read matrix {}: {e}", args.sigma_matrix.display()))?;
    let sigma = parse_matrix_json(&text)?;
    let estimate = cf_decompose(&filter, &sigma, &RankRule::default())?;

    std::fs::create_dir_all(&args.out_dir)?;
    let record = EstimateRecord {
        freqs: estimate.freqs.clone(),
        powers: estimate.powers.clone(),
        rank: estimate.rank,
        lambda: None,
        converged: None,
        iterations: None,
        objective: None,
    };
    let json_path = args.out_dir.join("estimate.json");
    std::fs::write(&json_path, serde_json::to_string_pretty(&record)?)?;
    if let Some(curve) = &estimate.dbar {
        std::fs::write(
            args.out_dir.join("dbar.csv"),
            curve_to_csv(("theta", "dbar"), curve),
        )?;
    }
    println!("rank {} -> {}", estimate.rank, json_path.display());
    Ok(ExitCode::SUCCESS)
}
