//! Command-line harness for the shifted-curves experiments.
//!
//! Subcommands: `simulate` emits a dataset, `estimate` runs one estimator on
//! a dataset, `risk` runs a Monte Carlo risk study, `rate` fits empirical
//! rate slopes, `compare` reproduces the four-signal estimator comparison.
//! Exit codes: 0 on success, 1 on parameter/input errors, 2 on numerical
//! failures.

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use shiftmean_core::baselines::{direct_mean, procrustean_mean, ProcrustesConfig};
use shiftmean_core::error::{Error, Result};
use shiftmean_core::estimators::{
    default_cutoff, estimate_fn1, estimate_fn2, estimate_noise_variance_pooled,
    hard_threshold_estimate, spectral_cutoff, EstimateResult, SmoothnessParams, ThresholdPolicy,
};
use shiftmean_core::fourier::{
    deconvolve, default_known_floor, sample_mean_coeffs, CurveCoeffsMatrix,
};
use shiftmean_core::io;
use shiftmean_core::meyer::WaveletBasisSpec;
use shiftmean_core::registration::{estimate_shifts, frechet_mean, DescentConfig, DescentTrace};
use shiftmean_core::risk::{rate_study, run_risk_study};
use shiftmean_core::sim::{simulate, EstimatorSpec, ExperimentConfig};
use shiftmean_core::signals::SignalKind;

#[derive(Parser)]
#[command(name = "shiftmean", version, about = "Mean-pattern estimation for randomly shifted curves")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Experiment configuration JSON file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the built-in simulation-study defaults instead of --config.
    #[arg(long)]
    paper_defaults: bool,
    /// Override the master seed of the configuration.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "out")]
    out_dir: PathBuf,
    /// Worker threads; falls back to SHIFTMEAN_THREADS, then to all cores.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one dataset and write it as CSV artifacts.
    Simulate {
        #[command(flatten)]
        common: CommonArgs,
        /// Replication index selecting the RNG stream.
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Run one configured estimator on a simulated or on-disk dataset.
    Estimate {
        #[command(flatten)]
        common: CommonArgs,
        /// Dataset CSV of (m, i, y) rows; simulated on the fly when absent.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Estimator to run: an index into the config list or a name such
        /// as fn2.
        #[arg(long, default_value = "0")]
        estimator: String,
        /// Replication index used when simulating on the fly.
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Monte Carlo risk study over all configured estimators.
    Risk {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Empirical rate slope of the known-density hard-threshold estimator.
    Rate {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated sample sizes, e.g. 50,100,200,400,800,1600.
        #[arg(long, value_delimiter = ',')]
        n_grid: Vec<usize>,
        /// Smoothness s for the theoretical slope.
        #[arg(long)]
        smoothness: Option<f64>,
        /// Ill-posedness nu for the theoretical slope (defaults to the
        /// configured density's degree).
        #[arg(long)]
        nu: Option<f64>,
    },
    /// Four-signal estimator comparison; emits per-signal panel CSVs.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn threads_from(common: &CommonArgs) -> Result<Option<usize>> {
    if let Some(t) = common.threads {
        return Ok(Some(t));
    }
    match std::env::var("SHIFTMEAN_THREADS") {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|e| Error::Parameter(format!("field SHIFTMEAN_THREADS: {e}"))),
        Err(_) => Ok(None),
    }
}

fn load_config(common: &CommonArgs) -> Result<ExperimentConfig> {
    let mut config = match (&common.config, common.paper_defaults) {
        (Some(path), false) => io::read_json::<ExperimentConfig>(path)?,
        (None, true) => ExperimentConfig::paper_defaults(SignalKind::Wave),
        (Some(_), true) => {
            return Err(Error::Parameter(
                "field config: pass either --config or --paper-defaults, not both".into(),
            ))
        }
        (None, false) => {
            return Err(Error::Parameter(
                "field config: need --config <file> or --paper-defaults".into(),
            ))
        }
    };
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { common, replication } => {
            let config = load_config(&common)?;
            ensure_out_dir(&common.out_dir)?;
            let data = simulate(&config, replication)?;
            io::write_dataset_csv(&common.out_dir.join("dataset.csv"), &data.curves)?;
            io::write_shifts_csv(&common.out_dir.join("true_shifts.csv"), &data.true_shifts)?;
            io::write_signal_csv(&common.out_dir.join("truth.csv"), &data.truth)?;
            io::write_json(&common.out_dir.join("config.json"), &config)?;
            eprintln!(
                "wrote dataset.csv, true_shifts.csv, truth.csv to {}",
                common.out_dir.display()
            );
            Ok(())
        }
        Command::Estimate { common, data, estimator, replication } => {
            let config = load_config(&common)?;
            ensure_out_dir(&common.out_dir)?;
            let curves = match data {
                Some(path) => io::read_dataset_csv(&path)?,
                None => simulate(&config, replication)?.curves,
            };
            let spec = select_estimator(&config, &estimator)?;
            let (result, trace) = run_estimator(&config, &curves, spec)?;
            io::write_signal_csv(&common.out_dir.join("f_hat.csv"), &result.f_hat)?;
            io::write_json(&common.out_dir.join("estimate.json"), &result.meta)?;
            if let Some(wavelet) = &result.wavelet {
                io::write_wavelet_csv(&common.out_dir.join("wavelet.csv"), wavelet)?;
            }
            if let Some(trace) = &trace {
                io::write_trace_csv(&common.out_dir.join("trace.csv"), trace)?;
            }
            eprintln!("wrote f_hat.csv, estimate.json to {}", common.out_dir.display());
            Ok(())
        }
        Command::Risk { common } => {
            let threads = threads_from(&common)?;
            let config = load_config(&common)?;
            ensure_out_dir(&common.out_dir)?;
            let report = run_risk_study(&config, threads)?;
            io::write_json(&common.out_dir.join("report.json"), &report)?;
            io::write_risk_csv(&common.out_dir.join("risk.csv"), &report)?;
            if let Some(secs) = report.wall_clock_seconds {
                eprintln!("risk study finished in {secs:.2}s");
            }
            for row in &report.results {
                eprintln!(
                    "  {:<20} mean MISE {:.6e}{}",
                    row.estimator,
                    row.mean_mise,
                    row.std_error
                        .map(|s| format!(" +- {s:.2e}"))
                        .unwrap_or_default()
                );
            }
            Ok(())
        }
        Command::Rate { common, n_grid, smoothness, nu } => {
            let threads = threads_from(&common)?;
            let config = load_config(&common)?;
            ensure_out_dir(&common.out_dir)?;
            let sp = match smoothness {
                Some(s) => Some(SmoothnessParams::new(s, nu.unwrap_or(config.density.nu()))?),
                None => None,
            };
            let report = rate_study(&config, &n_grid, sp, threads)?;
            io::write_json(&common.out_dir.join("rate.json"), &report)?;
            io::write_rate_csv(&common.out_dir.join("rate.csv"), &report)?;
            eprintln!(
                "slope {:.4}{}",
                report.slope,
                report
                    .theoretical_slope
                    .map(|t| format!(" (theoretical {t:.4})"))
                    .unwrap_or_default()
            );
            Ok(())
        }
        Command::Compare { common } => {
            let threads = threads_from(&common)?;
            // --paper-defaults without a config means: all four signals.
            let signals: Vec<SignalKind> = match (&common.config, common.paper_defaults) {
                (Some(_), false) => vec![load_config(&common)?.signal],
                _ => SignalKind::ALL.to_vec(),
            };
            ensure_out_dir(&common.out_dir)?;
            for kind in signals {
                let mut config = match (&common.config, common.paper_defaults) {
                    (Some(_), false) => load_config(&common)?,
                    _ => {
                        let mut c = ExperimentConfig::paper_defaults(kind);
                        if let Some(seed) = common.seed {
                            c.seed = seed;
                        }
                        c
                    }
                };
                config.signal = kind;
                compare_one_signal(&config, &common.out_dir, threads)?;
            }
            eprintln!("wrote comparison panels to {}", common.out_dir.display());
            Ok(())
        }
    }
}

fn select_estimator<'a>(
    config: &'a ExperimentConfig,
    selector: &str,
) -> Result<&'a EstimatorSpec> {
    if let Ok(idx) = selector.parse::<usize>() {
        return config.estimators.get(idx).ok_or_else(|| {
            Error::Parameter(format!(
                "field estimator: index {idx} out of range ({} configured)",
                config.estimators.len()
            ))
        });
    }
    config
        .estimators
        .iter()
        .find(|e| e.name() == selector)
        .ok_or_else(|| {
            Error::Parameter(format!(
                "field estimator: no configured estimator named '{selector}'"
            ))
        })
}

/// Run one estimator on raw curves; returns the estimate and, when shift
/// estimation was involved, the descent trace.
fn run_estimator(
    config: &ExperimentConfig,
    curves: &[shiftmean_core::PeriodicSignal],
    spec: &EstimatorSpec,
) -> Result<(EstimateResult, Option<DescentTrace>)> {
    let grid = curves
        .first()
        .ok_or_else(|| Error::Parameter("dataset is empty".into()))?
        .grid_size();
    let matrix = CurveCoeffsMatrix::from_signals(curves, grid / 2 - 1)?;
    let n = matrix.n_curves();
    match spec {
        EstimatorSpec::DirectMean => {
            let f = direct_mean(curves)?;
            let theta = shiftmean_core::fourier::to_fourier(&f, grid / 2 - 1)?;
            let meta = shiftmean_core::estimators::EstimateMeta {
                estimator: "direct_mean".into(),
                n,
                eps_hat: None,
                eta: None,
                j0: None,
                j1: None,
                ell0: None,
                zeroed_freqs: vec![],
                thresholds: vec![],
                cutoff_m: None,
                warnings: vec![],
            };
            Ok((EstimateResult { f_hat: f, theta_hat: theta, wavelet: None, meta }, None))
        }
        EstimatorSpec::SpectralCutoff { m, smoothness } => {
            let m = match (m, smoothness) {
                (Some(m), _) => *m,
                (None, Some(sp)) => default_cutoff(n, *sp)?,
                (None, None) => {
                    return Err(Error::Parameter(
                        "field m: spectral_cutoff needs m or smoothness".into(),
                    ))
                }
            };
            let ctilde = sample_mean_coeffs(&matrix)?;
            let dec = deconvolve(&ctilde, &config.density, default_known_floor())?;
            Ok((spectral_cutoff(&dec.theta, m, grid, n)?, None))
        }
        EstimatorSpec::HardThreshold { eta, levels } => {
            let policy = ThresholdPolicy::new(*eta, *levels)?;
            let out = hard_threshold_estimate(&matrix, &config.density, config.eps(), &policy)?;
            Ok((out, None))
        }
        EstimatorSpec::Fn1 { eta, ell0, levels } => {
            let (shifts, trace) =
                estimate_shifts(&matrix, &DescentConfig { ell0: *ell0, ..Default::default() })?;
            let eps_hat = pooled_eps(&matrix, grid)?;
            let policy = ThresholdPolicy::new(*eta, *levels)?;
            let out = estimate_fn1(&matrix, shifts.as_slice(), eps_hat, &policy, *ell0)?;
            Ok((out, Some(trace)))
        }
        EstimatorSpec::Fn2 { eta, ell0, levels } => {
            let (shifts, trace) =
                estimate_shifts(&matrix, &DescentConfig { ell0: *ell0, ..Default::default() })?;
            let eps_hat = pooled_eps(&matrix, grid)?;
            let policy = ThresholdPolicy::new(*eta, *levels)?;
            let out = estimate_fn2(&matrix, shifts.as_slice(), eps_hat, &policy, *ell0)?;
            Ok((out, Some(trace)))
        }
        EstimatorSpec::FrechetMean { ell0 } => {
            let (shifts, trace) =
                estimate_shifts(&matrix, &DescentConfig { ell0: *ell0, ..Default::default() })?;
            let out = frechet_mean(&matrix, &shifts, *ell0)?;
            Ok((out, Some(trace)))
        }
        EstimatorSpec::Procrustean { i_max, refine } => {
            let (f, _shifts) =
                procrustean_mean(curves, &ProcrustesConfig { i_max: *i_max, refine: *refine })?;
            let theta = shiftmean_core::fourier::to_fourier(&f, grid / 2 - 1)?;
            let meta = shiftmean_core::estimators::EstimateMeta {
                estimator: "procrustean".into(),
                n,
                eps_hat: None,
                eta: None,
                j0: None,
                j1: None,
                ell0: None,
                zeroed_freqs: vec![],
                thresholds: vec![],
                cutoff_m: None,
                warnings: vec![],
            };
            Ok((EstimateResult { f_hat: f, theta_hat: theta, wavelet: None, meta }, None))
        }
    }
}

fn pooled_eps(matrix: &CurveCoeffsMatrix, grid: usize) -> Result<f64> {
    let j1 = WaveletBasisSpec::grid_ceiling(grid);
    let spec = WaveletBasisSpec::new(j1.min(3), j1)?;
    Ok(estimate_noise_variance_pooled(matrix, &spec)?.sqrt())
}

/// One replication of the comparison figure for one signal: the mean
/// pattern, a 10-curve sample, and the four competing estimates.
fn compare_one_signal(config: &ExperimentConfig, out_dir: &Path, threads: Option<usize>) -> Result<()> {
    let name = config.signal.name();
    let data = simulate(config, 0)?;
    io::write_signal_csv(&out_dir.join(format!("{name}_mean_pattern.csv")), &data.truth)?;
    let sample: Vec<_> = data.curves.iter().take(10).cloned().collect();
    io::write_dataset_csv(&out_dir.join(format!("{name}_sample.csv")), &sample)?;

    let panels: [(&str, EstimatorSpec); 4] = [
        ("direct_mean", EstimatorSpec::DirectMean),
        (
            "fn1",
            EstimatorSpec::Fn1 {
                eta: 1.5,
                ell0: 3,
                levels: shiftmean_core::estimators::LevelRule::Explicit { j0: 3, j1: 7 },
            },
        ),
        (
            "fn2",
            EstimatorSpec::Fn2 {
                eta: 1.5,
                ell0: 3,
                levels: shiftmean_core::estimators::LevelRule::Explicit { j0: 3, j1: 7 },
            },
        ),
        ("procrustean", EstimatorSpec::Procrustean { i_max: 3, refine: true }),
    ];
    for (panel, spec) in &panels {
        let (result, _) = run_estimator(config, &data.curves, spec)?;
        io::write_signal_csv(&out_dir.join(format!("{name}_{panel}.csv")), &result.f_hat)?;
    }

    // A small risk table accompanies the panels so the qualitative figure
    // comparison has numbers next to it.
    let mut risk_config = config.clone();
    risk_config.replications = config.replications.min(10);
    let report = run_risk_study(&risk_config, threads)?;
    io::write_risk_csv(&out_dir.join(format!("{name}_risk.csv")), &report)?;
    Ok(())
}
