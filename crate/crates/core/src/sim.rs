//! Simulation of the randomly shifted curves model and experiment
//! configuration.
//!
//! Every replication draws from its own RNG stream derived by hashing the
//! master seed with the replication index, so results are bit-identical no
//! matter how replications are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::cyclic_shift;
use crate::density::ShiftDensity;
use crate::error::{Error, Result};
use crate::estimators::{LevelRule, SmoothnessParams};
use crate::fourier::{from_fourier, to_fourier, PeriodicSignal};
use crate::registration::ShiftVector;
use crate::signals::{test_signal, SignalKind};

/// One estimator entry of an experiment, with its per-estimator parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "estimator", rename_all = "snake_case")]
pub enum EstimatorSpec {
    /// Plain average of the observed curves.
    DirectMean,
    /// Linear spectral cut-off at `m`, or at the nonadaptive default rule
    /// when only smoothness parameters are given.
    SpectralCutoff {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        m: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        smoothness: Option<SmoothnessParams>,
    },
    /// Hard-threshold wavelet estimator with the shift density known.
    HardThreshold {
        eta: f64,
        #[serde(default)]
        levels: LevelRule,
    },
    /// Unknown-density estimator: deconvolution by empirical eigenvalues.
    Fn1 {
        eta: f64,
        ell0: usize,
        #[serde(default)]
        levels: LevelRule,
    },
    /// Unknown-density estimator: realignment by estimated shifts.
    Fn2 {
        eta: f64,
        ell0: usize,
        #[serde(default)]
        levels: LevelRule,
    },
    /// Smoothed Fréchet mean (realigned truncated average).
    FrechetMean { ell0: usize },
    /// Procrustean iterative alignment mean.
    Procrustean {
        #[serde(default = "default_imax")]
        i_max: usize,
        #[serde(default = "default_refine")]
        refine: bool,
    },
}

fn default_imax() -> usize {
    3
}

fn default_refine() -> bool {
    true
}

impl EstimatorSpec {
    /// Stable name used in reports and output tables.
    pub fn name(&self) -> String {
        match self {
            EstimatorSpec::DirectMean => "direct_mean".into(),
            EstimatorSpec::SpectralCutoff { m: Some(m), .. } => format!("spectral_cutoff_{m}"),
            EstimatorSpec::SpectralCutoff { .. } => "spectral_cutoff".into(),
            EstimatorSpec::HardThreshold { .. } => "hard_threshold".into(),
            EstimatorSpec::Fn1 { .. } => "fn1".into(),
            EstimatorSpec::Fn2 { .. } => "fn2".into(),
            EstimatorSpec::FrechetMean { .. } => "frechet_mean".into(),
            EstimatorSpec::Procrustean { .. } => "procrustean".into(),
        }
    }
}

/// Full description of one simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub signal: SignalKind,
    /// Number of curves per replication.
    pub n: usize,
    /// Grid size `N = 2^J`.
    pub grid_size: usize,
    pub density: ShiftDensity,
    /// Per-sample noise standard deviation; the white-noise level is
    /// `eps = noise_sd / sqrt(N)`.
    pub noise_sd: f64,
    pub estimators: Vec<EstimatorSpec>,
    pub replications: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Parameter("field n: need at least one curve".into()));
        }
        if self.grid_size < 8 || !self.grid_size.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "field grid_size: must be a power of two >= 8, got {}",
                self.grid_size
            )));
        }
        if self.replications == 0 {
            return Err(Error::Parameter("field replications: must be >= 1".into()));
        }
        if !(self.noise_sd >= 0.0) {
            return Err(Error::Parameter(format!(
                "field noise_sd: must be >= 0, got {}",
                self.noise_sd
            )));
        }
        if self.estimators.is_empty() {
            return Err(Error::Parameter("field estimators: list is empty".into()));
        }
        Ok(())
    }

    /// White-noise level `eps = noise_sd / sqrt(N)` of this configuration.
    pub fn eps(&self) -> f64 {
        self.noise_sd / (self.grid_size as f64).sqrt()
    }

    /// The simulation-study defaults: n = 200 Laplace(0.1)-shifted curves on
    /// 512 points, noise at root signal-to-noise 7, the direct mean, both
    /// unknown-density wavelet estimators, the Fréchet mean and the
    /// Procrustean mean, 50 replications.
    pub fn paper_defaults(signal: SignalKind) -> Self {
        ExperimentConfig {
            signal,
            n: 200,
            grid_size: 512,
            density: ShiftDensity::laplace(0.1),
            noise_sd: 1.0 / 7.0,
            estimators: vec![
                EstimatorSpec::DirectMean,
                EstimatorSpec::Fn1 {
                    eta: 1.5,
                    ell0: 3,
                    levels: LevelRule::Explicit { j0: 3, j1: 7 },
                },
                EstimatorSpec::Fn2 {
                    eta: 1.5,
                    ell0: 3,
                    levels: LevelRule::Explicit { j0: 3, j1: 7 },
                },
                EstimatorSpec::FrechetMean { ell0: 3 },
                EstimatorSpec::Procrustean { i_max: 3, refine: true },
            ],
            replications: 50,
            seed: 42,
        }
    }
}

/// One simulated dataset: the observed curves, the true shifts, and the
/// band-limited truth the estimators are judged against.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub curves: Vec<PeriodicSignal>,
    pub true_shifts: ShiftVector,
    /// The mean pattern actually fed to the model: the test signal projected
    /// onto frequencies `|l| <= N/2 - 1`, for which the spectral shift
    /// operator is exact.
    pub truth: PeriodicSignal,
    /// White-noise level `eps = noise_sd / sqrt(N)`.
    pub eps: f64,
    /// Replication index that seeded the RNG stream.
    pub replication: u64,
}

/// Deterministic per-replication RNG stream.
pub fn replication_rng(seed: u64, replication: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(replication ^ 0x9E37_79B9_7F4A_7C15)))
}

fn splitmix(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Simulate one replication: `Y_m[i] = f(x_i - tau_m) + noise_sd * z_{m,i}`
/// with `tau_m` drawn from the shift density and standard normal noise.
/// Fully deterministic given `(config.seed, replication)`.
pub fn simulate(config: &ExperimentConfig, replication: u64) -> Result<Dataset> {
    config.validate()?;
    let mut rng = replication_rng(config.seed, replication);
    let n_grid = config.grid_size;

    let raw = test_signal(config.signal, n_grid)?;
    let truth = from_fourier(&to_fourier(&raw, n_grid / 2 - 1)?, n_grid)?;

    let shifts: Vec<f64> = (0..config.n).map(|_| config.density.sample(&mut rng)).collect();
    let mut curves = Vec::with_capacity(config.n);
    for &tau in &shifts {
        let shifted = cyclic_shift(&truth, tau)?;
        let samples: Vec<f64> = shifted
            .samples()
            .iter()
            .map(|&v| v + config.noise_sd * rng.sample::<f64, _>(StandardNormal))
            .collect();
        curves.push(PeriodicSignal::new(samples)?);
    }

    Ok(Dataset {
        curves,
        true_shifts: ShiftVector::new(shifts),
        truth,
        eps: config.eps(),
        replication,
    })
}

/// Mean integrated squared error on the grid: `(1/N) sum_i (a_i - b_i)^2`.
pub fn mise(f_hat: &PeriodicSignal, f_true: &PeriodicSignal) -> Result<f64> {
    if f_hat.grid_size() != f_true.grid_size() {
        return Err(Error::Parameter(format!(
            "grid mismatch: {} vs {}",
            f_hat.grid_size(),
            f_true.grid_size()
        )));
    }
    let n = f_hat.grid_size() as f64;
    Ok(f_hat
        .samples()
        .iter()
        .zip(f_true.samples())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / n)
}
