//! Monte Carlo risk studies and rate diagnostics.
//!
//! Replications run as a deterministic parallel map: each one owns an RNG
//! stream derived from (seed, replication index) and results are aggregated
//! in index order, so reports are identical for any thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::time::Instant;

use crate::baselines::{direct_mean, procrustean_mean, ProcrustesConfig};
use crate::error::{Error, Result};
use crate::estimators::{
    default_cutoff, estimate_fn1, estimate_fn2, estimate_noise_variance_pooled,
    hard_threshold_estimate, spectral_cutoff, SmoothnessParams, ThresholdPolicy,
};
use crate::fourier::{deconvolve, default_known_floor, sample_mean_coeffs, CurveCoeffsMatrix};
use crate::meyer::WaveletBasisSpec;
use crate::registration::{estimate_shifts, frechet_mean, DescentConfig, ShiftVector};
use crate::sim::{mise, simulate, Dataset, EstimatorSpec, ExperimentConfig};

/// Risk summary for one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorRisk {
    pub estimator: String,
    pub mean_mise: f64,
    /// Sample standard deviation of per-replication MISE over
    /// `sqrt(replications)`; absent with a single replication.
    pub std_error: Option<f64>,
    pub replications_used: usize,
    pub failures: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failure_messages: Vec<String>,
}

/// Full result of a Monte Carlo risk study.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RiskReport {
    pub config: ExperimentConfig,
    pub results: Vec<EstimatorRisk>,
    /// Wall-clock duration; deliberately not serialized so that report
    /// artifacts are byte-identical across reruns and thread counts.
    #[serde(skip)]
    pub wall_clock_seconds: Option<f64>,
}

/// Per-replication context: the simulated data, its spectral representation,
/// and lazily computed shared intermediates (estimated shifts per cut-off,
/// pooled noise variance).
struct ReplicationContext<'a> {
    config: &'a ExperimentConfig,
    data: Dataset,
    curves: CurveCoeffsMatrix,
    shift_cache: Vec<(usize, ShiftVector)>,
    eps_hat: Option<f64>,
}

impl<'a> ReplicationContext<'a> {
    fn new(config: &'a ExperimentConfig, replication: u64) -> Result<Self> {
        let data = simulate(config, replication)?;
        let curves = CurveCoeffsMatrix::from_signals(&data.curves, config.grid_size / 2 - 1)?;
        Ok(Self { config, data, curves, shift_cache: Vec::new(), eps_hat: None })
    }

    fn shifts(&mut self, ell0: usize) -> Result<ShiftVector> {
        if let Some((_, cached)) = self.shift_cache.iter().find(|(l, _)| *l == ell0) {
            return Ok(cached.clone());
        }
        let config = DescentConfig { ell0, ..DescentConfig::default() };
        let (shifts, _trace) = estimate_shifts(&self.curves, &config)?;
        self.shift_cache.push((ell0, shifts.clone()));
        Ok(shifts)
    }

    fn eps_hat(&mut self) -> Result<f64> {
        if let Some(v) = self.eps_hat {
            return Ok(v);
        }
        let j1 = WaveletBasisSpec::grid_ceiling(self.config.grid_size);
        let spec = WaveletBasisSpec::new(j1.min(3), j1)?;
        let v = estimate_noise_variance_pooled(&self.curves, &spec)?.sqrt();
        self.eps_hat = Some(v);
        Ok(v)
    }

    fn run(&mut self, spec: &EstimatorSpec) -> Result<f64> {
        let truth = self.data.truth.clone();
        match spec {
            EstimatorSpec::DirectMean => {
                let f = direct_mean(&self.data.curves)?;
                mise(&f, &truth)
            }
            EstimatorSpec::SpectralCutoff { m, smoothness } => {
                let m = match (m, smoothness) {
                    (Some(m), _) => *m,
                    (None, Some(sp)) => default_cutoff(self.curves.n_curves(), *sp)?,
                    (None, None) => {
                        return Err(Error::Parameter(
                            "field m: spectral_cutoff needs m or smoothness".into(),
                        ))
                    }
                };
                let ctilde = sample_mean_coeffs(&self.curves)?;
                let dec = deconvolve(&ctilde, &self.config.density, default_known_floor())?;
                let out = spectral_cutoff(
                    &dec.theta,
                    m,
                    self.config.grid_size,
                    self.curves.n_curves(),
                )?;
                mise(&out.f_hat, &truth)
            }
            EstimatorSpec::HardThreshold { eta, levels } => {
                let policy = ThresholdPolicy::new(*eta, *levels)?;
                let out = hard_threshold_estimate(
                    &self.curves,
                    &self.config.density,
                    self.data.eps,
                    &policy,
                )?;
                mise(&out.f_hat, &truth)
            }
            EstimatorSpec::Fn1 { eta, ell0, levels } => {
                let shifts = self.shifts(*ell0)?;
                let eps_hat = self.eps_hat()?;
                let policy = ThresholdPolicy::new(*eta, *levels)?;
                let out =
                    estimate_fn1(&self.curves, shifts.as_slice(), eps_hat, &policy, *ell0)?;
                mise(&out.f_hat, &truth)
            }
            EstimatorSpec::Fn2 { eta, ell0, levels } => {
                let shifts = self.shifts(*ell0)?;
                let eps_hat = self.eps_hat()?;
                let policy = ThresholdPolicy::new(*eta, *levels)?;
                let out =
                    estimate_fn2(&self.curves, shifts.as_slice(), eps_hat, &policy, *ell0)?;
                mise(&out.f_hat, &truth)
            }
            EstimatorSpec::FrechetMean { ell0 } => {
                let shifts = self.shifts(*ell0)?;
                let out = frechet_mean(&self.curves, &shifts, *ell0)?;
                mise(&out.f_hat, &truth)
            }
            EstimatorSpec::Procrustean { i_max, refine } => {
                let config = ProcrustesConfig { i_max: *i_max, refine: *refine };
                let (f, _) = procrustean_mean(&self.data.curves, &config)?;
                mise(&f, &truth)
            }
        }
    }
}

fn run_replication(
    config: &ExperimentConfig,
    replication: u64,
) -> Result<Vec<std::result::Result<f64, String>>> {
    let mut ctx = ReplicationContext::new(config, replication)?;
    Ok(config
        .estimators
        .iter()
        .map(|spec| ctx.run(spec).map_err(|e| e.to_string()))
        .collect())
}

/// Run every configured estimator over `config.replications` independent
/// datasets and aggregate per-estimator MISE. Estimator failures in single
/// replications are counted and excluded, never silently dropped.
pub fn run_risk_study(config: &ExperimentConfig, threads: Option<usize>) -> Result<RiskReport> {
    config.validate()?;
    let start = Instant::now();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
    let per_rep: Vec<Vec<std::result::Result<f64, String>>> = pool.install(|| {
        (0..config.replications as u64)
            .into_par_iter()
            .map(|r| run_replication(config, r))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut results = Vec::with_capacity(config.estimators.len());
    for (idx, spec) in config.estimators.iter().enumerate() {
        let mut values = Vec::new();
        let mut failures = 0usize;
        let mut messages: Vec<String> = Vec::new();
        for rep in &per_rep {
            match &rep[idx] {
                Ok(v) => values.push(*v),
                Err(msg) => {
                    failures += 1;
                    if messages.len() < 3 && !messages.contains(msg) {
                        messages.push(msg.clone());
                    }
                }
            }
        }
        if values.is_empty() {
            return Err(Error::Numerical(format!(
                "estimator {} failed in every replication: {}",
                spec.name(),
                messages.join("; ")
            )));
        }
        let used = values.len();
        let mean = values.iter().sum::<f64>() / used as f64;
        let std_error = if used >= 2 && config.replications > 1 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
                / (used - 1) as f64;
            Some((var / used as f64).sqrt())
        } else {
            None
        };
        results.push(EstimatorRisk {
            estimator: spec.name(),
            mean_mise: mean,
            std_error,
            replications_used: used,
            failures,
            failure_messages: messages,
        });
    }

    Ok(RiskReport {
        config: config.clone(),
        results,
        wall_clock_seconds: Some(start.elapsed().as_secs_f64()),
    })
}

/// One point of a rate study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub n: usize,
    pub mean_mise: f64,
    pub std_error: Option<f64>,
}

/// Least-squares slope of `log MISE` against `log n`, with the theoretical
/// exponent for comparison when smoothness parameters are supplied.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateReport {
    pub estimator: String,
    pub points: Vec<RatePoint>,
    pub slope: f64,
    pub theoretical_slope: Option<f64>,
    #[serde(skip)]
    pub wall_clock_seconds: Option<f64>,
}

/// Run the known-density hard-threshold estimator across a grid of sample
/// sizes and fit the empirical rate slope. Needs at least 3 grid points
/// spanning a decade.
pub fn rate_study(
    base: &ExperimentConfig,
    n_grid: &[usize],
    smoothness: Option<SmoothnessParams>,
    threads: Option<usize>,
) -> Result<RateReport> {
    if n_grid.len() < 3 {
        return Err(Error::Parameter("field n_grid: need at least 3 points".into()));
    }
    let lo = *n_grid.iter().min().unwrap();
    let hi = *n_grid.iter().max().unwrap();
    if lo == 0 || (hi as f64) < 10.0 * lo as f64 {
        return Err(Error::Parameter(
            "field n_grid: points must span at least one decade".into(),
        ));
    }

    let estimator = base
        .estimators
        .iter()
        .find(|e| matches!(e, EstimatorSpec::HardThreshold { .. }))
        .cloned()
        .unwrap_or(EstimatorSpec::HardThreshold {
            eta: 1.5,
            levels: Default::default(),
        });

    let start = Instant::now();
    let mut points = Vec::with_capacity(n_grid.len());
    for (i, &n) in n_grid.iter().enumerate() {
        let config = ExperimentConfig {
            n,
            estimators: vec![estimator.clone()],
            // Decorrelate grid points without touching the master seed.
            seed: base.seed.wrapping_add(i as u64),
            ..base.clone()
        };
        let report = run_risk_study(&config, threads)?;
        let risk = &report.results[0];
        points.push(RatePoint {
            n,
            mean_mise: risk.mean_mise,
            std_error: risk.std_error,
        });
    }

    let xs: Vec<f64> = points.iter().map(|p| (p.n as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.mean_mise.ln()).collect();
    let slope = least_squares_slope(&xs, &ys);

    Ok(RateReport {
        estimator: estimator.name(),
        points,
        slope,
        theoretical_slope: smoothness.map(|sp| sp.rate_exponent()),
        wall_clock_seconds: Some(start.elapsed().as_secs_f64()),
    })
}

fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ShiftDensity;
    use crate::signals::SignalKind;

    fn sanity_config() -> ExperimentConfig {
        ExperimentConfig {
            signal: SignalKind::Wave,
            n: 20,
            grid_size: 128,
            density: ShiftDensity::Dirac,
            noise_sd: 0.2,
            estimators: vec![EstimatorSpec::DirectMean],
            replications: 200,
            seed: 99,
        }
    }

    #[test]
    fn direct_mean_risk_matches_closed_form() {
        // With no shifts, the direct mean's MISE is the variance of the
        // averaged noise: noise_sd^2 / n.
        let config = sanity_config();
        let report = run_risk_study(&config, Some(2)).unwrap();
        let risk = &report.results[0];
        let want = config.noise_sd * config.noise_sd / config.n as f64;
        let se = risk.std_error.unwrap();
        assert!(
            (risk.mean_mise - want).abs() <= 3.0 * se,
            "mise {} vs analytic {want} (se {se})",
            risk.mean_mise
        );
    }

    #[test]
    fn single_replication_has_no_std_error() {
        let config = ExperimentConfig { replications: 1, ..sanity_config() };
        let report = run_risk_study(&config, Some(1)).unwrap();
        assert!(report.results[0].std_error.is_none());
        assert_eq!(report.results[0].replications_used, 1);
    }

    #[test]
    fn reports_identical_across_thread_counts() {
        let config = ExperimentConfig { replications: 16, ..sanity_config() };
        let a = run_risk_study(&config, Some(1)).unwrap();
        let b = run_risk_study(&config, Some(4)).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn std_error_shrinks_with_replications() {
        let base = sanity_config();
        let small = run_risk_study(&ExperimentConfig { replications: 50, ..base.clone() }, None).unwrap();
        let large = run_risk_study(&ExperimentConfig { replications: 200, seed: base.seed, ..base }, None).unwrap();
        let ratio = large.results[0].std_error.unwrap() / small.results[0].std_error.unwrap();
        // Expect roughly 1/sqrt(4) = 0.5.
        assert!((ratio - 0.5).abs() < 0.3 * 0.5, "ratio {ratio}");
    }

    #[test]
    fn rate_grid_validation() {
        let base = sanity_config();
        assert!(rate_study(&base, &[50, 100], None, None).is_err());
        assert!(rate_study(&base, &[50, 100, 200], None, None).is_err());
    }
}
