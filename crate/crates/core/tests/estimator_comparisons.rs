//! Monte Carlo comparisons between estimators and the model-level
//! statistical invariants that need simulated replications.

use rayon::prelude::*;

use num_complex::Complex64;
use shiftmean_core::baselines::{direct_mean, procrustean_mean, ProcrustesConfig};
use shiftmean_core::estimators::{
    estimate_fn1, estimate_fn2, estimate_noise_variance_pooled, hard_threshold_estimate, sigma_j,
    threshold, LevelRule, SmoothnessParams, ThresholdPolicy,
};
use shiftmean_core::fourier::{
    deconvolve, default_known_floor, sample_mean_coeffs, to_fourier, CurveCoeffsMatrix,
};
use shiftmean_core::meyer::{detail_level_coefficients, omega, psi_fourier, WaveletBasisSpec};
use shiftmean_core::registration::{estimate_shifts, frechet_mean, DescentConfig};
use shiftmean_core::risk::{rate_study, run_risk_study};
use shiftmean_core::signals::SignalKind;
use shiftmean_core::sim::{mise, simulate, EstimatorSpec, ExperimentConfig};
use shiftmean_core::ShiftDensity;

fn study(signal: SignalKind, n: usize, estimators: Vec<EstimatorSpec>, reps: usize) -> Vec<f64> {
    let config = ExperimentConfig {
        signal,
        n,
        grid_size: 512,
        density: ShiftDensity::laplace(0.1),
        noise_sd: 1.0 / 7.0,
        estimators,
        replications: reps,
        seed: 77,
    };
    run_risk_study(&config, None)
        .unwrap()
        .results
        .iter()
        .map(|r| r.mean_mise)
        .collect()
}

#[test]
fn fn1_beats_direct_mean_on_blocks() {
    let levels = LevelRule::Explicit { j0: 3, j1: 7 };
    let mises = study(
        SignalKind::Blocks,
        200,
        vec![
            EstimatorSpec::DirectMean,
            EstimatorSpec::Fn1 { eta: 1.5, ell0: 3, levels },
        ],
        15,
    );
    assert!(mises[1] < mises[0], "fn1 {:.4e} vs direct {:.4e}", mises[1], mises[0]);
}

#[test]
fn fn1_mise_decreases_with_n() {
    let levels = LevelRule::Explicit { j0: 3, j1: 7 };
    let est = vec![EstimatorSpec::Fn1 { eta: 1.5, ell0: 3, levels }];
    let small = study(SignalKind::Blocks, 50, est.clone(), 10)[0];
    let large = study(SignalKind::Blocks, 800, est, 10)[0];
    assert!(large < small, "fn1 MISE at n=800 ({large:.4e}) vs n=50 ({small:.4e})");
}

#[test]
fn hard_threshold_beats_direct_mean_on_heavisine() {
    let mises = study(
        SignalKind::HeaviSine,
        200,
        vec![
            EstimatorSpec::DirectMean,
            EstimatorSpec::HardThreshold { eta: 1.5, levels: LevelRule::default() },
        ],
        15,
    );
    assert!(mises[1] < mises[0], "hard threshold {:.4e} vs direct {:.4e}", mises[1], mises[0]);
}

#[test]
fn frechet_mean_sits_between_direct_and_fn2() {
    let levels = LevelRule::Explicit { j0: 3, j1: 7 };
    let mises = study(
        SignalKind::HeaviSine,
        200,
        vec![
            EstimatorSpec::DirectMean,
            EstimatorSpec::FrechetMean { ell0: 3 },
            EstimatorSpec::Fn2 { eta: 1.5, ell0: 3, levels },
        ],
        15,
    );
    assert!(
        mises[2] < mises[1] && mises[1] < mises[0],
        "expected fn2 < frechet < direct, got fn2 {:.4e}, frechet {:.4e}, direct {:.4e}",
        mises[2],
        mises[1],
        mises[0]
    );
}

#[test]
fn procrustean_beats_direct_mean_on_blocks() {
    let mises = study(
        SignalKind::Blocks,
        200,
        vec![
            EstimatorSpec::DirectMean,
            EstimatorSpec::Procrustean { i_max: 3, refine: true },
        ],
        15,
    );
    assert!(mises[1] < mises[0], "procrustean {:.4e} vs direct {:.4e}", mises[1], mises[0]);
}

#[test]
fn fn2_with_scrambled_shifts_is_worse_than_direct() {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let config = ExperimentConfig {
        signal: SignalKind::Blocks,
        n: 50,
        grid_size: 512,
        density: ShiftDensity::laplace(0.1),
        noise_sd: 1.0 / 7.0,
        estimators: vec![EstimatorSpec::DirectMean],
        replications: 1,
        seed: 13,
    };
    let mut worse = 0;
    for rep in 0..5u64 {
        let data = simulate(&config, rep).unwrap();
        let matrix = CurveCoeffsMatrix::from_signals(&data.curves, 255).unwrap();
        let (shifts, _) = estimate_shifts(&matrix, &DescentConfig::default()).unwrap();
        let mut permuted = shifts.as_slice().to_vec();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(rep);
        permuted.shuffle(&mut rng);

        let spec = WaveletBasisSpec::new(3, 7).unwrap();
        let eps_hat = estimate_noise_variance_pooled(&matrix, &spec).unwrap().sqrt();
        let policy =
            ThresholdPolicy::new(1.5, LevelRule::Explicit { j0: 3, j1: 7 }).unwrap();
        let out = estimate_fn2(&matrix, &permuted, eps_hat, &policy, 3).unwrap();
        let scrambled = mise(&out.f_hat, &data.truth).unwrap();
        let direct = mise(&direct_mean(&data.curves).unwrap(), &data.truth).unwrap();
        if scrambled > direct {
            worse += 1;
        }
    }
    assert!(worse >= 4, "scrambled realignment beat the direct mean in {}/5 runs", 5 - worse);
}

#[test]
fn rate_slope_bracket_without_shifts() {
    // Smooth signal, no shifts: the empirical rate slope is negative and
    // sits in the wide bracket [-1.0, -0.25].
    let base = ExperimentConfig {
        signal: SignalKind::Wave,
        n: 50,
        grid_size: 256,
        density: ShiftDensity::Dirac,
        noise_sd: 1.0 / 7.0,
        estimators: vec![EstimatorSpec::HardThreshold {
            eta: 1.5,
            levels: LevelRule::default(),
        }],
        replications: 30,
        seed: 9,
    };
    let report = rate_study(
        &base,
        &[50, 100, 200, 400, 800, 1600],
        Some(SmoothnessParams::new(2.0, 0.0).unwrap()),
        None,
    )
    .unwrap();
    assert!(report.slope < 0.0);
    assert!(
        (-1.0..=-0.25).contains(&report.slope),
        "slope {:.3} outside [-1.0, -0.25]",
        report.slope
    );
}

/// The variance of empirical wavelet coefficients grows with level like
/// `2^{2 j nu} / n`: the calibration constant fitted at the coarsest detail
/// level bounds the higher levels within a factor 8.
#[test]
fn empirical_coefficient_variance_scaling() {
    let grid = 256usize;
    let eps = 0.05;
    let n = 100usize;
    let nu = 2.0;
    let density = ShiftDensity::laplace(0.1);
    let config = ExperimentConfig {
        signal: SignalKind::HeaviSine,
        n,
        grid_size: grid,
        density,
        noise_sd: eps * (grid as f64).sqrt(),
        estimators: vec![EstimatorSpec::DirectMean],
        replications: 1,
        seed: 14,
    };
    let levels: Vec<u32> = (3..=6).collect();

    // Per replication, the detail coefficients of the deconvolved average at
    // each level.
    let samples: Vec<Vec<Vec<f64>>> = (0..2000u64)
        .into_par_iter()
        .map(|rep| {
            let data = simulate(&config, rep).unwrap();
            let m = CurveCoeffsMatrix::from_signals(&data.curves, grid / 2 - 1).unwrap();
            let ctilde = sample_mean_coeffs(&m).unwrap();
            let dec = deconvolve(&ctilde, &density, default_known_floor()).unwrap();
            levels
                .iter()
                .map(|&j| detail_level_coefficients(&dec.theta, j, 3).unwrap())
                .collect()
        })
        .collect();

    let reps = samples.len() as f64;
    let mut constants = Vec::new();
    for (li, &j) in levels.iter().enumerate() {
        let width = samples[0][li].len();
        let mut max_var = 0.0f64;
        for k in 0..width {
            let mean = samples.iter().map(|s| s[li][k]).sum::<f64>() / reps;
            let var = samples.iter().map(|s| (s[li][k] - mean).powi(2)).sum::<f64>() / (reps - 1.0);
            max_var = max_var.max(var);
        }
        constants.push(max_var * n as f64 / 2.0f64.powf(2.0 * j as f64 * nu));
    }
    for (li, c) in constants.iter().enumerate().skip(1) {
        assert!(
            *c <= 8.0 * constants[0],
            "level {}: calibration constant {c:.3e} vs 8 x {:.3e} at the coarsest level",
            levels[li],
            constants[0]
        );
    }
}

/// Periodization identity with the basis functions themselves as the
/// periodic test functions: integrating a periodized Meyer wavelet against
/// the shift density over the real line equals integrating it against the
/// periodized density over one period.
#[test]
fn periodization_identity_for_basis_functions() {
    let density = ShiftDensity::laplace(0.1);
    // Evaluate h(x) = psi_{j,k}(x) through its finite Fourier series.
    let eval = |j: u32, k: u32, x: f64| -> f64 {
        omega(j)
            .indices
            .iter()
            .map(|&ell| {
                (psi_fourier(j, k, ell).unwrap()
                    * Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * ell as f64 * x))
                .re
            })
            .sum()
    };
    for (j, k) in [(3u32, 2u32), (4, 5)] {
        // Left: integral over R (tails negligible beyond +-3).
        let steps = 65_536;
        let (lo, hi) = (-3.0, 3.0);
        let h1 = (hi - lo) / steps as f64;
        let f1 = |x: f64| eval(j, k, x) * density.pdf(x);
        let mut left = f1(lo) + f1(hi);
        for i in 1..steps {
            left += f1(lo + i as f64 * h1) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        left *= h1 / 3.0;

        // Right: one period against the periodized density.
        let h2 = 1.0 / steps as f64;
        let f2 = |x: f64| eval(j, k, x) * density.periodized(x).unwrap();
        let mut right = f2(0.0) + f2(1.0);
        for i in 1..steps {
            right += f2(i as f64 * h2) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        right *= h2 / 3.0;

        assert!(
            (left - right).abs() < 1e-6,
            "psi({j},{k}): integral over R {left:.8e} vs periodized {right:.8e}"
        );
    }
}

/// Level thresholds are nondecreasing in j when the density is genuinely
/// ill-posed.
#[test]
fn threshold_monotone_in_level() {
    let density = ShiftDensity::laplace(0.1);
    let eps = 0.01;
    let mut last = 0.0;
    for j in 3..=7u32 {
        let lambda = threshold(200, 1.5, sigma_j(&density, eps, j).unwrap()).unwrap();
        assert!(lambda >= last, "lambda at level {j} decreased: {lambda} < {last}");
        last = lambda;
    }
}

/// The estimate returned by the known-density pipeline re-synthesizes to its
/// own reported wavelet coefficients and carries a deterministic kill mask.
#[test]
fn pipeline_resynthesis_and_meta() {
    let config = ExperimentConfig {
        signal: SignalKind::Bumps,
        n: 40,
        grid_size: 256,
        density: ShiftDensity::laplace(0.1),
        noise_sd: 1.0 / 7.0,
        estimators: vec![EstimatorSpec::DirectMean],
        replications: 1,
        seed: 15,
    };
    let data = simulate(&config, 0).unwrap();
    let matrix = CurveCoeffsMatrix::from_signals(&data.curves, 127).unwrap();
    let policy = ThresholdPolicy::new(1.5, LevelRule::default()).unwrap();
    let out = hard_threshold_estimate(&matrix, &config.density, data.eps, &policy).unwrap();
    assert_eq!(out.meta.estimator, "hard_threshold");
    assert_eq!(out.meta.n, 40);
    assert_eq!(out.meta.j0, Some(3));
    assert_eq!(out.meta.j1, Some(6));
    assert_eq!(out.meta.thresholds.len(), 4);

    // fn1 on the same data zeroes the statistically dead frequencies.
    let (shifts, _) = estimate_shifts(&matrix, &DescentConfig::default()).unwrap();
    let spec = WaveletBasisSpec::new(3, 6).unwrap();
    let eps_hat = estimate_noise_variance_pooled(&matrix, &spec).unwrap().sqrt();
    let fn1 = estimate_fn1(&matrix, shifts.as_slice(), eps_hat, &policy, 3).unwrap();
    assert!(!fn1.meta.zeroed_freqs.is_empty());
    assert_eq!(fn1.meta.ell0, Some(3));

    // The Frechet mean reports its cut-off and produces a band-limited
    // spectrum.
    let fre = frechet_mean(&matrix, &shifts, 3).unwrap();
    assert_eq!(fre.meta.ell0, Some(3));
    for (ell, c) in fre.theta_hat.iter() {
        if ell.abs() > 3 {
            assert_eq!(c, Complex64::ZERO);
        }
    }

    // Procrustean output keeps the grid.
    let (reference, proc_shifts) =
        procrustean_mean(&data.curves, &ProcrustesConfig::default()).unwrap();
    assert_eq!(reference.grid_size(), 256);
    assert_eq!(proc_shifts.len(), 40);

    // Spectral view of the data pipeline round-trips through CSV types.
    let theta = to_fourier(&data.truth, 127).unwrap();
    assert!(theta.conjugate_asymmetry() < 1e-12);
}
