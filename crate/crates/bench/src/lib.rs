//! Shared fixtures for the pipeline benchmarks.

use shiftmean_core::fourier::CurveCoeffsMatrix;
use shiftmean_core::sim::{simulate, EstimatorSpec, ExperimentConfig};
use shiftmean_core::{ShiftDensity, SignalKind};

/// A mid-sized simulated dataset in both time and spectral form.
pub fn fixture(n: usize, grid: usize) -> (ExperimentConfig, Vec<shiftmean_core::PeriodicSignal>, CurveCoeffsMatrix) {
    let config = ExperimentConfig {
        signal: SignalKind::HeaviSine,
        n,
        grid_size: grid,
        density: ShiftDensity::laplace(0.1),
        noise_sd: 1.0 / 7.0,
        estimators: vec![EstimatorSpec::DirectMean],
        replications: 1,
        seed: 7,
    };
    let data = simulate(&config, 0).expect("simulation");
    let matrix = CurveCoeffsMatrix::from_signals(&data.curves, grid / 2 - 1).expect("analysis");
    (config, data.curves, matrix)
}
