//! Estimation of a common mean pattern from noisy, randomly shifted
//! periodic curves.
//!
//! The observation model is `Y_m = f(. - tau_m) + noise` for i.i.d. random
//! shifts `tau_m` with density `g`. Averaging over curves convolves `f` with
//! the shift density, so recovering `f` is a statistical inverse problem
//! whose difficulty is governed by the decay of the Fourier coefficients of
//! `g`. This crate implements:
//!
//! - the spectral representation of curves and the deconvolution step
//!   ([`fourier`], [`density`]);
//! - the periodized Meyer wavelet basis with exact frequency-domain
//!   analysis and synthesis ([`meyer`]);
//! - linear spectral cut-off and adaptive hard-threshold estimators of the
//!   mean pattern, for known and estimated shift distributions
//!   ([`estimators`]);
//! - shift estimation by minimizing a Fréchet-mean criterion with projected
//!   gradient descent, plus the Van Trees lower-bound diagnostic
//!   ([`registration`]);
//! - reference estimators: the direct mean and the Procrustean mean
//!   ([`baselines`]);
//! - a deterministic simulation and Monte Carlo risk harness ([`sim`],
//!   [`risk`]) with CSV/JSON artifacts ([`io`]).

pub mod baselines;
pub mod density;
pub mod error;
pub mod estimators;
pub mod fourier;
pub mod io;
pub mod meyer;
pub mod registration;
pub mod risk;
pub mod signals;
pub mod sim;

pub use density::ShiftDensity;
pub use error::{Error, Result};
pub use estimators::{EstimateResult, LinearFilter, SmoothnessParams, ThresholdPolicy};
pub use fourier::{CurveCoeffsMatrix, FourierCoeffs, PeriodicSignal};
pub use meyer::{WaveletBasisSpec, WaveletCoeffs};
pub use registration::{DescentConfig, DescentTrace, ShiftVector};
pub use signals::SignalKind;
pub use sim::ExperimentConfig;
