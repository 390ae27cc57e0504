//! Periodized Meyer wavelet basis evaluated in the Fourier domain.
//!
//! Meyer wavelets are band-limited, so the periodized basis functions have
//! finitely many nonzero Fourier coefficients and every analysis/synthesis
//! step is an exact finite Plancherel sum. The frequency window of the
//! mother wavelet lives on `1/3 < |xi| < 4/3`, hence level `j` touches only
//! integer frequencies with `2^j/3 < |l| < 2^{j+2}/3`; the scaling window
//! lives on `|xi| < 2/3`.
//!
//! The analysis convention takes `beta_{j,k} = sum_l conj(psi^{j,k}_l)
//! theta_l`, the true inner product against the basis function, so real
//! signals produce real coefficients.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fourier::FourierCoeffs;

/// Value of the auxiliary polynomial shaping the Meyer window.
///
/// Degree `d` gives a window with `d` vanishing derivatives at the junction
/// points; every degree satisfies the complementarity `nu(t) + nu(1-t) = 1`
/// that makes the basis exactly orthonormal.
fn aux_poly(degree: u8, t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    match degree {
        0 => t,
        1 => t * t * (3.0 - 2.0 * t),
        2 => t * t * t * (10.0 - 15.0 * t + 6.0 * t * t),
        _ => t * t * t * t * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t),
    }
}

/// Meyer scaling window `Phi_hat(xi)`: 1 on `|xi| <= 1/3`, a smooth cosine
/// roll-off on `1/3 <= |xi| <= 2/3`, zero beyond.
fn scaling_window(degree: u8, xi: f64) -> f64 {
    let t = xi.abs();
    if t <= 1.0 / 3.0 {
        1.0
    } else if t < 2.0 / 3.0 {
        (PI / 2.0 * aux_poly(degree, 3.0 * t - 1.0)).cos()
    } else {
        0.0
    }
}

/// Modulus of the Meyer wavelet window on `1/3 < |xi| < 4/3`.
fn wavelet_window(degree: u8, xi: f64) -> f64 {
    let t = xi.abs();
    if t <= 1.0 / 3.0 || t >= 4.0 / 3.0 {
        0.0
    } else if t <= 2.0 / 3.0 {
        (PI / 2.0 * aux_poly(degree, 3.0 * t - 1.0)).sin()
    } else {
        (PI / 2.0 * aux_poly(degree, 1.5 * t - 1.0)).cos()
    }
}

/// Basis levels used by an estimator: coarse level `j0`, finest detail level
/// `j1`, and the auxiliary window degree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveletBasisSpec {
    pub j0: u32,
    pub j1: u32,
    pub window_degree: u8,
}

pub const DEFAULT_WINDOW_DEGREE: u8 = 3;

impl WaveletBasisSpec {
    pub fn new(j0: u32, j1: u32) -> Result<Self> {
        if j1 < j0 {
            return Err(Error::Parameter(format!("j1 = {j1} must be >= j0 = {j0}")));
        }
        Ok(Self { j0, j1, window_degree: DEFAULT_WINDOW_DEGREE })
    }

    /// Largest level whose frequency support fits a grid of `n` points, i.e.
    /// the largest `j` with `2^{j+2}/3 < n/2`.
    pub fn grid_ceiling(grid_size: usize) -> u32 {
        let mut j = 0u32;
        while 1u64 << (j + 4) < 3 * grid_size as u64 {
            j += 1;
        }
        j
    }

    /// Largest frequency any basis function of this spec touches.
    pub fn required_max_freq(&self) -> usize {
        // Top of the level-j1 window, exclusive bound 2^{j1+2}/3.
        ((1u64 << (self.j1 + 2)) / 3) as usize
    }

    pub fn validate_for_grid(&self, grid_size: usize) -> Result<()> {
        let ceiling = Self::grid_ceiling(grid_size);
        if self.j1 > ceiling {
            return Err(Error::Parameter(format!(
                "finest level {} exceeds what a grid of {} points supports (max {})",
                self.j1, grid_size, ceiling
            )));
        }
        Ok(())
    }

    pub fn levels(&self) -> impl Iterator<Item = u32> {
        self.j0..=self.j1
    }
}

/// The finite set of integer frequencies where level-`j` wavelets are nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrequencySet {
    pub level: u32,
    pub indices: Vec<i64>,
}

/// Frequency support of the level-`j` wavelets, determined by scanning the
/// window itself. This is the single source of truth for `Omega_j`.
pub fn omega(j: u32) -> FrequencySet {
    let scale = (1u64 << j) as f64;
    let hi = ((4.0 * scale / 3.0).ceil() as i64) + 1;
    let indices = (-hi..=hi)
        .filter(|&ell| wavelet_window(DEFAULT_WINDOW_DEGREE, ell as f64 / scale) > 0.0)
        .collect();
    FrequencySet { level: j, indices }
}

/// Frequency support of the level-`j0` scaling functions.
pub fn omega_scaling(j0: u32) -> FrequencySet {
    let scale = (1u64 << j0) as f64;
    let hi = ((2.0 * scale / 3.0).ceil() as i64) + 1;
    let indices = (-hi..=hi)
        .filter(|&ell| scaling_window(DEFAULT_WINDOW_DEGREE, ell as f64 / scale) > 0.0)
        .collect();
    FrequencySet { level: j0, indices }
}

/// Fourier coefficient `psi^{j,k}_l` of the periodized Meyer wavelet:
/// `2^{-j/2} exp(-2 pi i l k / 2^j) Psi_hat(l / 2^j)` with the wavelet phase
/// `Psi_hat(xi) = exp(i pi xi) b(|xi|)`.
pub fn psi_fourier(j: u32, k: u32, ell: i64) -> Result<Complex64> {
    psi_fourier_deg(DEFAULT_WINDOW_DEGREE, j, k, ell)
}

pub fn psi_fourier_deg(degree: u8, j: u32, k: u32, ell: i64) -> Result<Complex64> {
    if k >= 1 << j {
        return Err(Error::Parameter(format!("location k = {k} out of range for level {j}")));
    }
    let scale = (1u64 << j) as f64;
    let b = wavelet_window(degree, ell as f64 / scale);
    if b == 0.0 {
        return Ok(Complex64::ZERO);
    }
    let phase = PI * ell as f64 * (1.0 - 2.0 * k as f64) / scale;
    Ok(Complex64::from_polar(b / scale.sqrt(), phase))
}

/// Fourier coefficient `phi^{j0,k}_l` of the periodized Meyer scaling
/// function: `2^{-j0/2} exp(-2 pi i l k / 2^{j0}) Phi_hat(l / 2^{j0})`.
pub fn phi_fourier(j0: u32, k: u32, ell: i64) -> Result<Complex64> {
    phi_fourier_deg(DEFAULT_WINDOW_DEGREE, j0, k, ell)
}

pub fn phi_fourier_deg(degree: u8, j0: u32, k: u32, ell: i64) -> Result<Complex64> {
    if k >= 1 << j0 {
        return Err(Error::Parameter(format!("location k = {k} out of range for level {j0}")));
    }
    let scale = (1u64 << j0) as f64;
    let a = scaling_window(degree, ell as f64 / scale);
    if a == 0.0 {
        return Ok(Complex64::ZERO);
    }
    let phase = -2.0 * PI * ell as f64 * k as f64 / scale;
    Ok(Complex64::from_polar(a / scale.sqrt(), phase))
}

/// Coarse coefficients `c_{j0,k}` and detail coefficients `beta_{j,k}` for
/// `j0 <= j <= j1`. Stored as real values; the analysis step verifies that
/// the imaginary residue of each Plancherel sum is negligible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveletCoeffs {
    pub j0: u32,
    pub coarse: Vec<f64>,
    /// `details[d]` holds level `j0 + d`, length `2^{j0+d}`.
    pub details: Vec<Vec<f64>>,
}

impl WaveletCoeffs {
    pub fn zeros(spec: &WaveletBasisSpec) -> Self {
        Self {
            j0: spec.j0,
            coarse: vec![0.0; 1 << spec.j0],
            details: spec.levels().map(|j| vec![0.0; 1 << j]).collect(),
        }
    }

    pub fn j1(&self) -> u32 {
        self.j0 + self.details.len() as u32 - 1
    }

    pub fn detail_level(&self, j: u32) -> &[f64] {
        &self.details[(j - self.j0) as usize]
    }

    /// `sum c^2 + sum beta^2`, the squared norm of the represented function.
    pub fn energy(&self) -> f64 {
        let coarse: f64 = self.coarse.iter().map(|c| c * c).sum();
        let detail: f64 = self.details.iter().flatten().map(|b| b * b).sum();
        coarse + detail
    }
}

fn check_coverage(theta: &FourierCoeffs, spec: &WaveletBasisSpec) -> Result<()> {
    let needed = spec.required_max_freq();
    if theta.max_freq() < needed {
        return Err(Error::Parameter(format!(
            "spectrum covers |l| <= {} but level {} needs the band up to {}",
            theta.max_freq(),
            spec.j1,
            needed
        )));
    }
    Ok(())
}

fn realize_coeffs(values: Vec<Complex64>, what: &str) -> Result<Vec<f64>> {
    let scale = values.iter().map(|c| c.re.abs()).fold(0.0, f64::max).max(1.0);
    let residue = values.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > 1e-6 * scale {
        return Err(Error::ConjugateSymmetry(format!(
            "{what} coefficients have imaginary residue {residue:.3e} (scale {scale:.3e}); \
             the input spectrum is not conjugate-symmetric"
        )));
    }
    Ok(values.into_iter().map(|c| c.re).collect())
}

/// Wavelet analysis by the direct Plancherel sums, `O(|Omega_j| 2^j)` per
/// level. This is the reference path; [`analyze`] dispatches to an
/// FFT-based fast path that agrees with it to 1e-10.
pub fn analyze_direct(theta: &FourierCoeffs, spec: &WaveletBasisSpec) -> Result<WaveletCoeffs> {
    check_coverage(theta, spec)?;
    let deg = spec.window_degree;

    let phi_support = omega_scaling(spec.j0);
    let coarse_raw: Vec<Complex64> = (0..1u32 << spec.j0)
        .map(|k| {
            phi_support
                .indices
                .iter()
                .map(|&ell| {
                    phi_fourier_deg(deg, spec.j0, k, ell).unwrap().conj() * theta.value_or_zero(ell)
                })
                .sum()
        })
        .collect();
    let coarse = realize_coeffs(coarse_raw, "coarse")?;

    let mut details = Vec::with_capacity((spec.j1 - spec.j0 + 1) as usize);
    for j in spec.levels() {
        let support = omega(j);
        let raw: Vec<Complex64> = (0..1u32 << j)
            .map(|k| {
                support
                    .indices
                    .iter()
                    .map(|&ell| {
                        psi_fourier_deg(deg, j, k, ell).unwrap().conj() * theta.value_or_zero(ell)
                    })
                    .sum()
            })
            .collect();
        details.push(realize_coeffs(raw, "detail")?);
    }

    Ok(WaveletCoeffs { j0: spec.j0, coarse, details })
}

/// Wavelet analysis. Levels with at least 32 locations go through the
/// FFT fast path; small levels use the direct sums.
pub fn analyze(theta: &FourierCoeffs, spec: &WaveletBasisSpec) -> Result<WaveletCoeffs> {
    check_coverage(theta, spec)?;
    let deg = spec.window_degree;
    let mut planner = FftPlanner::new();

    let coarse = {
        let size = 1usize << spec.j0;
        if size < 32 {
            let support = omega_scaling(spec.j0);
            let raw: Vec<Complex64> = (0..size as u32)
                .map(|k| {
                    support
                        .indices
                        .iter()
                        .map(|&ell| {
                            phi_fourier_deg(deg, spec.j0, k, ell).unwrap().conj()
                                * theta.value_or_zero(ell)
                        })
                        .sum()
                })
                .collect();
            realize_coeffs(raw, "coarse")?
        } else {
            // Fold conj(window) * theta over residues mod 2^{j0}, then one
            // inverse FFT of size 2^{j0} yields all k at once.
            let scale = size as f64;
            let mut folded = vec![Complex64::ZERO; size];
            for &ell in &omega_scaling(spec.j0).indices {
                let w = scaling_window(deg, ell as f64 / scale);
                let r = ell.rem_euclid(size as i64) as usize;
                folded[r] += w * theta.value_or_zero(ell);
            }
            planner.plan_fft_inverse(size).process(&mut folded);
            let norm = 1.0 / scale.sqrt();
            realize_coeffs(folded.into_iter().map(|c| c * norm).collect(), "coarse")?
        }
    };

    let mut details = Vec::with_capacity((spec.j1 - spec.j0 + 1) as usize);
    for j in spec.levels() {
        let size = 1usize << j;
        if size < 32 {
            let support = omega(j);
            let raw: Vec<Complex64> = (0..size as u32)
                .map(|k| {
                    support
                        .indices
                        .iter()
                        .map(|&ell| {
                            psi_fourier_deg(deg, j, k, ell).unwrap().conj()
                                * theta.value_or_zero(ell)
                        })
                        .sum()
                })
                .collect();
            details.push(realize_coeffs(raw, "detail")?);
        } else {
            let scale = size as f64;
            let mut folded = vec![Complex64::ZERO; size];
            for &ell in &omega(j).indices {
                let b = wavelet_window(deg, ell as f64 / scale);
                // conj(Psi_hat) carries phase exp(-i pi l / 2^j).
                let w = Complex64::from_polar(b, -PI * ell as f64 / scale);
                let r = ell.rem_euclid(size as i64) as usize;
                folded[r] += w * theta.value_or_zero(ell);
            }
            planner.plan_fft_inverse(size).process(&mut folded);
            let norm = 1.0 / scale.sqrt();
            details.push(realize_coeffs(
                folded.into_iter().map(|c| c * norm).collect(),
                "detail",
            )?);
        }
    }

    Ok(WaveletCoeffs { j0: spec.j0, coarse, details })
}

/// Rebuild the spectrum `theta_l = sum_k c_{j0,k} phi^{j0,k}_l + sum_{j,k}
/// beta_{j,k} psi^{j,k}_l` for `|l| <= max_freq`.
pub fn synthesize(
    w: &WaveletCoeffs,
    spec: &WaveletBasisSpec,
    max_freq: usize,
) -> Result<FourierCoeffs> {
    if w.j0 != spec.j0 || w.j1() != spec.j1 {
        return Err(Error::Parameter(format!(
            "coefficient levels [{}, {}] do not match basis spec [{}, {}]",
            w.j0,
            w.j1(),
            spec.j0,
            spec.j1
        )));
    }
    if max_freq < spec.required_max_freq() {
        return Err(Error::Parameter(format!(
            "max_freq {} does not cover the basis band up to {}",
            max_freq,
            spec.required_max_freq()
        )));
    }
    let deg = spec.window_degree;
    let mut theta = FourierCoeffs::zeros(max_freq);
    let mut planner = FftPlanner::new();

    // Coarse contribution: forward FFT of the coefficient vector gives
    // sum_k c_k exp(-2 pi i l k / 2^{j0}) at every residue.
    {
        let size = 1usize << spec.j0;
        let scale = size as f64;
        let mut buf: Vec<Complex64> = w.coarse.iter().map(|&c| Complex64::new(c, 0.0)).collect();
        planner.plan_fft_forward(size).process(&mut buf);
        for &ell in &omega_scaling(spec.j0).indices {
            let a = scaling_window(deg, ell as f64 / scale);
            let r = ell.rem_euclid(size as i64) as usize;
            let v = theta.value_or_zero(ell) + a / scale.sqrt() * buf[r];
            theta.set(ell, v);
        }
    }

    for j in spec.levels() {
        let size = 1usize << j;
        let scale = size as f64;
        let level = w.detail_level(j);
        let mut buf: Vec<Complex64> = level.iter().map(|&b| Complex64::new(b, 0.0)).collect();
        planner.plan_fft_forward(size).process(&mut buf);
        for &ell in &omega(j).indices {
            let b = wavelet_window(deg, ell as f64 / scale);
            let win = Complex64::from_polar(b, PI * ell as f64 / scale);
            let r = ell.rem_euclid(size as i64) as usize;
            let v = theta.value_or_zero(ell) + win / scale.sqrt() * buf[r];
            theta.set(ell, v);
        }
    }

    Ok(theta)
}

/// Detail coefficients of a single level `j`, used when only one band is
/// needed (noise estimation reads just the finest level).
pub fn detail_level_coefficients(
    theta: &FourierCoeffs,
    j: u32,
    degree: u8,
) -> Result<Vec<f64>> {
    let support = omega(j);
    let needed = *support.indices.last().unwrap_or(&0) as usize;
    if theta.max_freq() < needed {
        return Err(Error::Parameter(format!(
            "spectrum covers |l| <= {} but level {j} needs the band up to {needed}",
            theta.max_freq()
        )));
    }
    let size = 1usize << j;
    let scale = size as f64;
    let mut folded = vec![Complex64::ZERO; size];
    for &ell in &support.indices {
        let b = wavelet_window(degree, ell as f64 / scale);
        let w = Complex64::from_polar(b, -PI * ell as f64 / scale);
        let r = ell.rem_euclid(size as i64) as usize;
        folded[r] += w * theta.value_or_zero(ell);
    }
    FftPlanner::new().plan_fft_inverse(size).process(&mut folded);
    let norm = 1.0 / scale.sqrt();
    realize_coeffs(folded.into_iter().map(|c| c * norm).collect(), "detail")
}

/// Reference synthesis by direct summation; agrees with [`synthesize`] to
/// 1e-10.
pub fn synthesize_direct(
    w: &WaveletCoeffs,
    spec: &WaveletBasisSpec,
    max_freq: usize,
) -> Result<FourierCoeffs> {
    if max_freq < spec.required_max_freq() {
        return Err(Error::Parameter(format!(
            "max_freq {} does not cover the basis band up to {}",
            max_freq,
            spec.required_max_freq()
        )));
    }
    let deg = spec.window_degree;
    let mut theta = FourierCoeffs::zeros(max_freq);
    for &ell in &omega_scaling(spec.j0).indices {
        let mut acc = Complex64::ZERO;
        for (k, &c) in w.coarse.iter().enumerate() {
            acc += c * phi_fourier_deg(deg, spec.j0, k as u32, ell)?;
        }
        theta.set(ell, theta.value_or_zero(ell) + acc);
    }
    for j in spec.levels() {
        for &ell in &omega(j).indices {
            let mut acc = Complex64::ZERO;
            for (k, &b) in w.detail_level(j).iter().enumerate() {
                acc += b * psi_fourier_deg(deg, j, k as u32, ell)?;
            }
            theta.set(ell, theta.value_or_zero(ell) + acc);
        }
    }
    Ok(theta)
}
