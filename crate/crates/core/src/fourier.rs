//! Spectral representation of 1-periodic signals and observed curves.
//!
//! The Fourier convention is fixed once for the whole crate: analysis uses
//! `theta_l = integral_0^1 f(x) exp(-2*pi*i*l*x) dx` and synthesis uses
//! `f(x) = sum_l theta_l exp(+2*pi*i*l*x)`. On a uniform grid of `N = 2^J`
//! points the integral becomes the discrete Fourier transform scaled by
//! `1/N`, which is exact for signals band-limited below `N/2`.

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::density::ShiftDensity;
use crate::error::{Error, Result};

/// Real samples of a 1-periodic function on the uniform grid `x_i = i/N`.
///
/// `N` must be a power of two with `N >= 8`, and all samples finite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicSignal {
    samples: Vec<f64>,
}

impl PeriodicSignal {
    pub fn new(samples: Vec<f64>) -> Result<Self> {
        let n = samples.len();
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::Parameter(format!(
                "grid size must be a power of two >= 8, got {n}"
            )));
        }
        if !samples.iter().all(|v| v.is_finite()) {
            return Err(Error::Parameter("signal contains non-finite samples".into()));
        }
        Ok(Self { samples })
    }

    pub fn grid_size(&self) -> usize {
        self.samples.len()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Squared L2([0,1]) norm computed by the grid quadrature `(1/N) sum f^2`.
    pub fn norm_sq(&self) -> f64 {
        let n = self.samples.len() as f64;
        self.samples.iter().map(|v| v * v).sum::<f64>() / n
    }

    /// Rescale to unit L2 norm. Leaves an all-zero signal untouched.
    pub fn normalized(mut self) -> Self {
        let norm = self.norm_sq().sqrt();
        if norm > 0.0 {
            for v in &mut self.samples {
                *v /= norm;
            }
        }
        self
    }
}

/// Complex Fourier coefficients `theta_l` for `l = -L..=L`.
///
/// Coefficients of a real signal satisfy `theta_{-l} = conj(theta_l)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCoeffs {
    coeffs: Vec<Complex64>,
    max_freq: usize,
}

impl FourierCoeffs {
    /// Build from coefficients listed in index order `l = -L..=L`.
    pub fn new(coeffs: Vec<Complex64>, max_freq: usize) -> Result<Self> {
        if coeffs.len() != 2 * max_freq + 1 {
            return Err(Error::Parameter(format!(
                "expected {} coefficients for max_freq {}, got {}",
                2 * max_freq + 1,
                max_freq,
                coeffs.len()
            )));
        }
        Ok(Self { coeffs, max_freq })
    }

    /// All-zero spectrum up to `max_freq`.
    pub fn zeros(max_freq: usize) -> Self {
        Self {
            coeffs: vec![Complex64::ZERO; 2 * max_freq + 1],
            max_freq,
        }
    }

    pub fn max_freq(&self) -> usize {
        self.max_freq
    }

    /// Coefficient at frequency `l`, or `None` outside `[-L, L]`.
    pub fn get(&self, ell: i64) -> Option<Complex64> {
        let l = self.max_freq as i64;
        if ell.abs() > l {
            None
        } else {
            Some(self.coeffs[(ell + l) as usize])
        }
    }

    /// Coefficient at frequency `l`, treating out-of-range frequencies as 0.
    pub fn value_or_zero(&self, ell: i64) -> Complex64 {
        self.get(ell).unwrap_or(Complex64::ZERO)
    }

    pub fn set(&mut self, ell: i64, value: Complex64) {
        let l = self.max_freq as i64;
        assert!(ell.abs() <= l, "frequency {ell} out of range +-{l}");
        self.coeffs[(ell + l) as usize] = value;
    }

    /// Iterate `(l, theta_l)` pairs in frequency order.
    pub fn iter(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        let l = self.max_freq as i64;
        self.coeffs.iter().enumerate().map(move |(i, c)| (i as i64 - l, *c))
    }

    /// Spectral energy `sum_l |theta_l|^2`.
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Max-abs departure from conjugate symmetry, `max_l |theta_{-l} - conj(theta_l)|`.
    pub fn conjugate_asymmetry(&self) -> f64 {
        let l = self.max_freq as i64;
        (0..=l)
            .map(|ell| {
                (self.value_or_zero(-ell) - self.value_or_zero(ell).conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    /// Keep frequencies `|l| <= m`, zero the rest.
    pub fn truncated(&self, m: usize) -> Self {
        let mut out = self.clone();
        for (i, c) in out.coeffs.iter_mut().enumerate() {
            let ell = i as i64 - out.max_freq as i64;
            if ell.unsigned_abs() as usize > m {
                *c = Complex64::ZERO;
            }
        }
        out
    }
}

/// Fourier coefficients `c_{m,l}` of `n` observed curves over a shared
/// frequency range `l = -L..=L`, stored row-major. The grid size of the
/// curves is kept so estimators can synthesize back to the same grid.
#[derive(Debug, Clone)]
pub struct CurveCoeffsMatrix {
    n: usize,
    max_freq: usize,
    grid_size: usize,
    data: Vec<Complex64>,
}

impl CurveCoeffsMatrix {
    /// Analyze `n` curves on a common grid into their Fourier coefficients.
    pub fn from_signals(curves: &[PeriodicSignal], max_freq: usize) -> Result<Self> {
        let Some(first) = curves.first() else {
            return Err(Error::Parameter("curve set is empty".into()));
        };
        let grid = first.grid_size();
        if curves.iter().any(|c| c.grid_size() != grid) {
            return Err(Error::Parameter("curves have mismatched grid sizes".into()));
        }
        let width = 2 * max_freq + 1;
        let mut data = Vec::with_capacity(curves.len() * width);
        for curve in curves {
            let row = to_fourier(curve, max_freq)?;
            data.extend(row.coeffs.iter().copied());
        }
        Ok(Self {
            n: curves.len(),
            max_freq,
            grid_size: grid,
            data,
        })
    }

    pub fn from_rows(rows: Vec<FourierCoeffs>, grid_size: usize) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::Parameter("curve set is empty".into()));
        };
        let max_freq = first.max_freq;
        if rows.iter().any(|r| r.max_freq != max_freq) {
            return Err(Error::Parameter("rows have mismatched frequency ranges".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * (2 * max_freq + 1));
        for row in &rows {
            data.extend(row.coeffs.iter().copied());
        }
        Ok(Self {
            n: rows.len(),
            max_freq,
            grid_size,
            data,
        })
    }

    pub fn n_curves(&self) -> usize {
        self.n
    }

    pub fn max_freq(&self) -> usize {
        self.max_freq
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Row `m` (0-based) as a coefficient slice in index order `l = -L..=L`.
    pub fn row(&self, m: usize) -> &[Complex64] {
        let w = 2 * self.max_freq + 1;
        &self.data[m * w..(m + 1) * w]
    }

    /// Coefficient `c_{m,l}` with `m` 0-based.
    pub fn at(&self, m: usize, ell: i64) -> Complex64 {
        let l = self.max_freq as i64;
        debug_assert!(ell.abs() <= l);
        self.row(m)[(ell + l) as usize]
    }

    pub fn row_coeffs(&self, m: usize) -> FourierCoeffs {
        FourierCoeffs {
            coeffs: self.row(m).to_vec(),
            max_freq: self.max_freq,
        }
    }
}

fn fft_forward(samples: &[f64]) -> Vec<Complex64> {
    let n = samples.len();
    let mut buf: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let scale = 1.0 / n as f64;
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

fn fft_inverse(mut spectrum: Vec<Complex64>) -> Vec<Complex64> {
    let n = spectrum.len();
    FftPlanner::new().plan_fft_inverse(n).process(&mut spectrum);
    spectrum
}

/// Full DFT spectrum of a signal in rustfft bin order (bin `k` holds
/// frequency `k` for `k <= N/2` and `k - N` above), scaled so that bin `k`
/// equals `(1/N) sum_i f_i exp(-2*pi*i*k*x_i)`.
pub(crate) fn full_spectrum(signal: &PeriodicSignal) -> Vec<Complex64> {
    fft_forward(&signal.samples)
}

/// Inverse of [`full_spectrum`]; checks that the synthesized signal is real.
pub(crate) fn from_full_spectrum(spectrum: Vec<Complex64>) -> Result<PeriodicSignal> {
    let time = fft_inverse(spectrum);
    realize(time)
}

fn realize(time: Vec<Complex64>) -> Result<PeriodicSignal> {
    let scale = time.iter().map(|c| c.re.abs()).fold(0.0, f64::max).max(1.0);
    let residue = time.iter().map(|c| c.im.abs()).fold(0.0, f64::max);
    if residue > 1e-8 * scale {
        return Err(Error::ConjugateSymmetry(format!(
            "imaginary residue {residue:.3e} exceeds 1e-8 x signal scale {scale:.3e}"
        )));
    }
    PeriodicSignal::new(time.into_iter().map(|c| c.re).collect())
}

/// Fourier coefficients `theta_l = (1/N) sum_i f_i exp(-2*pi*i*l*x_i)` for
/// `|l| <= L`. Requires `L <= N/2 - 1`.
pub fn to_fourier(signal: &PeriodicSignal, max_freq: usize) -> Result<FourierCoeffs> {
    let n = signal.grid_size();
    if max_freq > n / 2 - 1 {
        return Err(Error::Parameter(format!(
            "max_freq {} out of range for grid size {} (need <= {})",
            max_freq,
            n,
            n / 2 - 1
        )));
    }
    let spec = fft_forward(&signal.samples);
    let l = max_freq as i64;
    let coeffs = (-l..=l)
        .map(|ell| spec[ell.rem_euclid(n as i64) as usize])
        .collect();
    Ok(FourierCoeffs { coeffs, max_freq })
}

/// Synthesize `f(x_i) = sum_l theta_l exp(+2*pi*i*l*x_i)` on a grid of `N`
/// points. Requires `N/2 > max_freq`; fails if the imaginary residue of the
/// synthesis exceeds `1e-8` times the signal scale.
pub fn from_fourier(coeffs: &FourierCoeffs, grid_size: usize) -> Result<PeriodicSignal> {
    if grid_size < 8 || !grid_size.is_power_of_two() {
        return Err(Error::Parameter(format!(
            "grid size must be a power of two >= 8, got {grid_size}"
        )));
    }
    if grid_size / 2 <= coeffs.max_freq {
        return Err(Error::Parameter(format!(
            "grid size {} cannot represent frequencies up to {}",
            grid_size, coeffs.max_freq
        )));
    }
    let mut spec = vec![Complex64::ZERO; grid_size];
    for (ell, c) in coeffs.iter() {
        spec[ell.rem_euclid(grid_size as i64) as usize] = c;
    }
    from_full_spectrum(spec)
}

/// Column means `ctilde_l = (1/n) sum_m c_{m,l}` of the observed curves.
pub fn sample_mean_coeffs(curves: &CurveCoeffsMatrix) -> Result<FourierCoeffs> {
    if curves.n == 0 {
        return Err(Error::Parameter("cannot average an empty curve matrix".into()));
    }
    let w = 2 * curves.max_freq + 1;
    let mut acc = vec![Complex64::ZERO; w];
    for m in 0..curves.n {
        for (a, c) in acc.iter_mut().zip(curves.row(m)) {
            *a += c;
        }
    }
    let scale = 1.0 / curves.n as f64;
    for a in &mut acc {
        *a *= scale;
    }
    Ok(FourierCoeffs {
        coeffs: acc,
        max_freq: curves.max_freq,
    })
}

/// Result of a deconvolution step: the estimated spectrum and the
/// frequencies that were zeroed because the eigenvalue fell under the floor.
#[derive(Debug, Clone)]
pub struct Deconvolved {
    pub theta: FourierCoeffs,
    pub zeroed: Vec<i64>,
}

/// Divide out arbitrary eigenvalues: `theta_l = ctilde_l / gamma(l)` where
/// `|gamma(l)| >= floor`, zero elsewhere. The zeroed set is reported, never
/// silently dropped.
pub fn deconvolve_with(
    ctilde: &FourierCoeffs,
    gamma: impl Fn(i64) -> Complex64,
    floor: f64,
) -> Result<Deconvolved> {
    if !(floor > 0.0) {
        return Err(Error::Parameter(format!("deconvolution floor must be > 0, got {floor}")));
    }
    let mut theta = ctilde.clone();
    let mut zeroed = Vec::new();
    for i in 0..theta.coeffs.len() {
        let ell = i as i64 - theta.max_freq as i64;
        let g = gamma(ell);
        if g.norm() >= floor {
            theta.coeffs[i] /= g;
        } else {
            theta.coeffs[i] = Complex64::ZERO;
            zeroed.push(ell);
        }
    }
    Ok(Deconvolved { theta, zeroed })
}

/// Deconvolution by the known shift density: `theta_l = ctilde_l / gamma_l`.
pub fn deconvolve(
    ctilde: &FourierCoeffs,
    density: &ShiftDensity,
    floor: f64,
) -> Result<Deconvolved> {
    deconvolve_with(ctilde, |ell| density.gamma(ell), floor)
}

/// Default eigenvalue floor for a known density: `1e-12 * max|gamma| = 1e-12`
/// since `gamma(0) = 1` for every density.
pub fn default_known_floor() -> f64 {
    1e-12
}

/// Floor for empirical eigenvalues: `2 sqrt(log(n)/n)`.
///
/// `gamma_hat` at a frequency carrying no information fluctuates with
/// Rayleigh scale `1/sqrt(n)`; a floor at that scale would keep a constant
/// fraction of pure-noise eigenvalues across the hundreds of frequencies
/// tested. The `log n` factor drives the survival probability of a noise
/// eigenvalue down to `n^{-2}` per frequency, so the surviving set carries
/// real information.
pub fn empirical_floor(n: usize) -> f64 {
    if n < 2 {
        return 1.0;
    }
    2.0 * ((n as f64).ln() / n as f64).sqrt()
}
