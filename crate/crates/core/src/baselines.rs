//! Reference estimators: the direct (unaligned) mean and the Procrustean
//! iterative alignment mean, plus the exact continuous cyclic shift both
//! the simulator and the aligners rely on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fourier::{from_full_spectrum, full_spectrum, PeriodicSignal};
use crate::registration::ShiftVector;

/// Procrustean mean configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcrustesConfig {
    /// Alignment/averaging iterations; the scheme converges in a few steps.
    pub i_max: usize,
    /// Parabolic sub-grid refinement of the per-curve shift.
    pub refine: bool,
}

impl Default for ProcrustesConfig {
    fn default() -> Self {
        Self { i_max: 3, refine: true }
    }
}

/// Exact continuous shift `f(. - tau)` implemented in the spectral domain.
///
/// Every bin is rotated by `exp(-2 pi i l tau)`; the Nyquist bin, which has
/// no conjugate partner, is scaled by `cos(pi N tau)` so the output stays
/// real. For grid shifts `tau = k/N` this reduces to exact array rotation,
/// and for signals band-limited below `N/2` it is the exact shift.
pub fn cyclic_shift(signal: &PeriodicSignal, tau: f64) -> Result<PeriodicSignal> {
    let n = signal.grid_size();
    let mut spec = full_spectrum(signal);
    for (k, c) in spec.iter_mut().enumerate() {
        if k == n / 2 {
            *c *= (PI * n as f64 * tau).cos();
        } else {
            let ell = if k <= n / 2 { k as i64 } else { k as i64 - n as i64 };
            *c *= Complex64::from_polar(1.0, -2.0 * PI * ell as f64 * tau);
        }
    }
    from_full_spectrum(spec)
}

/// Pointwise average of the observed curves.
pub fn direct_mean(curves: &[PeriodicSignal]) -> Result<PeriodicSignal> {
    let Some(first) = curves.first() else {
        return Err(Error::Parameter("cannot average zero curves".into()));
    };
    let grid = first.grid_size();
    if curves.iter().any(|c| c.grid_size() != grid) {
        return Err(Error::Parameter("curves have mismatched grid sizes".into()));
    }
    let mut acc = vec![0.0; grid];
    for curve in curves {
        for (a, v) in acc.iter_mut().zip(curve.samples()) {
            *a += v;
        }
    }
    let scale = 1.0 / curves.len() as f64;
    acc.iter_mut().for_each(|a| *a *= scale);
    PeriodicSignal::new(acc)
}

/// Cross-correlation `corr[k] = (1/N) sum_i y(i+k) r(i)` for all `N` cyclic
/// offsets at once, via the spectral product.
fn cross_correlation(y: &PeriodicSignal, reference: &PeriodicSignal) -> Vec<f64> {
    let n = y.grid_size();
    let cy = full_spectrum(y);
    let cr = full_spectrum(reference);
    let mut prod: Vec<Complex64> = cy.iter().zip(&cr).map(|(a, b)| a * b.conj()).collect();
    rustfft::FftPlanner::new().plan_fft_inverse(n).process(&mut prod);
    prod.into_iter().map(|c| c.re).collect()
}

/// Shift (in periods) maximizing the correlation of `y(. + tau)` with the
/// reference, searched over all grid offsets with optional 3-point
/// parabolic refinement.
fn best_alignment(y: &PeriodicSignal, reference: &PeriodicSignal, refine: bool) -> f64 {
    let n = y.grid_size();
    let corr = cross_correlation(y, reference);
    let top = corr.iter().fold(f64::NEG_INFINITY, |m, &c| m.max(c));
    // Near-ties (periodic reference patterns) resolve to the smallest
    // signed offset so the alignment is deterministic and unbiased.
    let k_best = (0..n)
        .filter(|&k| corr[k] >= top - 1e-9 * top.abs().max(1e-300))
        .min_by_key(|&k| k.min(n - k))
        .unwrap();

    let mut offset = k_best as f64;
    if refine {
        let prev = corr[(k_best + n - 1) % n];
        let here = corr[k_best];
        let next = corr[(k_best + 1) % n];
        let denom = prev - 2.0 * here + next;
        if denom.abs() > 1e-12 * here.abs().max(1.0) {
            let delta = 0.5 * (prev - next) / denom;
            offset += delta.clamp(-0.5, 0.5);
        }
    }
    let tau = offset / n as f64;
    // Principal interval (-1/2, 1/2].
    let mut t = tau - tau.round();
    if t <= -0.5 {
        t += 1.0;
    }
    t
}

/// Procrustean mean: alternate per-curve alignment against the current
/// reference with averaging of the realigned curves.
///
/// Per-curve shifts minimize `||y_m(. + tau) - ref||^2`, equivalently
/// maximize the cross-correlation, evaluated for all cyclic offsets in the
/// spectral domain.
pub fn procrustean_mean(
    curves: &[PeriodicSignal],
    config: &ProcrustesConfig,
) -> Result<(PeriodicSignal, ShiftVector)> {
    if curves.len() < 2 {
        return Err(Error::Parameter(format!(
            "the Procrustean mean needs n >= 2 curves, got {}",
            curves.len()
        )));
    }
    if config.i_max < 1 {
        return Err(Error::Parameter("i_max must be >= 1".into()));
    }
    let mut reference = direct_mean(curves)?;
    let mut shifts = vec![0.0; curves.len()];
    for _ in 0..config.i_max {
        for (m, curve) in curves.iter().enumerate() {
            shifts[m] = best_alignment(curve, &reference, config.refine);
        }
        let realigned: Vec<PeriodicSignal> = curves
            .iter()
            .zip(&shifts)
            .map(|(curve, &tau)| cyclic_shift(curve, -tau))
            .collect::<Result<_>>()?;
        reference = direct_mean(&realigned)?;
    }
    Ok((reference, ShiftVector::new(shifts)))
}

/// Total squared alignment residual `sum_m min_tau ||y_m(. + tau) - ref||^2`
/// at grid resolution; used to compare alignment quality.
pub fn alignment_residual(curves: &[PeriodicSignal], reference: &PeriodicSignal) -> Result<f64> {
    let mut total = 0.0;
    for curve in curves {
        if curve.grid_size() != reference.grid_size() {
            return Err(Error::Parameter("grid mismatch".into()));
        }
        let best_corr = cross_correlation(curve, reference)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        total += curve.norm_sq() + reference.norm_sq() - 2.0 * best_corr;
    }
    Ok(total)
}
