//! The four standard test signals: Wave, HeaviSine, Blocks and Bumps.
//!
//! Definitions follow the published Wavelab `MakeSignal` formulas, sampled at
//! `x_i = i/N` and then rescaled to unit L2 norm so that a single noise level
//! is comparable across signals.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fourier::PeriodicSignal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignalKind {
    Wave,
    #[serde(rename = "heavisine")]
    HeaviSine,
    Blocks,
    Bumps,
}

impl SignalKind {
    pub const ALL: [SignalKind; 4] = [
        SignalKind::Wave,
        SignalKind::HeaviSine,
        SignalKind::Blocks,
        SignalKind::Bumps,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SignalKind::Wave => "wave",
            SignalKind::HeaviSine => "heavisine",
            SignalKind::Blocks => "blocks",
            SignalKind::Bumps => "bumps",
        }
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "wave" => Ok(SignalKind::Wave),
            "heavisine" => Ok(SignalKind::HeaviSine),
            "blocks" => Ok(SignalKind::Blocks),
            "bumps" => Ok(SignalKind::Bumps),
            other => Err(Error::Parameter(format!(
                "unknown signal '{other}' (expected wave, heavisine, blocks or bumps)"
            ))),
        }
    }
}

/// Breakpoints shared by Blocks and Bumps.
const T_J: [f64; 11] = [0.10, 0.13, 0.15, 0.23, 0.25, 0.40, 0.44, 0.65, 0.76, 0.78, 0.81];
const BLOCKS_H: [f64; 11] = [4.0, -5.0, 3.0, -4.0, 5.0, -4.2, 2.1, 4.3, -3.1, 2.1, -4.2];
const BUMPS_H: [f64; 11] = [4.0, 5.0, 3.0, 4.0, 5.0, 4.2, 2.1, 4.3, 3.1, 5.1, 4.2];
const BUMPS_W: [f64; 11] = [0.005, 0.005, 0.006, 0.01, 0.01, 0.03, 0.01, 0.01, 0.005, 0.008, 0.005];

/// Pointwise value of the raw (unnormalized) signal at `t` in `[0, 1)`.
pub fn raw_value(kind: SignalKind, t: f64) -> f64 {
    match kind {
        SignalKind::Wave => 0.5 + 0.2 * (4.0 * PI * t).cos() + 0.1 * (24.0 * PI * t).cos(),
        SignalKind::HeaviSine => 4.0 * (4.0 * PI * t).sin() - sgn(t - 0.3) - sgn(0.72 - t),
        SignalKind::Blocks => T_J
            .iter()
            .zip(BLOCKS_H)
            .map(|(&tj, hj)| hj * (1.0 + sgn(t - tj)) / 2.0)
            .sum(),
        SignalKind::Bumps => T_J
            .iter()
            .zip(BUMPS_H.iter().zip(BUMPS_W))
            .map(|(&tj, (&hj, wj))| hj * (1.0 + ((t - tj) / wj).abs()).powi(-4))
            .sum(),
    }
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Raw signal sampled on the grid, before normalization.
pub fn raw_test_signal(kind: SignalKind, grid_size: usize) -> Result<PeriodicSignal> {
    let n = grid_size as f64;
    PeriodicSignal::new((0..grid_size).map(|i| raw_value(kind, i as f64 / n)).collect())
}

/// Test signal sampled at `x_i = i/N` and rescaled to unit L2 norm.
pub fn test_signal(kind: SignalKind, grid_size: usize) -> Result<PeriodicSignal> {
    Ok(raw_test_signal(kind, grid_size)?.normalized())
}
