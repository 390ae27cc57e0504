//! CSV and JSON artifacts.
//!
//! Everything written here is meant to be inspectable with standard tools:
//! signals as single-column CSV, curve coefficient matrices as
//! `(m, ell, re, im)` rows, datasets as `(m, i, y)` rows with true shifts in
//! a sidecar file, wavelet coefficients as `(kind, j, k, value)` rows, and
//! reports as JSON with stable field names.

use num_complex::Complex64;
use serde::{de::DeserializeOwned, Serialize};
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimators::ThresholdedWavelet;
use crate::fourier::{CurveCoeffsMatrix, FourierCoeffs, PeriodicSignal};
use crate::registration::{DescentTrace, ShiftVector};
use crate::risk::{RateReport, RiskReport};

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut file = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut file, value)?;
    file.write_all(b"\n")?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = BufReader::new(File::open(path)?);
    Ok(serde_json::from_reader(file)?)
}

/// Single-column CSV with header `value`.
pub fn write_signal_csv(path: &Path, signal: &PeriodicSignal) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["value"])?;
    for v in signal.samples() {
        w.write_record([format!("{v}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_signal_csv(path: &Path) -> Result<PeriodicSignal> {
    let mut r = csv::Reader::from_path(path)?;
    let mut samples = Vec::new();
    for record in r.records() {
        let record = record?;
        let v: f64 = record
            .get(0)
            .ok_or_else(|| Error::Parameter("empty row in signal CSV".into()))?
            .parse()
            .map_err(|e| Error::Parameter(format!("bad sample value: {e}")))?;
        samples.push(v);
    }
    PeriodicSignal::new(samples)
}

/// Curve coefficient matrix as `(m, ell, re, im)` rows.
pub fn write_curves_csv(path: &Path, curves: &CurveCoeffsMatrix) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "ell", "re", "im"])?;
    let l = curves.max_freq() as i64;
    for m in 0..curves.n_curves() {
        for ell in -l..=l {
            let c = curves.at(m, ell);
            w.write_record([
                format!("{}", m + 1),
                format!("{ell}"),
                format!("{}", c.re),
                format!("{}", c.im),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_curves_csv(path: &Path, grid_size: usize) -> Result<CurveCoeffsMatrix> {
    let mut r = csv::Reader::from_path(path)?;
    let mut entries: Vec<(usize, i64, Complex64)> = Vec::new();
    let mut max_m = 0usize;
    let mut max_l = 0i64;
    for record in r.records() {
        let record = record?;
        let parse = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Parameter(format!("short row in curves CSV: {record:?}")))
        };
        let m: usize = parse(0)?.parse().map_err(|e| Error::Parameter(format!("field m: {e}")))?;
        let ell: i64 = parse(1)?.parse().map_err(|e| Error::Parameter(format!("field ell: {e}")))?;
        let re: f64 = parse(2)?.parse().map_err(|e| Error::Parameter(format!("field re: {e}")))?;
        let im: f64 = parse(3)?.parse().map_err(|e| Error::Parameter(format!("field im: {e}")))?;
        max_m = max_m.max(m);
        max_l = max_l.max(ell.abs());
        entries.push((m, ell, Complex64::new(re, im)));
    }
    if max_m == 0 {
        return Err(Error::Parameter("curves CSV contains no rows".into()));
    }
    let max_freq = max_l as usize;
    let mut rows = vec![FourierCoeffs::zeros(max_freq); max_m];
    for (m, ell, c) in entries {
        rows[m - 1].set(ell, c);
    }
    CurveCoeffsMatrix::from_rows(rows, grid_size)
}

/// Dataset of observed curves as `(m, i, y)` rows, `m` 1-based.
pub fn write_dataset_csv(path: &Path, curves: &[PeriodicSignal]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "i", "y"])?;
    for (m, curve) in curves.iter().enumerate() {
        for (i, y) in curve.samples().iter().enumerate() {
            w.write_record([format!("{}", m + 1), format!("{i}"), format!("{y}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv(path: &Path) -> Result<Vec<PeriodicSignal>> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows: Vec<(usize, usize, f64)> = Vec::new();
    let mut n = 0usize;
    let mut grid = 0usize;
    for record in r.records() {
        let record = record?;
        let get = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Parameter(format!("short row in dataset CSV: {record:?}")))
        };
        let m: usize = get(0)?.parse().map_err(|e| Error::Parameter(format!("field m: {e}")))?;
        let i: usize = get(1)?.parse().map_err(|e| Error::Parameter(format!("field i: {e}")))?;
        let y: f64 = get(2)?.parse().map_err(|e| Error::Parameter(format!("field y: {e}")))?;
        n = n.max(m);
        grid = grid.max(i + 1);
        rows.push((m, i, y));
    }
    if n == 0 {
        return Err(Error::Parameter("dataset CSV contains no rows".into()));
    }
    let mut curves = vec![vec![0.0; grid]; n];
    for (m, i, y) in rows {
        curves[m - 1][i] = y;
    }
    curves.into_iter().map(PeriodicSignal::new).collect()
}

/// Shift vector as a single-column CSV with header `tau`.
pub fn write_shifts_csv(path: &Path, shifts: &ShiftVector) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["tau"])?;
    for t in shifts.as_slice() {
        w.write_record([format!("{t}")])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_shifts_csv(path: &Path) -> Result<ShiftVector> {
    let mut r = csv::Reader::from_path(path)?;
    let mut taus = Vec::new();
    for record in r.records() {
        let record = record?;
        let t: f64 = record
            .get(0)
            .ok_or_else(|| Error::Parameter("empty row in shifts CSV".into()))?
            .parse()
            .map_err(|e| Error::Parameter(format!("bad shift value: {e}")))?;
        taus.push(t);
    }
    Ok(ShiftVector::new(taus))
}

/// Wavelet coefficients as `(kind, j, k, value)` rows with the kept/killed
/// mask folded into the kind column (`detail` vs `killed`).
pub fn write_wavelet_csv(path: &Path, wavelet: &ThresholdedWavelet) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["kind", "j", "k", "value"])?;
    let j0 = wavelet.coeffs.j0;
    for (k, c) in wavelet.coeffs.coarse.iter().enumerate() {
        w.write_record(["coarse".into(), format!("{j0}"), format!("{k}"), format!("{c}")])?;
    }
    for (d, level) in wavelet.coeffs.details.iter().enumerate() {
        let j = j0 + d as u32;
        for (k, b) in level.iter().enumerate() {
            let kind = if wavelet.kept[d][k] { "detail" } else { "killed" };
            w.write_record([kind.into(), format!("{j}"), format!("{k}"), format!("{b}")])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Descent trace as `(iter, M, step, grad_norm)` rows.
pub fn write_trace_csv(path: &Path, trace: &DescentTrace) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["iter", "M", "step", "grad_norm"])?;
    for it in &trace.iterations {
        w.write_record([
            format!("{}", it.iter),
            format!("{}", it.m_value),
            format!("{}", it.step),
            format!("{}", it.grad_norm),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Risk report as a flat CSV table, one row per estimator.
pub fn write_risk_csv(path: &Path, report: &RiskReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["estimator", "mean_mise", "std_error", "replications_used", "failures"])?;
    for row in &report.results {
        w.write_record([
            row.estimator.clone(),
            format!("{}", row.mean_mise),
            row.std_error.map(|s| format!("{s}")).unwrap_or_default(),
            format!("{}", row.replications_used),
            format!("{}", row.failures),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Rate study points as `(n, mean_mise, std_error)` rows.
pub fn write_rate_csv(path: &Path, report: &RateReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "mean_mise", "std_error"])?;
    for p in &report.points {
        w.write_record([
            format!("{}", p.n),
            format!("{}", p.mean_mise),
            p.std_error.map(|s| format!("{s}")).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::{test_signal, SignalKind};
    use crate::sim::{simulate, ExperimentConfig};

    fn tempdir() -> std::path::PathBuf {
        let dir = std::env::temp_dir().join(format!("shiftmean-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn signal_csv_round_trip() {
        let dir = tempdir();
        let path = dir.join("signal.csv");
        let f = test_signal(SignalKind::HeaviSine, 64).unwrap();
        write_signal_csv(&path, &f).unwrap();
        let back = read_signal_csv(&path).unwrap();
        assert_eq!(f.samples(), back.samples());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let dir = tempdir();
        let path = dir.join("dataset.csv");
        let config = ExperimentConfig::paper_defaults(SignalKind::Wave);
        let config = ExperimentConfig { n: 3, grid_size: 64, ..config };
        let data = simulate(&config, 0).unwrap();
        write_dataset_csv(&path, &data.curves).unwrap();
        let back = read_dataset_csv(&path).unwrap();
        assert_eq!(back.len(), 3);
        for (a, b) in data.curves.iter().zip(&back) {
            assert_eq!(a.samples(), b.samples());
        }
    }

    #[test]
    fn curves_csv_round_trip() {
        let dir = tempdir();
        let path = dir.join("curves.csv");
        let config = ExperimentConfig::paper_defaults(SignalKind::Bumps);
        let config = ExperimentConfig { n: 2, grid_size: 64, ..config };
        let data = simulate(&config, 1).unwrap();
        let matrix = CurveCoeffsMatrix::from_signals(&data.curves, 31).unwrap();
        write_curves_csv(&path, &matrix).unwrap();
        let back = read_curves_csv(&path, 64).unwrap();
        assert_eq!(back.n_curves(), 2);
        assert_eq!(back.max_freq(), 31);
        for m in 0..2 {
            for ell in -31i64..=31 {
                assert!((matrix.at(m, ell) - back.at(m, ell)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn shifts_csv_round_trip() {
        let dir = tempdir();
        let path = dir.join("shifts.csv");
        let shifts = ShiftVector::new(vec![0.1, -0.2, 0.05]);
        write_shifts_csv(&path, &shifts).unwrap();
        let back = read_shifts_csv(&path).unwrap();
        assert_eq!(shifts, back);
    }
}
