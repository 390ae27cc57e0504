//! Property tests for the structural invariants.

use num_complex::Complex64;
use proptest::prelude::*;

use shiftmean_core::baselines::cyclic_shift;
use shiftmean_core::fourier::{deconvolve, from_fourier, to_fourier, FourierCoeffs, PeriodicSignal};
use shiftmean_core::meyer::{analyze, synthesize, WaveletBasisSpec, WaveletCoeffs};
use shiftmean_core::registration::{criterion_mn, ShiftVector};
use shiftmean_core::{CurveCoeffsMatrix, ShiftDensity};

fn band_limited_signal(max_freq: usize, grid: usize) -> impl Strategy<Value = PeriodicSignal> {
    prop::collection::vec(-1.0f64..1.0, 2 * max_freq + 1).prop_map(move |raw| {
        let mut coeffs = FourierCoeffs::zeros(max_freq);
        coeffs.set(0, Complex64::new(raw[0], 0.0));
        for ell in 1..=max_freq {
            let re = raw[2 * ell - 1];
            let im = raw[2 * ell];
            coeffs.set(ell as i64, Complex64::new(re, im));
            coeffs.set(-(ell as i64), Complex64::new(re, -im));
        }
        from_fourier(&coeffs, grid).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fourier_round_trip(signal in band_limited_signal(15, 64)) {
        let back = from_fourier(&to_fourier(&signal, 31).unwrap(), 64).unwrap();
        let scale = signal.norm_sq().sqrt().max(1e-9);
        for (a, b) in signal.samples().iter().zip(back.samples()) {
            prop_assert!((a - b).abs() / scale < 1e-10);
        }
    }

    #[test]
    fn conjugate_symmetry(values in prop::collection::vec(-2.0f64..2.0, 64)) {
        let signal = PeriodicSignal::new(values).unwrap();
        let theta = to_fourier(&signal, 31).unwrap();
        prop_assert!(theta.conjugate_asymmetry() < 1e-12);
    }

    #[test]
    fn cyclic_shift_composes(signal in band_limited_signal(10, 64),
                             a in -0.6f64..0.6, b in -0.6f64..0.6) {
        let two = cyclic_shift(&cyclic_shift(&signal, a).unwrap(), b).unwrap();
        let one = cyclic_shift(&signal, a + b).unwrap();
        for (x, y) in two.samples().iter().zip(one.samples()) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn gamma_is_a_characteristic_sequence(sigma in 0.01f64..0.5, half in 0.01f64..0.5) {
        for density in [
            ShiftDensity::laplace(sigma),
            ShiftDensity::uniform_centered(half),
            ShiftDensity::truncated_cosine(half),
        ] {
            prop_assert_eq!(density.gamma(0), Complex64::new(1.0, 0.0));
            for ell in -32i64..=32 {
                let g = density.gamma(ell);
                prop_assert!(g.norm() <= 1.0 + 1e-12);
                prop_assert!((g - density.gamma(-ell).conj()).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn deconvolve_inverts_known_blur(signal in band_limited_signal(12, 64), sigma in 0.02f64..0.3) {
        let density = ShiftDensity::laplace(sigma);
        let theta = to_fourier(&signal, 12).unwrap();
        let blurred = FourierCoeffs::new(
            theta.iter().map(|(ell, c)| c * density.gamma(ell)).collect(),
            12,
        ).unwrap();
        let out = deconvolve(&blurred, &density, 1e-12).unwrap();
        for ell in -12i64..=12 {
            prop_assert!((out.theta.value_or_zero(ell) - theta.value_or_zero(ell)).norm() < 1e-9);
        }
    }

    #[test]
    fn wavelet_round_trip_on_coefficients(
        coarse in prop::collection::vec(-1.0f64..1.0, 8),
        d3 in prop::collection::vec(-1.0f64..1.0, 8),
        d4 in prop::collection::vec(-1.0f64..1.0, 16),
        d5 in prop::collection::vec(-1.0f64..1.0, 32),
    ) {
        let spec = WaveletBasisSpec::new(3, 5).unwrap();
        let w = WaveletCoeffs { j0: 3, coarse, details: vec![d3, d4, d5] };
        let theta = synthesize(&w, &spec, spec.required_max_freq()).unwrap();
        // Parseval: the spectrum's energy equals the coefficients'.
        prop_assert!((theta.energy() - w.energy()).abs() <= 1e-10 * w.energy().max(1.0));
        let back = analyze(&theta, &spec).unwrap();
        for (a, b) in w.coarse.iter().zip(&back.coarse) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        for (la, lb) in w.details.iter().zip(&back.details) {
            for (a, b) in la.iter().zip(lb) {
                prop_assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn criterion_global_shift_invariance(
        taus in prop::collection::vec(-0.4f64..0.4, 6),
        c in -1.0f64..1.0,
        seed in 0u64..1000,
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<FourierCoeffs> = (0..6)
            .map(|_| {
                let mut coeffs = FourierCoeffs::zeros(5);
                coeffs.set(0, Complex64::new(rng.random::<f64>() - 0.5, 0.0));
                for ell in 1..=5i64 {
                    let v = Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
                    coeffs.set(ell, v);
                    coeffs.set(-ell, v.conj());
                }
                coeffs
            })
            .collect();
        let curves = CurveCoeffsMatrix::from_rows(rows, 64).unwrap();
        let base = criterion_mn(&curves, &ShiftVector::new(taus.clone()), 3).unwrap();
        let moved: Vec<f64> = taus.iter().map(|t| t + c).collect();
        let shifted = criterion_mn(&curves, &ShiftVector::new(moved), 3).unwrap();
        prop_assert!((base - shifted).abs() <= 1e-12 * base.max(1.0));
        prop_assert!(base >= 0.0);
    }
}
