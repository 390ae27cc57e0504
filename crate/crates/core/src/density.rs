//! Shift distributions and their Fourier eigenvalues.
//!
//! Each density `g` exposes the eigenvalues `gamma_l = E exp(-2*pi*i*l*tau)`
//! that turn the shifted-curves model into a sequence-space inverse problem,
//! the periodized density `G(x) = sum_k g(x+k)`, a sampler, the Fisher
//! information when it is defined, and the degree of ill-posedness `nu`
//! (polynomial decay rate of `|gamma_l|`).

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// A shift distribution on the real line, assumed symmetric about zero.
///
/// The Laplace kind exists because it is the standard benchmark for degree of
/// ill-posedness 2 even though its support is not compact; `truncated`
/// restricts the sampler to `[-1/4, 1/4]` with renormalization so that
/// identifiability experiments stay inside the admissible shift range. The
/// eigenvalues, periodized density and variance it reports are always those
/// of the untruncated Laplace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShiftDensity {
    /// Point mass at zero: no shifts at all.
    Dirac,
    /// Uniform on `[-a, a]`.
    UniformCentered { half_width: f64 },
    /// `g(x) = 1/(sqrt(2) sigma) exp(-sqrt(2)|x|/sigma)`, variance `sigma^2`.
    Laplace {
        sigma: f64,
        #[serde(default)]
        truncated: bool,
    },
    /// Raised cosine `g(x) = (1/a) cos^2(pi x / (2a))` on `[-a, a]`: compactly
    /// supported, vanishing at the boundary, with finite Fisher information.
    TruncatedCosine { half_width: f64 },
}

impl ShiftDensity {
    pub fn laplace(sigma: f64) -> Self {
        ShiftDensity::Laplace { sigma, truncated: false }
    }

    pub fn uniform_centered(half_width: f64) -> Self {
        ShiftDensity::UniformCentered { half_width }
    }

    pub fn truncated_cosine(half_width: f64) -> Self {
        ShiftDensity::TruncatedCosine { half_width }
    }

    /// Density value `g(x)`.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            ShiftDensity::Dirac => {
                if x == 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            ShiftDensity::UniformCentered { half_width: a } => {
                if x.abs() <= a {
                    0.5 / a
                } else {
                    0.0
                }
            }
            ShiftDensity::Laplace { sigma, .. } => {
                (-(2.0f64).sqrt() * x.abs() / sigma).exp() / ((2.0f64).sqrt() * sigma)
            }
            ShiftDensity::TruncatedCosine { half_width: a } => {
                if x.abs() <= a {
                    let c = (PI * x / (2.0 * a)).cos();
                    c * c / a
                } else {
                    0.0
                }
            }
        }
    }

    /// Fourier eigenvalue `gamma_l = E exp(-2*pi*i*l*tau)`.
    ///
    /// All implemented kinds are symmetric about zero, so the value is real;
    /// it is returned as a complex number because estimated eigenvalues share
    /// the same call sites.
    pub fn gamma(&self, ell: i64) -> Complex64 {
        Complex64::new(self.gamma_re(ell), 0.0)
    }

    fn gamma_re(&self, ell: i64) -> f64 {
        if ell == 0 {
            return 1.0;
        }
        let l = ell as f64;
        match *self {
            ShiftDensity::Dirac => 1.0,
            ShiftDensity::UniformCentered { half_width: a } => {
                // sin(2 pi l a) vanishes exactly when 2 l a is an integer.
                let u = 2.0 * l * a;
                if u.fract() == 0.0 {
                    return 0.0;
                }
                let z = PI * u;
                z.sin() / z
            }
            ShiftDensity::Laplace { sigma, .. } => 1.0 / (1.0 + 2.0 * sigma * sigma * PI * PI * l * l),
            ShiftDensity::TruncatedCosine { half_width: a } => {
                // sinc(2*pi*l*a) / (1 - (2*l*a)^2) with the removable
                // singularity at |2*l*a| = 1 evaluated through the stable
                // form sinc(pi*(1-u)) / (u*(1+u)).
                let u = (2.0 * l * a).abs();
                if (u - 1.0).abs() < 0.25 {
                    let d = 1.0 - u;
                    sinc(PI * d) / (u * (1.0 + u))
                } else {
                    sinc(2.0 * PI * l * a) / (1.0 - u * u)
                }
            }
        }
    }

    /// Draw one shift.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            ShiftDensity::Dirac => 0.0,
            ShiftDensity::UniformCentered { half_width: a } => rng.random_range(-a..a),
            ShiftDensity::Laplace { sigma, truncated } => {
                let b = sigma / (2.0f64).sqrt();
                loop {
                    // Inverse CDF of the Laplace distribution.
                    let u: f64 = rng.random_range(-0.5..0.5);
                    let x = -b * u.signum() * (1.0 - 2.0 * u.abs()).ln();
                    if !truncated || x.abs() <= 0.25 {
                        return x;
                    }
                }
            }
            ShiftDensity::TruncatedCosine { half_width: a } => loop {
                // Rejection from the uniform envelope; peak density is 1/a.
                let x = rng.random_range(-a..a);
                let y: f64 = rng.random_range(0.0..1.0 / a);
                if y <= self.pdf(x) {
                    return x;
                }
            },
        }
    }

    /// Periodized density `G(x) = sum_k g(x+k)`, the wrap-around terms
    /// truncated once the remaining tail mass is below 1e-12.
    pub fn periodized(&self, x: f64) -> Result<f64> {
        match *self {
            ShiftDensity::Dirac => Err(Error::Domain(
                "the Dirac shift distribution has no density to periodize".into(),
            )),
            ShiftDensity::UniformCentered { .. } | ShiftDensity::TruncatedCosine { .. } => {
                // Compact support within [-1/2, 1/2]: k in {-1, 0, 1} suffices.
                Ok(self.pdf(x - 1.0) + self.pdf(x) + self.pdf(x + 1.0))
            }
            ShiftDensity::Laplace { sigma, .. } => {
                let mut total = self.pdf(x);
                let mut k = 1.0;
                loop {
                    total += self.pdf(x + k) + self.pdf(x - k);
                    // Tail mass beyond |t| >= k is exp(-sqrt(2) k / sigma).
                    if (-(2.0f64).sqrt() * k / sigma).exp() < 1e-12 {
                        return Ok(total);
                    }
                    k += 1.0;
                    if k > 1e6 {
                        return Err(Error::Numerical("periodization did not converge".into()));
                    }
                }
            }
        }
    }

    /// Fisher information `I_g = integral (d/dtau log g)^2 g dtau`.
    ///
    /// Laplace has the closed form `2/sigma^2`; the truncated cosine is
    /// integrated numerically. Kinds whose boundary behavior leaves `I_g`
    /// undefined return `None`.
    pub fn fisher_info(&self) -> Option<f64> {
        match *self {
            ShiftDensity::Dirac => None,
            ShiftDensity::UniformCentered { .. } => None,
            ShiftDensity::Laplace { sigma, truncated } => {
                if truncated {
                    None
                } else {
                    Some(2.0 / (sigma * sigma))
                }
            }
            ShiftDensity::TruncatedCosine { half_width: a } => {
                // Simpson quadrature of (g'/g)^2 g = (pi^2/a^3) sin^2(pi x/(2a)).
                let steps = 4096;
                let h = 2.0 * a / steps as f64;
                let integrand = |x: f64| {
                    let s = (PI * x / (2.0 * a)).sin();
                    PI * PI / (a * a * a) * s * s
                };
                let mut acc = integrand(-a) + integrand(a);
                for i in 1..steps {
                    let x = -a + i as f64 * h;
                    acc += integrand(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                Some(acc * h / 3.0)
            }
        }
    }

    /// Degree of ill-posedness: the polynomial decay rate of `|gamma_l|`.
    pub fn nu(&self) -> f64 {
        match *self {
            ShiftDensity::Dirac => 0.0,
            ShiftDensity::UniformCentered { .. } => 1.0,
            ShiftDensity::Laplace { .. } => 2.0,
            ShiftDensity::TruncatedCosine { .. } => 3.0,
        }
    }

    /// Shift variance `sigma_g^2 = integral tau^2 g(tau) dtau`.
    pub fn sigma_g_sq(&self) -> f64 {
        match *self {
            ShiftDensity::Dirac => 0.0,
            ShiftDensity::UniformCentered { half_width: a } => a * a / 3.0,
            ShiftDensity::Laplace { sigma, truncated } => {
                if truncated {
                    // Second moment of the Laplace restricted to [-1/4, 1/4].
                    let b = sigma / (2.0f64).sqrt();
                    let t = 0.25;
                    let e = (-t / b).exp();
                    let mass = 1.0 - e;
                    let second = 2.0 * b * b - e * (t * t + 2.0 * b * t + 2.0 * b * b);
                    second / mass
                } else {
                    sigma * sigma
                }
            }
            ShiftDensity::TruncatedCosine { half_width: a } => a * a * (1.0 / 3.0 - 2.0 / (PI * PI)),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ShiftDensity::Dirac => "dirac".into(),
            ShiftDensity::UniformCentered { half_width } => format!("uniform(+-{half_width})"),
            ShiftDensity::Laplace { sigma, truncated } => {
                if truncated {
                    format!("laplace({sigma}, truncated)")
                } else {
                    format!("laplace({sigma})")
                }
            }
            ShiftDensity::TruncatedCosine { half_width } => format!("cosine(+-{half_width})"),
        }
    }
}

fn sinc(z: f64) -> f64 {
    if z.abs() < 1e-8 {
        1.0 - z * z / 6.0
    } else {
        z.sin() / z
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const ALL: [ShiftDensity; 4] = [
        ShiftDensity::Dirac,
        ShiftDensity::UniformCentered { half_width: 0.25 },
        ShiftDensity::Laplace { sigma: 0.1, truncated: false },
        ShiftDensity::TruncatedCosine { half_width: 0.25 },
    ];

    /// Simpson quadrature of `integral exp(-2*pi*i*l*x) g(x) dx`. All kinds
    /// are even, so the integral is `2 integral_0^hi cos(2 pi l x) g(x) dx`,
    /// which also keeps the Laplace kink at an interval endpoint.
    fn gamma_quadrature(density: &ShiftDensity, ell: i64) -> f64 {
        let hi = match *density {
            ShiftDensity::Dirac => return 1.0,
            ShiftDensity::UniformCentered { half_width: a }
            | ShiftDensity::TruncatedCosine { half_width: a } => a,
            ShiftDensity::Laplace { sigma, .. } => 30.0 * sigma,
        };
        let steps = 32_768;
        let h = hi / steps as f64;
        let f = |x: f64| (2.0 * PI * ell as f64 * x).cos() * density.pdf(x);
        let mut acc = f(0.0) + f(hi);
        for i in 1..steps {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        2.0 * acc * h / 3.0
    }

    #[test]
    fn gamma_normalization_and_bound() {
        for density in ALL {
            assert_eq!(density.gamma(0), Complex64::new(1.0, 0.0));
            for ell in -64..=64 {
                let g = density.gamma(ell);
                assert!(g.im == 0.0, "symmetric density must have real gamma");
                assert!(g.norm() <= 1.0 + 1e-12, "{}: |gamma({ell})| = {}", density.label(), g.norm());
            }
        }
    }

    #[test]
    fn gamma_closed_forms_match_quadrature() {
        for density in ALL {
            for ell in -64..=64i64 {
                let closed = density.gamma(ell).re;
                let quad = gamma_quadrature(&density, ell);
                assert!(
                    (closed - quad).abs() < 1e-6,
                    "{} l={ell}: closed {closed}, quadrature {quad}",
                    density.label()
                );
            }
        }
    }

    #[test]
    fn laplace_gamma_value() {
        let density = ShiftDensity::laplace(0.1);
        let want = 1.0 / (1.0 + 0.02 * PI * PI);
        assert!((density.gamma(1).re - want).abs() < 1e-12);
        assert!((want - 0.83518).abs() < 1e-4);
    }

    #[test]
    fn dirac_gamma_is_one_everywhere() {
        assert_eq!(ShiftDensity::Dirac.gamma(17), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn laplace_ill_posedness_degree_two() {
        // gamma_l * l^2 -> 1/(2 sigma^2 pi^2) confirms nu = 2.
        let sigma = 0.1;
        let density = ShiftDensity::laplace(sigma);
        let limit = 1.0 / (2.0 * sigma * sigma * PI * PI);
        for ell in [64i64, 128, 256] {
            let v = density.gamma(ell).re * (ell * ell) as f64;
            assert!((v - limit).abs() / limit < 0.01, "l={ell}: {v} vs {limit}");
        }
    }

    #[test]
    fn periodized_uniform_at_zero() {
        let density = ShiftDensity::uniform_centered(0.25);
        assert!((density.periodized(0.0).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn periodized_laplace_integrates_to_one() {
        let density = ShiftDensity::laplace(0.1);
        let steps = 2048;
        let h = 1.0 / steps as f64;
        let f = |x: f64| density.periodized(x).unwrap();
        let mut acc = f(0.0) + f(1.0);
        for i in 1..steps {
            acc += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let integral = acc * h / 3.0;
        assert!((integral - 1.0).abs() < 1e-6, "integral of G = {integral}");
    }

    #[test]
    fn periodization_identity_for_cosine_test_function() {
        // Both sides of the periodization identity with h(x) = cos(2 pi x)
        // equal gamma_1; computed by two independent quadratures.
        let density = ShiftDensity::laplace(0.1);
        let steps = 8192;

        // Left: integral over R of h g, truncated far into the tails.
        let (lo, hi) = (-4.0, 4.0);
        let h1 = (hi - lo) / steps as f64;
        let f1 = |x: f64| (2.0 * PI * x).cos() * density.pdf(x);
        let mut left = f1(lo) + f1(hi);
        for i in 1..steps {
            left += f1(lo + i as f64 * h1) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        left *= h1 / 3.0;

        // Right: integral over [0,1] of h G.
        let h2 = 1.0 / steps as f64;
        let f2 = |x: f64| (2.0 * PI * x).cos() * density.periodized(x).unwrap();
        let mut right = f2(0.0) + f2(1.0);
        for i in 1..steps {
            right += f2(i as f64 * h2) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        right *= h2 / 3.0;

        let gamma1 = density.gamma(1).re;
        assert!((left - gamma1).abs() < 1e-6, "left {left} vs gamma_1 {gamma1}");
        assert!((right - gamma1).abs() < 1e-6, "right {right} vs gamma_1 {gamma1}");
        assert!((gamma1 - 0.83518).abs() < 1e-4);
    }

    #[test]
    fn laplace_sample_moments() {
        let density = ShiftDensity::laplace(0.1);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| density.sample(&mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.002, "sample mean {mean}");
        assert!((var - 0.01).abs() / 0.01 < 0.05, "sample variance {var}");
    }

    #[test]
    fn truncated_laplace_sampler_respects_support() {
        let density = ShiftDensity::Laplace { sigma: 0.1, truncated: true };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            assert!(density.sample(&mut rng).abs() <= 0.25);
        }
    }

    #[test]
    fn cosine_sampler_matches_variance() {
        let density = ShiftDensity::truncated_cosine(0.25);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 200_000;
        let var = (0..n).map(|_| density.sample(&mut rng).powi(2)).sum::<f64>() / n as f64;
        let want = density.sigma_g_sq();
        assert!((var - want).abs() / want < 0.03, "variance {var} vs {want}");
    }

    #[test]
    fn fisher_info_values() {
        let laplace = ShiftDensity::laplace(0.1).fisher_info().unwrap();
        assert!((laplace - 200.0).abs() < 1e-9);
        assert!(ShiftDensity::Dirac.fisher_info().is_none());
        assert!(ShiftDensity::uniform_centered(0.25).fisher_info().is_none());
        // Quadrature against the closed form pi^2/a^2 for the raised cosine.
        let a = 0.25;
        let got = ShiftDensity::truncated_cosine(a).fisher_info().unwrap();
        let want = PI * PI / (a * a);
        assert!((got - want).abs() / want < 1e-10, "I_g {got} vs {want}");
    }

    #[test]
    fn cosine_gamma_removable_singularity() {
        // At half_width 1/4 the point l = 2 sits exactly on the removable
        // singularity u = 1; the limit value is 1/2.
        let density = ShiftDensity::truncated_cosine(0.25);
        assert!((density.gamma(2).re - 0.5).abs() < 1e-12);
        let quad = gamma_quadrature(&density, 2);
        assert!((quad - 0.5).abs() < 1e-6);
    }
}
