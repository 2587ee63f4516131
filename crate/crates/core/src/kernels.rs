//! Damping kernel Γ_d(t), its Laplace transform, and the bath noise.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::quadrature::{drude_cos_tail, GaussLegendre};

/// Γ_d(t) = γΩ (e^{−Ω|t−d|} + e^{−Ω|t+d|}).
pub fn damping_kernel(t: f64, d: f64, params: &ModelParams) -> f64 {
    let w = params.omega_cut;
    params.gamma * w * ((-w * (t - d).abs()).exp() + (-w * (t + d).abs()).exp())
}

/// Closed-form Laplace transform ∫₀^∞ e^{−st} Γ_d(t) dt, valid for Re s > −Ω.
pub fn damping_kernel_laplace(s: Complex64, d: f64, params: &ModelParams) -> Result<Complex64> {
    let w = params.omega_cut;
    if !(s.re > -w) {
        return Err(Error::OutsideConvergence { re: s.re, im: s.im });
    }
    Ok(damping_laplace_unchecked(s, d, params.gamma, w))
}

pub(crate) fn damping_laplace_unchecked(s: Complex64, d: f64, gamma: f64, w: f64) -> Complex64 {
    if d == 0.0 {
        return 2.0 * gamma * w / (s + w);
    }
    let esd = (-s * d).exp();
    let ewd = (-w * d).exp();
    // (e^{−sd} − e^{−Ωd})/(Ω − s) has a removable singularity at s = Ω.
    let z = (w - s) * d;
    let head = if z.norm() < 1e-3 {
        ewd * d * (1.0 + z * (0.5 + z * (1.0 / 6.0 + z / 24.0)))
    } else {
        (esd - ewd) / (w - s)
    };
    gamma * w * (head + (esd + ewd) / (s + w))
}

/// ∫₀ᵗ Γ_d(u) e^{iν(t − u)} du in closed form; the real part is the cosine
/// convolution and the imaginary part the sine convolution.
pub(crate) fn damping_phase_convolution(t: f64, d: f64, nu: f64, gamma: f64, w: f64) -> Complex64 {
    // ∫_{a}^{b} e^{β(u − c)} e^{iν(t − u)} du
    let piece = |beta: f64, c: f64, a: f64, b: f64| -> Complex64 {
        if b <= a {
            return Complex64::new(0.0, 0.0);
        }
        let k = Complex64::new(beta, -nu);
        let phase = Complex64::from_polar(1.0, nu * (t - c));
        let ea = (k * (a - c)).exp();
        let eb = (k * (b - c)).exp();
        phase * (eb - ea) / k
    };
    let split = d.min(t);
    // e^{−Ω|u−d|}: rising branch below d, decaying branch above
    let near = piece(w, d, 0.0, split) + piece(-w, d, split, t);
    // e^{−Ω(u+d)}
    let far = piece(-w, -d, 0.0, t);
    gamma * w * (near + far)
}

/// coth(ω/2T), exactly 1 at T = 0.
pub fn thermal_factor(omega: f64, temperature: f64) -> f64 {
    if temperature == 0.0 {
        return 1.0;
    }
    let x = omega / temperature;
    if x < 1e-4 {
        2.0 / x + x / 6.0
    } else {
        1.0 + 2.0 / x.exp_m1()
    }
}

/// Symmetrized noise spectrum of the bath force in dimensionless units,
/// S(ω) = (4γ/πω₀) ω Ω²/(Ω² + ω²) coth(ω/2T).
///
/// With this normalization the noise and the damping kernel Γ_d satisfy the
/// fluctuation-dissipation relation, so a weakly damped oscillator relaxes to
/// C = coth(ω₀/2T)·I.
#[derive(Debug, Clone, Copy)]
pub struct NoiseSpectrum<'a> {
    pub params: &'a ModelParams,
}

impl<'a> NoiseSpectrum<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        Self { params }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        noise_spectrum(omega, self.params)
    }

    /// Coefficient A of the large-ω behaviour S(ω) ≈ A/ω.
    pub fn tail_coefficient(&self) -> f64 {
        let p = self.params;
        4.0 * p.gamma * p.omega_cut * p.omega_cut / (PI * p.omega0)
    }
}

pub fn noise_spectrum(omega: f64, params: &ModelParams) -> f64 {
    let pref = 4.0 * params.gamma / (PI * params.omega0);
    let cut2 = params.omega_cut * params.omega_cut;
    let drude = cut2 / (cut2 + omega * omega);
    if omega == 0.0 {
        return pref * 2.0 * params.temperature;
    }
    pref * omega * drude * thermal_factor(omega, params.temperature)
}

/// ∫₀^∞ S(ω) cos(ωx) dω for x > 0.
fn noise_cosine_transform(x: f64, params: &ModelParams) -> f64 {
    let spec = NoiseSpectrum::new(params);
    let cut = params.omega_cut;
    let omega_max = (50.0 * cut).max(50.0 / x);
    let half_period = PI / x;

    // Breakpoints resolving the thermal scale, the cutoff and the oscillation.
    let mut points = vec![0.0];
    let mut scale = (0.05 * cut).min(0.05).max(if params.temperature > 0.0 {
        0.25 * params.temperature
    } else {
        0.0
    });
    scale = scale.min(0.05 * cut);
    let mut edge = scale;
    while edge < omega_max {
        points.push(edge);
        edge *= 1.5;
    }
    points.push(omega_max);

    let rule = GaussLegendre::new(12);
    let mut sum = 0.0;
    for w in points.windows(2) {
        let (a, b) = (w[0], w[1]);
        let pieces = ((b - a) / half_period).ceil().max(1.0) as usize;
        let step = (b - a) / pieces as f64;
        for j in 0..pieces {
            let lo = a + j as f64 * step;
            let hi = if j + 1 == pieces { b } else { lo + step };
            sum += rule.integrate(lo, hi, |om| spec.eval(om) * (om * x).cos());
        }
    }
    // coth(ω/2T) is constant to machine precision beyond omega_max
    let pref = 4.0 * params.gamma * cut * cut / (PI * params.omega0);
    let tail = pref * thermal_factor(omega_max, params.temperature) * drude_cos_tail(omega_max, cut, x);
    sum + tail
}

/// Noise kernel entry 𝒦(τ) at separation r,
/// ∫₀^∞ S(ω) cos(ωτ) cos(ωr) dω. With r = 0 this is the diagonal entry.
///
/// The integral diverges logarithmically whenever τ = r (including the
/// coincident point τ = r = 0), because S(ω) decays only like 1/ω.
pub fn noise_kernel_entry(tau: f64, r: f64, params: &ModelParams) -> Result<f64> {
    let (tau, r) = (tau.abs(), r.abs());
    let minus = (tau - r).abs();
    let plus = tau + r;
    if minus == 0.0 || plus == 0.0 {
        return Err(Error::LogDivergent);
    }
    Ok(0.5 * (noise_cosine_transform(minus, params) + noise_cosine_transform(plus, params)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate_adaptive;
    use approx::assert_relative_eq;

    fn params() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn damping_kernel_values() {
        let p = params();
        assert_relative_eq!(damping_kernel(0.0, 0.0, &p), 20.0);
        let d = 0.37;
        assert_relative_eq!(
            damping_kernel(d, d, &p),
            10.0 * (1.0 + (-20.0 * d).exp()),
            epsilon = 1e-13
        );
        assert_relative_eq!(
            damping_kernel(1.0, 0.5, &p),
            10.0 * ((-5.0f64).exp() + (-15.0f64).exp()),
            epsilon = 1e-15
        );
    }

    #[test]
    fn laplace_zero_distance_closed_form() {
        let p = params();
        let g = damping_kernel_laplace(Complex64::new(10.0, 0.0), 0.0, &p).unwrap();
        assert_relative_eq!(g.re, 1.0, epsilon = 1e-15);
        assert_eq!(g.im, 0.0);
    }

    #[test]
    fn laplace_general_formula_reduces_at_zero_distance() {
        let p = params();
        for k in 0..25 {
            let s = Complex64::new(0.1 + 0.37 * k as f64, -3.0 + 0.81 * k as f64);
            let tiny = damping_laplace_unchecked(s, 1e-12, p.gamma, p.omega_cut);
            let exact = 2.0 * p.gamma * p.omega_cut / (s + p.omega_cut);
            assert!((tiny - exact).norm() < 1e-9 * exact.norm());
        }
    }

    #[test]
    fn laplace_removable_point() {
        let p = params();
        let d = 0.2;
        let at = damping_laplace_unchecked(Complex64::new(10.0, 0.0), d, 1.0, 10.0);
        let near = damping_laplace_unchecked(Complex64::new(10.0 + 1e-2, 0.0), d, 1.0, 10.0);
        assert!((at - near).norm() < 1e-2);
        assert!(damping_kernel_laplace(Complex64::new(-10.0, 1.0), d, &p).is_err());
    }

    #[test]
    fn laplace_matches_quadrature_of_kernel() {
        let p = params();
        for &d in &[0.0, 0.05, 0.1, 0.5] {
            for &s in &[
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 1.0),
                Complex64::new(0.1, 10.0),
            ] {
                let re = integrate_adaptive(
                    |t| (-s.re * t).exp() * (s.im * t).cos() * damping_kernel(t, d, &p),
                    &[0.0, d, d + 1.0, d + 5.0, 50.0, 400.0],
                    1e-14,
                    1e-13,
                    10_000,
                );
                let im = integrate_adaptive(
                    |t| -(-s.re * t).exp() * (s.im * t).sin() * damping_kernel(t, d, &p),
                    &[0.0, d, d + 1.0, d + 5.0, 50.0, 400.0],
                    1e-14,
                    1e-13,
                    10_000,
                );
                let exact = damping_kernel_laplace(s, d, &p).unwrap();
                let quad = Complex64::new(re.value, im.value);
                assert!(
                    (exact - quad).norm() <= 1e-8 * exact.norm(),
                    "d={d} s={s}: {exact} vs {quad}"
                );
            }
        }
    }

    #[test]
    fn laplace_decays_with_distance() {
        let p = params();
        let s = Complex64::new(0.5, 0.3);
        let far = damping_kernel_laplace(s, 60.0, &p).unwrap();
        assert!(far.norm() < 1e-10);
    }

    #[test]
    fn phase_convolution_matches_quadrature() {
        for &(t, d) in &[(0.05f64, 0.1f64), (0.3, 0.1), (2.0, 0.0), (5.0, 1.3)] {
            let direct = integrate_adaptive(
                |u| damping_kernel(u, d, &params()) * (1.3 * (t - u)).cos(),
                &[0.0, d.min(t), t],
                1e-15,
                1e-13,
                5000,
            );
            let closed = damping_phase_convolution(t, d, 1.3, 1.0, 10.0).re;
            assert_relative_eq!(closed, direct.value, epsilon = 1e-11);
            let sine = integrate_adaptive(
                |u| damping_kernel(u, d, &params()) * (1.3 * (t - u)).sin(),
                &[0.0, d.min(t), t],
                1e-15,
                1e-13,
                5000,
            );
            let closed = damping_phase_convolution(t, d, 1.3, 1.0, 10.0).im;
            assert_relative_eq!(closed, sine.value, epsilon = 1e-11);
        }
    }

    #[test]
    fn thermal_factor_branches() {
        assert_eq!(thermal_factor(3.0, 0.0), 1.0);
        let t = 0.3f64;
        for &w in &[1e-7, 2.9e-5, 3.1e-5, 0.1, 1.0, 50.0] {
            let exact = 1.0 / (w / (2.0 * t)).tanh();
            assert_relative_eq!(thermal_factor(w, t), exact, max_relative = 1e-10);
        }
    }

    #[test]
    fn noise_spectrum_values() {
        let p = params();
        assert_relative_eq!(noise_spectrum(10.0, &p), 20.0 / PI, epsilon = 1e-13);
        let warm = p.with_temperature(0.3);
        assert_relative_eq!(noise_spectrum(1e-9, &warm), 8.0 * 0.3 / PI, max_relative = 1e-6);
        assert_relative_eq!(noise_spectrum(0.0, &warm), 8.0 * 0.3 / PI);
        let w = 1e5;
        assert_relative_eq!(noise_spectrum(w, &p) * w, 400.0 / PI, max_relative = 1e-7);
    }

    #[test]
    fn noise_spectrum_is_nonnegative_and_decreasing_past_peak() {
        for t in [0.0, 0.1, 1.0] {
            let p = params().with_temperature(t);
            let mut prev = f64::INFINITY;
            for k in 0..400 {
                let w = 10.0 + 0.5 * k as f64;
                let s = noise_spectrum(w, &p);
                assert!(s >= 0.0 && s.is_finite());
                assert!(s <= prev);
                prev = s;
            }
        }
    }

    #[test]
    fn noise_kernel_symmetry_and_divergence() {
        let p = params();
        assert_eq!(noise_kernel_entry(0.0, 0.0, &p), Err(Error::LogDivergent));
        let diag = noise_kernel_entry(0.7, 0.0, &p).unwrap();
        let same = noise_kernel_entry(0.0, 0.7, &p).unwrap();
        assert_relative_eq!(diag, same, epsilon = 1e-12);
    }

    /// Filon–Simpson quadrature of ∫ S(ω) cos(ωx) dω on a uniform grid with
    /// the 1/ω tail summed in closed form; shares nothing with the panel code.
    fn filon_cosine_transform(x: f64, p: &ModelParams, omega_end: f64, n_pairs: usize) -> f64 {
        let h = omega_end / (2 * n_pairs) as f64;
        let th = h * x;
        let (alpha, beta, gamma) = if th < 1e-3 {
            let t2 = th * th;
            (
                2.0 * th * t2 / 45.0,
                2.0 / 3.0 + 2.0 * t2 / 15.0,
                4.0 / 3.0 - 2.0 * t2 / 15.0,
            )
        } else {
            let (s, c) = th.sin_cos();
            (
                1.0 / th + s * c / (th * th) - 2.0 * s * s / (th * th * th),
                2.0 * ((1.0 + c * c) / (th * th) - 2.0 * s * c / (th * th * th)),
                4.0 * (s / (th * th * th) - c / (th * th)),
            )
        };
        let f = |k: usize| noise_spectrum(k as f64 * h, p);
        let n = 2 * n_pairs;
        let mut even = 0.0;
        for k in (0..=n).step_by(2) {
            even += f(k) * (k as f64 * th).cos();
        }
        even -= 0.5 * (f(0) + f(n) * (n as f64 * th).cos());
        let mut odd = 0.0;
        for k in (1..n).step_by(2) {
            odd += f(k) * (k as f64 * th).cos();
        }
        let body = h * (alpha * f(n) * (n as f64 * th).sin() + beta * even + gamma * odd);
        let a = NoiseSpectrum::new(p).tail_coefficient() * thermal_factor(omega_end, p.temperature);
        let cut = p.omega_cut;
        // three terms of the 1/ω expansion are plenty at omega_end ≫ Ω
        let tail = crate::quadrature::cos_power_tail(omega_end, x, 1)
            - cut * cut * crate::quadrature::cos_power_tail(omega_end, x, 3)
            + cut.powi(4) * crate::quadrature::cos_power_tail(omega_end, x, 5);
        body + a * tail
    }

    #[test]
    fn noise_kernel_matches_filon_oracle() {
        for &t in &[0.0, 0.3] {
            let p = params().with_temperature(t);
            let (tau, r) = (1.0, 0.1);
            let oracle = 0.5
                * (filon_cosine_transform(tau - r, &p, 1337.0, 200_000)
                    + filon_cosine_transform(tau + r, &p, 1337.0, 200_000));
            let value = noise_kernel_entry(tau, r, &p).unwrap();
            assert!((value - oracle).abs() < 1e-8, "T={t}: {value} vs {oracle}");
        }
    }
}
