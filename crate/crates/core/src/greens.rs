//! Green's function of the coupled quantum Langevin equations.
//!
//! With y = (Q₁, Q₂, Q̇₁, Q̇₂) the equations read ẏ + 𝒵y + ∫𝒞(t−u)ẏ(u)du = B,
//! and Ĝ(s) = [s + 𝒵 + sĈ(s)]⁻¹. Exchange symmetry decouples the problem
//! into the channels u± = (Q₁ ± Q₂)/√2 with memory kernels Γ₀ ± Γ_r, so each
//! channel is a damped oscillator with response χ±(t) = L⁻¹[1/D±(s)],
//! D±(s) = s² + ω₀² + sΓ̂±(s).

use std::io::Write;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::kernels::{damping_laplace_unchecked, damping_phase_convolution};
use crate::laplace::{durbin_invert, DurbinSettings};
use crate::model::ModelParams;

/// Below this magnitude a channel determinant is treated as a pole.
const POLE_GUARD: f64 = 1e-14;
/// Largest imaginary part tolerated in an inverted time series.
const IMAGINARY_LIMIT: f64 = 1e-9;

/// Exchange-symmetry channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    /// u₊ = (Q₁ + Q₂)/√2, kernel Γ₀ + Γ_r.
    Symmetric,
    /// u₋ = (Q₁ − Q₂)/√2, kernel Γ₀ − Γ_r.
    Antisymmetric,
}

impl Channel {
    pub const BOTH: [Channel; 2] = [Channel::Symmetric, Channel::Antisymmetric];

    pub fn sign(self) -> f64 {
        match self {
            Channel::Symmetric => 1.0,
            Channel::Antisymmetric => -1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Channel::Symmetric => 0,
            Channel::Antisymmetric => 1,
        }
    }
}

/// The static matrix 𝒵 and the memory kernel transform Ĉ(s).
#[derive(Debug, Clone, PartialEq)]
pub struct QleMatrices {
    pub z_matrix: Matrix4<f64>,
    params: ModelParams,
}

impl QleMatrices {
    pub fn new(params: &ModelParams) -> Self {
        let w2 = params.omega0 * params.omega0;
        let mut z = Matrix4::zeros();
        z[(0, 2)] = -1.0;
        z[(1, 3)] = -1.0;
        z[(2, 0)] = w2;
        z[(3, 1)] = w2;
        Self {
            z_matrix: z,
            params: *params,
        }
    }

    /// Ĉ(s): rows 3–4 carry Γ̂₀ on the diagonal blocks and Γ̂_r off them.
    pub fn memory_laplace(&self, s: Complex64) -> Result<Matrix4<Complex64>> {
        let p = &self.params;
        if !(s.re > -p.omega_cut) {
            return Err(Error::OutsideConvergence { re: s.re, im: s.im });
        }
        let g0 = damping_laplace_unchecked(s, 0.0, p.gamma, p.omega_cut) / p.mass;
        let gr = damping_laplace_unchecked(s, p.distance, p.gamma, p.omega_cut) / p.mass;
        let mut c = Matrix4::zeros();
        c[(2, 0)] = g0;
        c[(3, 1)] = g0;
        c[(2, 1)] = gr;
        c[(3, 0)] = gr;
        Ok(c)
    }

    /// s + 𝒵 + sĈ(s), whose inverse is Ĝ(s).
    pub fn resolvent_argument(&self, s: Complex64) -> Result<Matrix4<Complex64>> {
        let c = self.memory_laplace(s)?;
        let z = self.z_matrix.map(|x| Complex64::new(x, 0.0));
        Ok(Matrix4::identity() * s + z + c * s)
    }
}

/// Channel memory kernel Γ̂±(s)/m.
pub fn channel_kernel_laplace(s: Complex64, channel: Channel, params: &ModelParams) -> Complex64 {
    let g0 = damping_laplace_unchecked(s, 0.0, params.gamma, params.omega_cut);
    let gr = damping_laplace_unchecked(s, params.distance, params.gamma, params.omega_cut);
    (g0 + channel.sign() * gr) / params.mass
}

/// D±(s) = s² + ω₀² + sΓ̂±(s).
pub fn channel_determinant(s: Complex64, channel: Channel, params: &ModelParams) -> Result<Complex64> {
    if !(s.re > -params.omega_cut) {
        return Err(Error::OutsideConvergence { re: s.re, im: s.im });
    }
    let w2 = params.omega0 * params.omega0;
    Ok(s * s + w2 + s * channel_kernel_laplace(s, channel, params))
}

/// The 2×2 channel resolvent in the (u, u̇) basis:
/// (1/D)·[[s, 1], [−(ω₀² + sΓ̂), s]].
pub fn channel_greens_laplace(s: Complex64, channel: Channel, params: &ModelParams) -> Result<Matrix2<Complex64>> {
    let det = channel_determinant(s, channel, params)?;
    if det.norm() < POLE_GUARD {
        return Err(Error::NearSingular {
            re: s.re,
            im: s.im,
            magnitude: det.norm(),
        });
    }
    let w2 = params.omega0 * params.omega0;
    let stiffness = w2 + s * channel_kernel_laplace(s, channel, params);
    let one = Complex64::new(1.0, 0.0);
    Ok(Matrix2::new(s, one, -stiffness, s) / det)
}

/// Reassembles a 4×4 matrix in (Q₁, Q₂, Q̇₁, Q̇₂) from the two channel blocks,
/// each given in its own (u, u̇) basis.
pub(crate) fn from_channels(plus: &Matrix2<f64>, minus: &Matrix2<f64>) -> Matrix4<f64> {
    let mut g = Matrix4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let (p, m) = (plus[(a, b)], minus[(a, b)]);
            for i in 0..2 {
                for j in 0..2 {
                    g[(2 * a + i, 2 * b + j)] = if i == j { 0.5 * (p + m) } else { 0.5 * (p - m) };
                }
            }
        }
    }
    g
}

fn complex_from_channels(plus: &Matrix2<Complex64>, minus: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    let mut g = Matrix4::zeros();
    for a in 0..2 {
        for b in 0..2 {
            let (p, m) = (plus[(a, b)], minus[(a, b)]);
            for i in 0..2 {
                for j in 0..2 {
                    g[(2 * a + i, 2 * b + j)] = if i == j { (p + m) * 0.5 } else { (p - m) * 0.5 };
                }
            }
        }
    }
    g
}

/// Ĝ(s) = [s + 𝒵 + sĈ(s)]⁻¹ computed channel by channel.
pub fn greens_laplace(s: Complex64, params: &ModelParams) -> Result<Matrix4<Complex64>> {
    let plus = channel_greens_laplace(s, Channel::Symmetric, params)?;
    let minus = channel_greens_laplace(s, Channel::Antisymmetric, params)?;
    Ok(complex_from_channels(&plus, &minus))
}

/// Ĝ(s) by a direct 4×4 inverse, for cross-checking the channel path.
pub fn greens_laplace_direct(s: Complex64, params: &ModelParams) -> Result<Matrix4<Complex64>> {
    let m = QleMatrices::new(params).resolvent_argument(s)?;
    m.try_inverse().ok_or(Error::NearSingular {
        re: s.re,
        im: s.im,
        magnitude: 0.0,
    })
}

/// Uniform step used for G(t): h ≤ min(0.01, 0.1/Ω, r/20).
pub fn fine_step(params: &ModelParams) -> f64 {
    let mut h = 0.01f64.min(0.1 / params.omega_cut);
    if params.distance > 0.0 {
        h = h.min(params.distance / 20.0);
    }
    h
}

/// Channel response on the uniform grid tᵢ = i·h: χ, χ̇ and χ̈ for t > 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelResponse {
    pub chi: Vec<f64>,
    pub chi_dot: Vec<f64>,
    pub chi_ddot: Vec<f64>,
}

/// Homogeneous propagator G(t) with y(t) = G(t)y(0) in the absence of noise.
#[derive(Debug, Clone)]
pub struct GreensFunction {
    pub params: ModelParams,
    pub time_grid: Vec<f64>,
    pub time_values: Vec<Matrix4<f64>>,
    pub durbin_settings: DurbinSettings,
    /// Largest imaginary part discarded during inversion.
    pub imaginary_residue: f64,
    step: f64,
    channels: [ChannelResponse; 2],
}

impl GreensFunction {
    /// Ĝ(s) for the same parameters.
    pub fn laplace(&self, s: Complex64) -> Result<Matrix4<Complex64>> {
        greens_laplace(s, &self.params)
    }

    /// Spacing of the internal uniform grid.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of internal grid points.
    pub fn len(&self) -> usize {
        self.channels[0].chi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Last time covered by the internal grid.
    pub fn t_max(&self) -> f64 {
        self.step * (self.len() - 1) as f64
    }

    pub fn channel(&self, channel: Channel) -> &ChannelResponse {
        &self.channels[channel.index()]
    }

    /// G at internal grid index i.
    pub fn at_index(&self, i: usize) -> Matrix4<f64> {
        let block = |c: &ChannelResponse| Matrix2::new(c.chi_dot[i], c.chi[i], c.chi_ddot[i], c.chi_dot[i]);
        from_channels(&block(&self.channels[0]), &block(&self.channels[1]))
    }

    /// (χ, χ̇, χ̈) of one channel at any t in the grid, by piecewise cubic
    /// interpolation.
    pub fn channel_values(&self, channel: Channel, t: f64) -> Result<[f64; 3]> {
        let c = self.channel(channel);
        let n = c.chi.len();
        let t_max = self.t_max();
        if !(t >= 0.0) || t > t_max * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::GridCoverage { t, t_max });
        }
        let x = (t / self.step).min((n - 1) as f64);
        let i = (x.floor() as usize).min(n.saturating_sub(2));
        if n == 1 {
            return Ok([c.chi[0], c.chi_dot[0], c.chi_ddot[0]]);
        }
        let u = x - i as f64;
        if u.abs() < 1e-12 || (1.0 - u).abs() < 1e-12 {
            let k = if u < 0.5 { i } else { i + 1 };
            return Ok([c.chi[k], c.chi_dot[k], c.chi_ddot[k]]);
        }
        let h = self.step;
        let hermite = |y0: f64, d0: f64, y1: f64, d1: f64| {
            let u2 = u * u;
            let u3 = u2 * u;
            (2.0 * u3 - 3.0 * u2 + 1.0) * y0
                + (u3 - 2.0 * u2 + u) * h * d0
                + (-2.0 * u3 + 3.0 * u2) * y1
                + (u3 - u2) * h * d1
        };
        let chi = hermite(c.chi[i], c.chi_dot[i], c.chi[i + 1], c.chi_dot[i + 1]);
        let chi_dot = hermite(c.chi_dot[i], c.chi_ddot[i], c.chi_dot[i + 1], c.chi_ddot[i + 1]);
        // four-point Lagrange for χ̈, shifted inward at the ends
        let lo = i.saturating_sub(1).min(n.saturating_sub(4));
        let pts: Vec<usize> = (lo..(lo + 4).min(n)).collect();
        let mut chi_ddot = 0.0;
        for &a in &pts {
            let mut w = 1.0;
            for &b in &pts {
                if a != b {
                    w *= (x - b as f64) / (a as f64 - b as f64);
                }
            }
            chi_ddot += w * c.chi_ddot[a];
        }
        Ok([chi, chi_dot, chi_ddot])
    }

    /// G(t) at any t covered by the grid.
    pub fn evaluate(&self, t: f64) -> Result<Matrix4<f64>> {
        let [a, b, c] = self.channel_values(Channel::Symmetric, t)?;
        let [d, e, f] = self.channel_values(Channel::Antisymmetric, t)?;
        Ok(from_channels(&Matrix2::new(b, a, c, b), &Matrix2::new(e, d, f, e)))
    }

    /// CSV with columns t, G11..G44 (row-major) at the requested times.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let mut header = String::from("t");
        for i in 1..=4 {
            for j in 1..=4 {
                header.push_str(&format!(",G{i}{j}"));
            }
        }
        writeln!(out, "{header}")?;
        for (t, g) in self.time_grid.iter().zip(&self.time_values) {
            write!(out, "{t:.12e}")?;
            for i in 0..4 {
                for j in 0..4 {
                    write!(out, ",{:.12e}", g[(i, j)])?;
                }
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Inverts Ĝ(s) on a uniform internal grid covering `t_grid` and samples
/// G(t) at the requested times.
///
/// Each channel response is split into a closed-form approximant and a
/// remainder decaying at least like s⁻⁴; only the remainder goes through
/// Durbin's series, which then converges quickly:
///
/// - χ  = sin ω₀t/ω₀ + L⁻¹[1/D − 1/P]
/// - χ̇  = cos ω₀t − (Γ± ∗ sin ω₀·)/ω₀ + L⁻¹[s/D − s²/P + Γ̂±/P]
/// - χ̈  = −ω₀ sin ω₀t − (Γ± ∗ cos ω₀·) + L⁻¹[−(ω₀² + sΓ̂±)(1/D − 1/P)]
///
/// with P = s² + ω₀².
pub fn greens_time(t_grid: &[f64], params: &ModelParams, settings: &DurbinSettings) -> Result<GreensFunction> {
    let Some(&t_last) = t_grid.last() else {
        return Err(Error::InvalidParameter {
            field: "t_grid",
            reason: "empty time grid".into(),
        });
    };
    if !(t_grid[0] >= 0.0) || t_grid.windows(2).any(|w| !(w[1] > w[0])) || !t_last.is_finite() {
        return Err(Error::InvalidParameter {
            field: "t_grid",
            reason: "times must be finite, non-negative and strictly increasing".into(),
        });
    }
    if !(settings.period_factor > 2.0) {
        return Err(Error::InvalidParameter {
            field: "period_factor",
            reason: format!(
                "period must exceed twice the time span, got factor {}",
                settings.period_factor
            ),
        });
    }
    let h_req = fine_step(params);
    let n_steps = ((t_last / h_req).ceil() as usize).max(1);
    let h = if t_last > 0.0 { t_last / n_steps as f64 } else { h_req };
    let m_bins = (settings.period_factor * n_steps as f64).ceil() as usize;
    let period = m_bins as f64 * h;
    let shift = settings.shift_times_period / period;

    let mut residue = 0.0f64;
    let mut channels = Vec::with_capacity(2);
    for channel in Channel::BOTH {
        let (resp, res) = invert_channel(channel, params, settings, n_steps + 1, h, m_bins, period, shift)?;
        residue = residue.max(res);
        channels.push(resp);
    }
    if residue > IMAGINARY_LIMIT {
        return Err(Error::ComplexResidue { residue });
    }
    let channels: [ChannelResponse; 2] = channels.try_into().expect("two channels");
    let mut g = GreensFunction {
        params: *params,
        time_grid: t_grid.to_vec(),
        time_values: Vec::new(),
        durbin_settings: *settings,
        imaginary_residue: residue,
        step: h,
        channels,
    };
    g.time_values = t_grid.iter().map(|&t| g.evaluate(t)).collect::<Result<_>>()?;
    Ok(g)
}

#[allow(clippy::too_many_arguments)]
fn invert_channel(
    channel: Channel,
    params: &ModelParams,
    settings: &DurbinSettings,
    len: usize,
    h: f64,
    m_bins: usize,
    period: f64,
    shift: f64,
) -> Result<(ChannelResponse, f64)> {
    let w0 = params.omega0;
    let w2 = w0 * w0;
    let times: Vec<f64> = (0..len).map(|i| i as f64 * h).collect();
    let mut chi: Vec<f64> = times.iter().map(|&t| (w0 * t).sin() / w0).collect();
    let mut chi_dot: Vec<f64> = times.iter().map(|&t| (w0 * t).cos()).collect();
    let mut chi_ddot: Vec<f64> = times.iter().map(|&t| -w0 * (w0 * t).sin()).collect();

    // the antisymmetric kernel vanishes identically at r = 0
    let damped = params.gamma > 0.0 && !(channel == Channel::Antisymmetric && params.distance == 0.0);
    let mut residue = 0.0f64;
    if damped {
        let sign = channel.sign();
        let conv = |t: f64| {
            damping_phase_convolution(t, 0.0, w0, params.gamma, params.omega_cut)
                + sign * damping_phase_convolution(t, params.distance, w0, params.gamma, params.omega_cut)
        };
        for (i, &t) in times.iter().enumerate() {
            let c = conv(t) / params.mass;
            chi_dot[i] -= c.im / w0;
            chi_ddot[i] -= c.re;
        }
        let remainder1 = |s: Complex64| {
            let phi = channel_kernel_laplace(s, channel, params);
            let q = s * s + w2;
            let d = q + s * phi;
            -s * phi / (d * q)
        };
        let remainder2 = |s: Complex64| {
            let phi = channel_kernel_laplace(s, channel, params);
            let q = s * s + w2;
            let d = q + s * phi;
            phi * (w2 + s * phi) / (d * q)
        };
        let remainder3 = |s: Complex64| {
            let phi = channel_kernel_laplace(s, channel, params);
            let q = s * s + w2;
            let d = q + s * phi;
            (w2 + s * phi) * s * phi / (d * q)
        };
        let r1 = durbin_invert(remainder1, period, m_bins, len, shift, settings)?;
        let r2 = durbin_invert(remainder2, period, m_bins, len, shift, settings)?;
        let r3 = durbin_invert(remainder3, period, m_bins, len, shift, settings)?;
        for i in 0..len {
            chi[i] += r1.values[i];
            chi_dot[i] += r2.values[i];
            chi_ddot[i] += r3.values[i];
        }
        residue = r1.imaginary_residue.max(r2.imaginary_residue).max(r3.imaginary_residue);
    }
    // exact initial values: χ(0) = 0, χ̇(0) = 1, χ̈(0⁺) = 0
    chi[0] = 0.0;
    chi_dot[0] = 1.0;
    chi_ddot[0] = 0.0;
    Ok((ChannelResponse { chi, chi_dot, chi_ddot }, residue))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn params(r: f64) -> ModelParams {
        ModelParams::new(1.0, 10.0, 0.0, r).unwrap()
    }

    fn max_abs(m: &Matrix4<Complex64>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn channel_path_equals_direct_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &r in &[0.0, 0.1, 0.5, 2.0] {
            let p = params(r);
            let qle = QleMatrices::new(&p);
            for _ in 0..20 {
                let s = Complex64::new(rng.random_range(0.01..5.0), rng.random_range(-20.0..20.0));
                let g = greens_laplace(s, &p).unwrap();
                let direct = greens_laplace_direct(s, &p).unwrap();
                assert!(max_abs(&(g - direct)) < 1e-12);
                let residual = g * qle.resolvent_argument(s).unwrap() - Matrix4::identity();
                assert!(max_abs(&residual) < 1e-12);
            }
        }
    }

    #[test]
    fn resolvent_leading_order() {
        let s = Complex64::new(1e7, 0.0);
        let g = greens_laplace(s, &params(0.1)).unwrap() * s;
        assert!(max_abs(&(g - Matrix4::identity())) < 1e-5);
    }

    #[test]
    fn antisymmetric_channel_is_undamped_at_zero_distance() {
        let p = params(0.0);
        let s = Complex64::new(0.3, 2.0);
        assert_eq!(
            channel_kernel_laplace(s, Channel::Antisymmetric, &p),
            Complex64::new(0.0, 0.0)
        );
        let d = channel_determinant(s, Channel::Antisymmetric, &p).unwrap();
        assert_relative_eq!(d.re, (s * s + 1.0).re);
        assert_relative_eq!(d.im, (s * s + 1.0).im);
    }

    #[test]
    fn near_pole_is_reported() {
        let mut p = params(0.0);
        p.gamma = 1e-300;
        let s = Complex64::new(1e-20, 1.0);
        assert!(matches!(
            channel_greens_laplace(s, Channel::Antisymmetric, &p),
            Err(Error::NearSingular { .. })
        ));
    }

    #[test]
    fn free_oscillators_without_damping() {
        let mut p = params(0.3);
        p.gamma = 0.0;
        let grid: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let g = greens_time(&grid, &p, &DurbinSettings::default()).unwrap();
        for (t, m) in grid.iter().zip(&g.time_values) {
            for i in 0..2 {
                for j in 0..2 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    assert_relative_eq!(m[(i, j)], delta * t.cos(), epsilon = 1e-12);
                    assert_relative_eq!(m[(i + 2, j)], -delta * t.sin(), epsilon = 1e-12);
                }
            }
        }
    }

    /// Reference channel response by direct time stepping of
    /// ẍ + ω₀²x + ∫₀ᵗ Γ(t−u)ẋ(u)du = 0, exploiting that Γ is a sum of
    /// exponentials so the memory term obeys auxiliary ODEs (RK4).
    fn reference_response(channel: Channel, p: &ModelParams, t_end: f64, dt: f64) -> Vec<(f64, f64, f64)> {
        // Γ±(t) = γΩ[e^{−Ω|t−r|} + e^{−Ω(t+r)}] ± ... with the r = 0 term.
        // Integrate x, v with the memory integral evaluated by trapezoid on
        // the stored history (small dt makes this accurate enough).
        let n = (t_end / dt).round() as usize;
        let kernel = |t: f64| {
            crate::kernels::damping_kernel(t, 0.0, p)
                + channel.sign() * crate::kernels::damping_kernel(t, p.distance, p)
        };
        let ker: Vec<f64> = (0..=n).map(|i| kernel(i as f64 * dt)).collect();
        let mut x = vec![0.0; n + 1];
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        let mut out = Vec::with_capacity(n + 1);
        let mem = |k: usize, v: &[f64], vk: f64| -> f64 {
            // trapezoid ∫₀^{t_k} Γ(t_k − u) v(u) du with v_k supplied
            if k == 0 {
                return 0.0;
            }
            let mut s = 0.5 * (ker[k] * v[0] + ker[0] * vk);
            for j in 1..k {
                s += ker[k - j] * v[j];
            }
            s * dt
        };
        out.push((x[0], v[0], -mem(0, &v, v[0]) - x[0]));
        for k in 0..n {
            // implicit trapezoid for (x, v)
            let a_k = -x[k] - mem(k, &v, v[k]);
            // solve v_{k+1} = v_k + dt/2 (a_k + a_{k+1}), x_{k+1} = x_k + dt/2 (v_k + v_{k+1})
            // a_{k+1} = −x_{k+1} − known − 0.5 dt Γ(0) v_{k+1}
            let mut known = 0.5 * ker[k + 1] * v[0];
            for j in 1..=k {
                known += ker[k + 1 - j] * v[j];
            }
            known *= dt;
            let c = 0.5 * dt * ker[0];
            // v1 = v_k + dt/2 a_k + dt/2 (−x_k − dt/2 (v_k + v1) − known − c v1)
            let rhs = v[k] + 0.5 * dt * a_k + 0.5 * dt * (-x[k] - 0.5 * dt * v[k] - known);
            let v1 = rhs / (1.0 + 0.5 * dt * (0.5 * dt + c));
            v[k + 1] = v1;
            x[k + 1] = x[k] + 0.5 * dt * (v[k] + v1);
            let a1 = -x[k + 1] - known - c * v1;
            out.push((x[k + 1], v1, a1));
        }
        out
    }

    #[test]
    fn inversion_matches_time_stepping() {
        for &r in &[0.1, 0.5] {
            let p = params(r);
            let grid = [0.0, 0.5, 1.0, 2.5, 4.0];
            let g = greens_time(&grid, &p, &DurbinSettings::default()).unwrap();
            let dt = 2e-4;
            for ch in Channel::BOTH {
                let reference = reference_response(ch, &p, 4.0, dt);
                for &t in &grid[1..] {
                    let (x, v, a) = reference[(t / dt).round() as usize];
                    let [chi, chi_dot, chi_ddot] = g.channel_values(ch, t).unwrap();
                    assert_relative_eq!(chi, x, epsilon = 2e-5);
                    assert_relative_eq!(chi_dot, v, epsilon = 2e-5);
                    assert_relative_eq!(chi_ddot, a, epsilon = 1e-4);
                }
            }
        }
    }

    #[test]
    fn starts_at_identity_and_is_consistent_with_derivatives() {
        let p = params(0.1);
        let grid: Vec<f64> = (0..=100).map(|i| 0.1 * i as f64).collect();
        let g = greens_time(&grid, &p, &DurbinSettings::default()).unwrap();
        assert_eq!(g.time_values[0], Matrix4::identity());
        assert!(g.imaginary_residue < 1e-9);
        // interior Durbin values near t = 0 agree with the exact start
        let c = g.channel(Channel::Symmetric);
        assert!(c.chi[1].abs() < 2.0 * g.step());
        // centred differences: χ̇ ≈ dχ/dt, χ̈ ≈ dχ̇/dt to O(h²)
        let h = g.step();
        for ch in Channel::BOTH {
            let c = g.channel(ch);
            for i in (5..c.chi.len() - 5).step_by(37) {
                let d1 = (c.chi[i + 1] - c.chi[i - 1]) / (2.0 * h);
                let d2 = (c.chi_dot[i + 1] - c.chi_dot[i - 1]) / (2.0 * h);
                assert!((d1 - c.chi_dot[i]).abs() < 1e-4, "{d1} {}", c.chi_dot[i]);
                assert!((d2 - c.chi_ddot[i]).abs() < 5e-3, "{d2} {}", c.chi_ddot[i]);
            }
        }
    }

    #[test]
    fn decays_for_finite_distance() {
        let p = params(0.5);
        let g = greens_time(&[0.0, 200.0], &p, &DurbinSettings::default()).unwrap();
        let m = g.time_values[1];
        assert!(m.iter().all(|x| x.abs() < 1e-3), "{m}");
    }

    #[test]
    fn rejects_bad_grids() {
        let p = params(0.1);
        let s = DurbinSettings::default();
        assert!(greens_time(&[], &p, &s).is_err());
        assert!(greens_time(&[1.0, 0.5], &p, &s).is_err());
        assert!(greens_time(&[-1.0, 0.5], &p, &s).is_err());
        let short = DurbinSettings {
            period_factor: 1.5,
            ..s
        };
        assert!(greens_time(&[0.0, 1.0], &p, &short).is_err());
        let g = greens_time(&[0.0, 1.0], &p, &s).unwrap();
        assert!(matches!(g.evaluate(2.0), Err(Error::GridCoverage { .. })));
    }
}
