//! Covariance matrix of the two oscillators, transient and asymptotic.
//!
//! In the channel basis the noise part of C(t) reduces to single frequency
//! integrals of S(ω)(1 ± cos ωr) against |h(ω,t)|², where
//! h_u(ω,t) = ∫₀ᵗ χ±(u)e^{iωu}du and h_v(ω,t) = ∫₀ᵗ χ̇±(u)e^{iωu}du are the
//! finite-time Fourier transforms of the channel responses. The integrals
//! are cut at ω_max; the remainder is added from the large-ω form of h.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::entanglement::{ensure_physical, SymplecticForm};
use crate::error::{Error, Result};
use crate::greens::{channel_determinant, channel_kernel_laplace, from_channels, Channel, GreensFunction};
use crate::kernels::{noise_spectrum, thermal_factor, NoiseSpectrum};
use crate::model::ModelParams;
use crate::quadrature::{cos_power_tail, integrate_adaptive, GaussLegendre};

/// Slack on the uncertainty bound for computed covariances.
const OUTPUT_PHYSICAL_TOL: f64 = 1e-4;
const SYMMETRY_TOL: f64 = 1e-12;

/// When a covariance matrix is valid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeLabel {
    At(f64),
    Asymptotic,
}

/// Dimensionless covariance in the doubled convention (vacuum = identity),
/// ordering (Q₁, Q₂, P₁, P₂).
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    pub entries: Matrix4<f64>,
    pub time_label: TimeLabel,
}

impl CovarianceMatrix {
    /// Checks symmetry to 1e−12.
    pub fn new(entries: Matrix4<f64>, time_label: TimeLabel) -> Result<Self> {
        let asym = (entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL * entries.amax().max(1.0) {
            return Err(Error::InvalidParameter {
                field: "covariance",
                reason: format!("matrix is not symmetric (deviation {asym:e})"),
            });
        }
        Ok(Self { entries, time_label })
    }

    pub fn at(entries: Matrix4<f64>, t: f64) -> Result<Self> {
        Self::new(entries, TimeLabel::At(t))
    }

    /// Smallest eigenvalue of the Hermitian matrix C − iΣ; non-negative for
    /// physical states.
    pub fn uncertainty_margin(&self) -> f64 {
        let sigma = SymplecticForm::new().matrix;
        let m: Matrix4<Complex64> = Matrix4::from_fn(|i, j| Complex64::new(self.entries[(i, j)], -sigma[(i, j)]));
        m.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Largest violation of C₁₁ = C₂₂, C₃₃ = C₄₄, C₁₃ = C₂₄, C₁₄ = C₂₃.
    pub fn exchange_asymmetry(&self) -> f64 {
        let e = &self.entries;
        [(0, 0, 1, 1), (2, 2, 3, 3), (0, 2, 1, 3), (0, 3, 1, 2)]
            .iter()
            .map(|&(a, b, c, d)| (e[(a, b)] - e[(c, d)]).abs())
            .fold(0.0, f64::max)
    }

    /// Largest absolute entry difference.
    pub fn max_deviation(&self, other: &CovarianceMatrix) -> f64 {
        (self.entries - other.entries).amax()
    }

    pub fn time(&self) -> Option<f64> {
        match self.time_label {
            TimeLabel::At(t) => Some(t),
            TimeLabel::Asymptotic => None,
        }
    }
}

/// Both oscillators in their ground state: the identity.
pub fn ground_state_covariance() -> CovarianceMatrix {
    CovarianceMatrix {
        entries: Matrix4::identity(),
        time_label: TimeLabel::At(0.0),
    }
}

/// Default truncation frequency for the noise integrals.
pub fn default_omega_max(params: &ModelParams) -> f64 {
    (40.0 * params.omega_cut)
        .max(20.0 * params.gamma * params.omega_cut)
        .max(40.0 * params.temperature)
        .max(40.0 * params.omega0)
}

/// Cutoff at least [`default_omega_max`], raised until the estimated
/// truncation error is a quarter of `tol`, but never beyond eight times the
/// default (tighter tolerances then fail the truncation check).
pub fn omega_max_for(params: &ModelParams, tol: f64) -> f64 {
    let w = default_omega_max(params);
    let estimate = TailModel::new(params, w).error_estimate(params);
    let target = 0.25 * tol;
    if estimate > target && target > 0.0 {
        // the estimate falls like W⁻⁴ and coth(W/2T) only decreases
        w * (estimate / target).powf(0.25).min(8.0)
    } else {
        w
    }
}

/// ∫_W^∞ cos(kω) / (ω(a² + ω²)) dω = Σₙ (−a²)ⁿ ∫_W^∞ cos(kω)/ω^{2n+3} dω.
fn drude_tail_over_square(w: f64, a: f64, k: f64) -> f64 {
    debug_assert!(w > 4.0 * a);
    let mut factor = 1.0;
    let mut sum = 0.0;
    for n in 0..10u32 {
        let term = factor * cos_power_tail(w, k, 2 * n + 3);
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        factor *= -a * a;
    }
    sum
}

/// Noise tail beyond W of one channel given the channel response at t,
/// from h_u ≈ χ(t)e^{iωt}/(iω) and h_v ≈ (χ̇(t)e^{iωt} − 1)/(iω).
struct TailModel {
    w: f64,
    cut: f64,
    /// (4γ/π)Ω² coth(W/2T)
    amplitude: f64,
    distance: f64,
}

impl TailModel {
    fn new(params: &ModelParams, w: f64) -> Self {
        Self {
            w,
            cut: params.omega_cut,
            amplitude: NoiseSpectrum::new(params).tail_coefficient() * thermal_factor(w, params.temperature),
            distance: params.distance,
        }
    }

    fn k(&self, x: f64) -> f64 {
        self.amplitude * drude_tail_over_square(self.w, self.cut, x)
    }

    /// (uu, vv, uv) tails at time t for channel sign c.
    fn channel(&self, sign: f64, t: f64, chi: f64, chi_dot: f64) -> [f64; 3] {
        let r = self.distance;
        let k0 = self.k(0.0) + sign * self.k(r);
        if t == 0.0 && chi == 0.0 && chi_dot == 1.0 {
            return [0.0; 3];
        }
        let kt = if t.is_finite() {
            self.k(t) + 0.5 * sign * (self.k(t + r) + self.k(t - r))
        } else {
            0.0
        };
        let uu = chi * chi * k0;
        let vv = (1.0 + chi_dot * chi_dot) * k0 - 2.0 * chi_dot * kt;
        let uv = -chi * (kt - chi_dot * k0);
        [uu, vv, uv]
    }

    /// Size of the neglected next-order terms.
    fn error_estimate(&self, params: &ModelParams) -> f64 {
        let w = self.w;
        let spread = self.cut * self.cut + 2.0 * params.omega0 * params.omega0 + 8.0 * params.gamma * self.cut;
        self.amplitude * spread / (2.0 * w.powi(4))
    }
}

/// Assembles C from channel noise blocks [uu, vv, uv] in (Q₁,Q₂,Q̇₁,Q̇₂).
fn noise_matrix(plus: [f64; 3], minus: [f64; 3]) -> Matrix4<f64> {
    let block = |b: [f64; 3]| Matrix2::new(b[0], b[2], b[2], b[1]);
    from_channels(&block(plus), &block(minus))
}

/// Resonance of a damped channel, located on the real axis by Newton's
/// method on Re D(−iω), with the effective width Re Γ̂(−iω).
fn channel_resonance(channel: Channel, params: &ModelParams) -> Option<(f64, f64)> {
    if channel == Channel::Antisymmetric && params.distance == 0.0 {
        return Some((params.omega0, 0.0));
    }
    let re_det = |w: f64| {
        channel_determinant(Complex64::new(0.0, -w), channel, params)
            .map(|d| d.re)
            .unwrap_or(f64::NAN)
    };
    let mut w = params.omega0;
    for _ in 0..30 {
        let h = 1e-6 * w.max(1e-3);
        let f = re_det(w);
        let df = (re_det(w + h) - re_det(w - h)) / (2.0 * h);
        if !f.is_finite() || !df.is_finite() || df == 0.0 {
            return None;
        }
        let next = w - f / df;
        if !(next > 0.0) {
            return None;
        }
        if (next - w).abs() < 1e-13 {
            w = next;
            break;
        }
        w = next;
    }
    let width = channel_kernel_laplace(Complex64::new(0.0, -w), channel, params).re;
    Some((w, width.max(0.0)))
}

/// Breakpoints on [0, W]: geometric spacing, refinement around channel
/// resonances, and panels no wider than `max_width`.
fn frequency_breakpoints(params: &ModelParams, w_max: f64, max_width: f64) -> Vec<f64> {
    let mut pts = vec![0.0, params.omega_cut.min(w_max), params.omega0.min(w_max)];
    let mut x = 1e-3;
    while x < w_max {
        pts.push(x);
        x *= 1.25;
    }
    pts.push(w_max);
    for ch in Channel::BOTH {
        if let Some((centre, gamma_eff)) = channel_resonance(ch, params) {
            let width = (10.0 * gamma_eff).max(1e-3);
            for f in [1.0 / 64.0, 1.0 / 16.0, 1.0 / 4.0, 0.5, 1.0, 2.0, 4.0] {
                for s in [-1.0, 1.0] {
                    let p = centre + s * f * width;
                    if p > 0.0 && p < w_max {
                        pts.push(p);
                    }
                }
            }
            pts.push(centre);
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut out = Vec::with_capacity(pts.len());
    for w in pts.windows(2) {
        let n = ((w[1] - w[0]) / max_width).ceil().max(1.0) as usize;
        for k in 0..n {
            out.push(w[0] + (w[1] - w[0]) * k as f64 / n as f64);
        }
    }
    out.push(w_max);
    out
}

/// C∞ = lim C(t) for γ > 0, r > 0, where the initial state is forgotten:
/// per channel C_uu = ∫ S±|1/D±(−iω)|², C_vv = ∫ S± ω²|1/D±(−iω)|²,
/// C_uv = 0, with S± = S(ω)(1 ± cos ωr).
pub fn covariance_asymptotic(params: &ModelParams, omega_max: Option<f64>, tol: f64) -> Result<CovarianceMatrix> {
    let params = params.validate()?;
    if params.distance == 0.0 {
        return Err(Error::InvalidParameter {
            field: "distance",
            reason: "the relative coordinate is undamped at r = 0, so no stationary state exists".into(),
        });
    }
    let w_max = omega_max.unwrap_or_else(|| omega_max_for(&params, tol));
    let tail = TailModel::new(&params, w_max);
    let estimate = tail.error_estimate(&params);
    if estimate > tol {
        return Err(Error::Truncation {
            omega_max: w_max,
            estimate,
            tol,
        });
    }
    let max_width = if params.distance > 0.0 {
        PI / params.distance
    } else {
        w_max
    };
    let pts = frequency_breakpoints(&params, w_max, max_width.min(2.0 * params.omega_cut));
    let mut blocks = [[0.0; 3]; 2];
    for ch in Channel::BOTH {
        let sign = ch.sign();
        let response = |w: f64| -> f64 {
            let d = channel_determinant(Complex64::new(0.0, -w), ch, &params).expect("imaginary axis");
            let weight = noise_spectrum(w, &params) * (1.0 + sign * (w * params.distance).cos());
            weight / d.norm_sqr()
        };
        let uu = integrate_adaptive(response, &pts, 0.1 * tol, 1e-13, 200_000);
        let vv = integrate_adaptive(|w| w * w * response(w), &pts, 0.1 * tol, 1e-13, 200_000);
        let [tuu, tvv, _] = tail.channel(sign, f64::INFINITY, 0.0, 0.0);
        // ω²|1/D|² = 1 + 2(ω₀² + Γ±(0))/ω² + …: the 1/ω² correction is
        // included here because it is not tied to a finite time
        let gamma0 = params.gamma * params.omega_cut * (2.0 + sign * 2.0 * (-params.omega_cut * params.distance).exp());
        let correction = 2.0
            * (params.omega0 * params.omega0 + gamma0)
            * tail.amplitude
            * (cos_power_tail(w_max, 0.0, 5) + sign * cos_power_tail(w_max, params.distance, 5));
        let err = uu.error + vv.error;
        if err > tol {
            return Err(Error::Truncation {
                omega_max: w_max,
                estimate: err,
                tol,
            });
        }
        // |1/D|² ≈ 1/ω⁴ beyond W
        let uu_tail =
            tail.amplitude * (cos_power_tail(w_max, 0.0, 5) + sign * cos_power_tail(w_max, params.distance, 5));
        blocks[ch.index()] = [uu.value + tuu + uu_tail, vv.value + tvv + correction, 0.0];
    }
    let c = symmetrize(&noise_matrix(blocks[0], blocks[1]));
    let out = CovarianceMatrix::new(c, TimeLabel::Asymptotic)?;
    ensure_physical(&out, OUTPUT_PHYSICAL_TOL)?;
    Ok(out)
}

fn symmetrize(c: &Matrix4<f64>) -> Matrix4<f64> {
    (c + c.transpose()) * 0.5
}

/// Filon weights for one step of length h with cubic Hermite data:
/// ∫₀ʰ p(τ)e^{iωτ}dτ = w₀y₀ + w₁y₀′ + w₂y₁ + w₃y₁′.
fn hermite_filon_weights(omega: f64, h: f64) -> [Complex64; 4] {
    let theta = omega * h;
    let mu = phase_moments(theta);
    let w00 = mu[0] - 3.0 * mu[2] + 2.0 * mu[3];
    let w10 = mu[1] - 2.0 * mu[2] + mu[3];
    let w01 = 3.0 * mu[2] - 2.0 * mu[3];
    let w11 = mu[3] - mu[2];
    [w00 * h, w10 * h * h, w01 * h, w11 * h * h]
}

/// μₖ = ∫₀¹ uᵏ e^{iθu} du, k = 0..3.
fn phase_moments(theta: f64) -> [Complex64; 4] {
    let i = Complex64::new(0.0, 1.0);
    if theta.abs() < 0.5 {
        let mut mu = [Complex64::new(0.0, 0.0); 4];
        let mut term = Complex64::new(1.0, 0.0);
        for n in 0..30 {
            for (k, m) in mu.iter_mut().enumerate() {
                *m += term / (n + k + 1) as f64;
            }
            term *= i * theta / (n + 1) as f64;
            if term.norm() < 1e-18 {
                break;
            }
        }
        mu
    } else {
        let e = Complex64::from_polar(1.0, theta);
        let it = i * theta;
        let mut mu = [(e - 1.0) / it; 4];
        for k in 1..4 {
            mu[k] = (e - k as f64 * mu[k - 1]) / it;
        }
        mu
    }
}

/// Position of an output time on the uniform grid.
#[derive(Debug, Clone, Copy)]
struct OutputPoint {
    t: f64,
    index: usize,
    /// Partial step beyond `index`, zero when t is a grid point.
    remainder: f64,
}

/// C(t) for one time.
pub fn covariance_time(
    t: f64,
    c0: &CovarianceMatrix,
    greens: &GreensFunction,
    params: &ModelParams,
    tol: f64,
) -> Result<CovarianceMatrix> {
    Ok(covariance_series(&[t], c0, greens, params, tol)?.remove(0))
}

/// C(tᵢ) for increasing times, sharing one pass over the frequency grid.
///
/// C(t) = G(t)C₀G(t)ᵀ + noise part; the noise part is independent of C₀.
pub fn covariance_series(
    times: &[f64],
    c0: &CovarianceMatrix,
    greens: &GreensFunction,
    params: &ModelParams,
    tol: f64,
) -> Result<Vec<CovarianceMatrix>> {
    let params = params.validate()?;
    if greens.params != params {
        return Err(Error::InvalidParameter {
            field: "greens",
            reason: "Green's function was computed for different parameters".into(),
        });
    }
    ensure_physical(c0, 1e-6)?;
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter {
            field: "times",
            reason: "output times must be strictly increasing".into(),
        });
    }
    let h = greens.step();
    let t_max = greens.t_max();
    let mut outputs = Vec::with_capacity(times.len());
    for &t in times {
        if !(t >= 0.0) || t > t_max * (1.0 + 1e-12) + 1e-12 {
            return Err(Error::GridCoverage { t, t_max });
        }
        let x = t / h;
        let nearest = x.round();
        let (index, remainder) = if (x - nearest).abs() < 1e-9 {
            (nearest as usize, 0.0)
        } else {
            (x.floor() as usize, t - x.floor() * h)
        };
        outputs.push(OutputPoint {
            t,
            index: index.min(greens.len() - 1),
            remainder,
        });
    }
    let noise = noise_series(&outputs, greens, &params, tol)?;
    outputs
        .iter()
        .zip(noise)
        .map(|(o, n)| {
            let g = greens.evaluate(o.t)?;
            let c = symmetrize(&(g * c0.entries * g.transpose() + n));
            let out = CovarianceMatrix::at(c, o.t)?;
            ensure_physical(&out, OUTPUT_PHYSICAL_TOL)?;
            Ok(out)
        })
        .collect()
}

/// Hermite data (value, derivative) at the end of a partial step.
struct PartialData {
    chi: [[f64; 3]; 2],
}

fn noise_series(
    outputs: &[OutputPoint],
    greens: &GreensFunction,
    params: &ModelParams,
    tol: f64,
) -> Result<Vec<Matrix4<f64>>> {
    let Some(last) = outputs.last() else {
        return Ok(Vec::new());
    };
    let w_max = omega_max_for(params, tol);
    let tail = TailModel::new(params, w_max);
    let estimate = tail.error_estimate(params);
    if estimate > tol {
        return Err(Error::Truncation {
            omega_max: w_max,
            estimate,
            tol,
        });
    }
    let h = greens.step();
    let span = last.t.max(params.distance).max(1e-9);
    let pts = frequency_breakpoints(params, w_max, (PI / span).min(2.0 * params.omega_cut));
    let rule = GaussLegendre::new(8);
    let nodes: Vec<(f64, f64)> = pts
        .windows(2)
        .flat_map(|w| rule.on(w[0], w[1]).collect::<Vec<_>>())
        .collect();

    let active: Vec<Channel> = Channel::BOTH
        .into_iter()
        .filter(|&c| !(c == Channel::Antisymmetric && params.distance == 0.0))
        .collect();
    let partial: Vec<Option<PartialData>> = outputs
        .iter()
        .map(|o| {
            if o.remainder == 0.0 {
                return Ok(None);
            }
            let a = greens.channel_values(Channel::Symmetric, o.t)?;
            let b = greens.channel_values(Channel::Antisymmetric, o.t)?;
            Ok(Some(PartialData { chi: [a, b] }))
        })
        .collect::<Result<_>>()?;
    let resp = [
        greens.channel(Channel::Symmetric),
        greens.channel(Channel::Antisymmetric),
    ];
    let n_out = outputs.len();
    let steps = last.index;

    let chunk = 64;
    let sums: Vec<[f64; 6]> = nodes
        .par_chunks(chunk)
        .map(|block| {
            let mut acc = vec![[0.0f64; 6]; n_out];
            for &(omega, weight) in block {
                let s = noise_spectrum(omega, params) * weight;
                let cr = (omega * params.distance).cos();
                let sw = [s * (1.0 + cr), s * (1.0 - cr)];
                let fw = hermite_filon_weights(omega, h);
                let step_phase = Complex64::from_polar(1.0, omega * h);
                let mut phase = Complex64::new(1.0, 0.0);
                let mut hu = [Complex64::new(0.0, 0.0); 2];
                let mut hv = [Complex64::new(0.0, 0.0); 2];
                let mut next_out = 0;
                let record = |n: usize,
                              phase: Complex64,
                              hu: &[Complex64; 2],
                              hv: &[Complex64; 2],
                              next_out: &mut usize,
                              acc: &mut Vec<[f64; 6]>| {
                    while *next_out < n_out && outputs[*next_out].index == n {
                        let o = outputs[*next_out];
                        for &ch in &active {
                            let c = ch.index();
                            let (mut u, mut v) = (hu[c], hv[c]);
                            if let Some(p) = &partial[*next_out] {
                                let pw = hermite_filon_weights(omega, o.remainder);
                                let r = resp[c];
                                let [x1, dx1, ddx1] = p.chi[c];
                                u += phase * (pw[0] * r.chi[n] + pw[1] * r.chi_dot[n] + pw[2] * x1 + pw[3] * dx1);
                                v +=
                                    phase * (pw[0] * r.chi_dot[n] + pw[1] * r.chi_ddot[n] + pw[2] * dx1 + pw[3] * ddx1);
                            }
                            let a = &mut acc[*next_out];
                            a[3 * c] += sw[c] * u.norm_sqr();
                            a[3 * c + 1] += sw[c] * v.norm_sqr();
                            a[3 * c + 2] += sw[c] * (u * v.conj()).re;
                        }
                        *next_out += 1;
                    }
                };
                record(0, phase, &hu, &hv, &mut next_out, &mut acc);
                for n in 0..steps {
                    for &ch in &active {
                        let c = ch.index();
                        let r = resp[c];
                        let du =
                            fw[0] * r.chi[n] + fw[1] * r.chi_dot[n] + fw[2] * r.chi[n + 1] + fw[3] * r.chi_dot[n + 1];
                        let dv = fw[0] * r.chi_dot[n]
                            + fw[1] * r.chi_ddot[n]
                            + fw[2] * r.chi_dot[n + 1]
                            + fw[3] * r.chi_ddot[n + 1];
                        hu[c] += phase * du;
                        hv[c] += phase * dv;
                    }
                    phase = if (n + 1) % 512 == 0 {
                        Complex64::from_polar(1.0, omega * h * (n + 1) as f64)
                    } else {
                        phase * step_phase
                    };
                    record(n + 1, phase, &hu, &hv, &mut next_out, &mut acc);
                }
            }
            acc
        })
        .collect::<Vec<_>>()
        // summed in chunk order so results do not depend on thread scheduling
        .into_iter()
        .fold(vec![[0.0f64; 6]; n_out], |mut a, b| {
            for (x, y) in a.iter_mut().zip(b) {
                for k in 0..6 {
                    x[k] += y[k];
                }
            }
            a
        });

    outputs
        .iter()
        .zip(sums)
        .map(|(o, s)| {
            let mut blocks = [[0.0; 3]; 2];
            for &ch in &active {
                let c = ch.index();
                let [chi, chi_dot, _] = greens.channel_values(ch, o.t)?;
                let t = tail.channel(ch.sign(), o.t, chi, chi_dot);
                blocks[c] = [s[3 * c] + t[0], s[3 * c + 1] + t[1], s[3 * c + 2] + t[2]];
            }
            Ok(noise_matrix(blocks[0], blocks[1]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::greens::greens_time;
    use crate::laplace::DurbinSettings;
    use approx::assert_relative_eq;

    #[test]
    fn phase_moments_match_quadrature() {
        let rule = GaussLegendre::new(30);
        for &theta in &[0.0, 1e-4, 0.3, 0.49, 0.51, 2.0, 40.0] {
            let mu = phase_moments(theta);
            for (k, m) in mu.iter().enumerate() {
                let re = rule.integrate(0.0, 1.0, |u| u.powi(k as i32) * (theta * u).cos());
                let im = rule.integrate(0.0, 1.0, |u| u.powi(k as i32) * (theta * u).sin());
                assert!(
                    (m.re - re).abs() < 1e-13 && (m.im - im).abs() < 1e-13,
                    "θ={theta} k={k}"
                );
            }
        }
    }

    #[test]
    fn drude_tail_series_matches_quadrature() {
        let (w, a, w2) = (400.0, 10.0, 2400.0);
        for &k in &[0.0, 0.1, 3.7] {
            let pts: Vec<f64> = (0..=2000).map(|i| w + i as f64).collect();
            let direct = integrate_adaptive(|x| (k * x).cos() / (x * (a * a + x * x)), &pts, 1e-18, 1e-12, 100_000);
            let series = drude_tail_over_square(w, a, k) - drude_tail_over_square(w2, a, k);
            assert_relative_eq!(series, direct.value, max_relative = 1e-8, epsilon = 1e-15);
        }
    }

    #[test]
    fn ground_state_is_identity() {
        let c = ground_state_covariance();
        assert_eq!(c.entries, Matrix4::identity());
        assert!(c.uncertainty_margin() > -1e-12);
    }

    #[test]
    fn initial_time_returns_initial_state() {
        let p = ModelParams::new(1.0, 10.0, 0.2, 0.1).unwrap();
        let g = greens_time(&[0.0, 1.0], &p, &DurbinSettings::default()).unwrap();
        let c = covariance_time(0.0, &ground_state_covariance(), &g, &p, 1e-6).unwrap();
        assert_eq!(c.entries, Matrix4::identity());
    }

    #[test]
    fn asymptotic_state_of_weak_damping_is_thermal_like() {
        // far apart and weakly damped: each oscillator relaxes to coth(ω₀/2T)
        let p = ModelParams::new(0.01, 10.0, 0.5, 5.0).unwrap();
        let c = covariance_asymptotic(&p, None, 1e-6).unwrap();
        let expected = thermal_factor(1.0, 0.5);
        assert_relative_eq!(c.entries[(0, 0)], expected, max_relative = 2e-2);
        assert_relative_eq!(c.entries[(2, 2)], expected, max_relative = 2e-2);
        assert!(c.entries[(0, 1)].abs() < 1e-3);
    }

    #[test]
    fn transient_matches_asymptotic_when_relaxed() {
        // the antisymmetric channel is damped only at rate ∝ 1 − cos(ω₀r),
        // so relaxation at r = 0.5 takes t ≈ 100
        let p = ModelParams::new(1.0, 10.0, 0.0, 0.5).unwrap();
        let t = 120.0;
        let g = greens_time(&[t], &p, &DurbinSettings::default()).unwrap();
        let c = covariance_time(t, &ground_state_covariance(), &g, &p, 1e-6).unwrap();
        let inf = covariance_asymptotic(&p, None, 1e-6).unwrap();
        assert!(c.max_deviation(&inf) < 1e-3, "{} vs {}", c.entries, inf.entries);
    }

    #[test]
    fn off_grid_times_are_continuous() {
        let p = ModelParams::new(1.0, 10.0, 0.0, 0.1).unwrap();
        let g = greens_time(&[2.0], &p, &DurbinSettings::default()).unwrap();
        let h = g.step();
        let times = [1.0, 1.0 + 0.37 * h, 1.0 + h];
        let cs = covariance_series(&times, &ground_state_covariance(), &g, &p, 1e-6).unwrap();
        for k in 0..16 {
            let (a, b, c) = (cs[0].entries[k], cs[1].entries[k], cs[2].entries[k]);
            let lin = a + 0.37 * (c - a);
            assert!((b - lin).abs() < 10.0 * h * h + 1e-9, "{a} {b} {c}");
        }
    }
}
