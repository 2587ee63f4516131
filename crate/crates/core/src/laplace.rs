//! Numerical inverse Laplace transform by Durbin's Fourier-series formula.
//!
//! For a transform F(s) analytic for Re s > 0 and a period P, Durbin's
//! formula reconstructs
//!
//! f(t) ≈ (e^{at}/P) Σ_{k=−N}^{N} F(a + 2πik/P) e^{2πikt/P},  0 ≤ t < P,
//!
//! with an aliasing error of order e^{−aP}·f(t + P). On a uniform grid with
//! t_j = jP/M the sum over k folds into an M-point inverse DFT, so very long
//! series cost little.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Parameters of the inversion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DurbinSettings {
    /// Period P as a multiple of the largest requested time.
    pub period_factor: f64,
    /// Contour shift as the dimensionless product a·P.
    pub shift_times_period: f64,
    /// Number of positive frequencies N kept in the series.
    pub n_terms: usize,
    /// Largest allowed contribution of the last 10% of terms.
    pub tol: f64,
}

impl Default for DurbinSettings {
    fn default() -> Self {
        Self {
            period_factor: 4.0,
            shift_times_period: 24.0,
            n_terms: 1 << 18,
            tol: 1e-7,
        }
    }
}

/// f(t_j) for t_j = j·P/M, j = 0..len.
#[derive(Debug, Clone)]
pub struct DurbinOutput {
    pub values: Vec<f64>,
    /// Largest |Im f| seen before discarding the imaginary part.
    pub imaginary_residue: f64,
    /// Largest contribution of the last 10% of the series at any grid time.
    pub tail_contribution: f64,
}

/// Inverts `transform` on the grid t_j = j·period/m_bins, j < len.
///
/// `shift` is the contour abscissa a; it must lie right of every singularity.
pub fn durbin_invert<F>(
    transform: F,
    period: f64,
    m_bins: usize,
    len: usize,
    shift: f64,
    settings: &DurbinSettings,
) -> Result<DurbinOutput>
where
    F: Fn(Complex64) -> Complex64,
{
    assert!(len <= m_bins, "grid must stay within one period");
    let n = settings.n_terms.max(1);
    let tail_start = n - n / 10;
    let mut bins = vec![Complex64::new(0.0, 0.0); m_bins];
    let mut tail_bins = vec![Complex64::new(0.0, 0.0); m_bins];
    let dw = 2.0 * std::f64::consts::PI / period;
    bins[0] += transform(Complex64::new(shift, 0.0));
    for k in 1..=n {
        let w = dw * k as f64;
        let plus = transform(Complex64::new(shift, w));
        let minus = transform(Complex64::new(shift, -w));
        let up = k % m_bins;
        let down = (m_bins - up) % m_bins;
        bins[up] += plus;
        bins[down] += minus;
        if k > tail_start {
            tail_bins[up] += plus;
            tail_bins[down] += minus;
        }
    }
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_inverse(m_bins);
    fft.process(&mut bins);
    fft.process(&mut tail_bins);

    let dt = period / m_bins as f64;
    let mut values = Vec::with_capacity(len);
    let mut imaginary_residue = 0.0f64;
    let mut tail_contribution = 0.0f64;
    for j in 0..len {
        let scale = (shift * dt * j as f64).exp() / period;
        let v = bins[j] * scale;
        imaginary_residue = imaginary_residue.max(v.im.abs());
        tail_contribution = tail_contribution.max((tail_bins[j] * scale).norm());
        values.push(v.re);
    }
    if tail_contribution > settings.tol {
        return Err(Error::DurbinNonConvergence {
            tail: tail_contribution,
            tol: settings.tol,
        });
    }
    Ok(DurbinOutput {
        values,
        imaginary_residue,
        tail_contribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run<F: Fn(Complex64) -> Complex64>(f: F, t_max: f64, m_per_unit: usize, tol: f64) -> (Vec<f64>, f64) {
        let settings = DurbinSettings {
            tol,
            ..Default::default()
        };
        let period = settings.period_factor * t_max;
        let m = (period * m_per_unit as f64) as usize;
        let len = (t_max * m_per_unit as f64) as usize + 1;
        let out = durbin_invert(f, period, m, len, settings.shift_times_period / period, &settings).unwrap();
        (out.values, period / m as f64)
    }

    #[test]
    fn inverts_damped_oscillator() {
        // 1/((s+0.3)² + 4) ↔ e^{−0.3t} sin(2t)/2; only 1/s² decay, so the
        // series converges slowly and the error is largest near t = 0.
        let (v, dt) = run(|s| 1.0 / ((s + 0.3) * (s + 0.3) + 4.0), 10.0, 50, 1e-5);
        for (j, &x) in v.iter().enumerate() {
            let t = j as f64 * dt;
            let exact = (-0.3 * t).exp() * (2.0 * t).sin() / 2.0;
            let tol = if t < 0.1 { 1e-5 } else { 2e-7 };
            assert!((x - exact).abs() < tol, "t={t}: {x} vs {exact}");
        }
    }

    #[test]
    fn inverts_delayed_ramp() {
        // e^{−s}/s⁴ ↔ (t − 1)₊³/6
        let (v, dt) = run(|s| (-s).exp() / (s * s * s * s), 4.0, 100, 1e-7);
        for (j, &x) in v.iter().enumerate() {
            let t = j as f64 * dt;
            let exact = if t > 1.0 { (t - 1.0).powi(3) / 6.0 } else { 0.0 };
            assert!((x - exact).abs() < 1e-7, "t={t}: {x} vs {exact}");
        }
    }

    #[test]
    fn flags_slowly_converging_series() {
        let settings = DurbinSettings {
            n_terms: 200,
            tol: 1e-9,
            ..Default::default()
        };
        let res = durbin_invert(|s| 1.0 / (s + 1.0), 40.0, 400, 100, 0.6, &settings);
        assert!(matches!(res, Err(Error::DurbinNonConvergence { .. })));
    }
}
