//! Post-processing of entanglement dynamics: time traces with peak
//! detection, the short-time expansion, critical distances and slope fits.

use std::f64::consts::{LN_2, PI};

use crate::covariance::{covariance_asymptotic, covariance_series, ground_state_covariance, CovarianceMatrix};
use crate::entanglement::{log_negativity, symplectic_eigenvalues};
use crate::error::{Error, Result};
use crate::greens::greens_time;
use crate::laplace::DurbinSettings;
use crate::model::ModelParams;

/// E below this counts as zero.
pub const ZERO_THRESHOLD: f64 = 1e-8;
/// A second peak must start later than this fraction of r/c.
pub const SECOND_PEAK_ONSET: f64 = 0.8;
/// Default accuracy of covariance evaluations inside the analysis layer.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub time: f64,
    pub height: f64,
    /// Last preceding grid time where E vanished or had a local minimum.
    pub onset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub params: ModelParams,
    pub peaks: Vec<Peak>,
    /// Stationary E; absent at r = 0 where no stationary state exists.
    pub asymptote: Option<f64>,
    /// Smallest symplectic eigenvalue over every covariance evaluated.
    pub min_symplectic_eigenvalue: f64,
}

impl EntanglementTrace {
    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// First peak starting later than 0.8·r/c, i.e. after boson exchange.
    pub fn second_peak(&self) -> Option<Peak> {
        let r = self.params.distance;
        if r == 0.0 {
            return None;
        }
        self.peaks
            .iter()
            .copied()
            .find(|p| p.onset > SECOND_PEAK_ONSET * r && p.height > ZERO_THRESHOLD)
    }

    /// Peaks within [from, to].
    pub fn peaks_in(&self, from: f64, to: f64) -> Vec<Peak> {
        self.peaks
            .iter()
            .copied()
            .filter(|p| p.time >= from && p.time <= to)
            .collect()
    }

    /// Whether E is nonzero anywhere at t ≥ `after`.
    pub fn nonzero_after(&self, after: f64) -> bool {
        self.times
            .iter()
            .zip(&self.values)
            .any(|(&t, &e)| t >= after && e > ZERO_THRESHOLD)
    }
}

/// Smallest symplectic eigenvalue of c.
fn min_eigenvalue(c: &CovarianceMatrix) -> Result<f64> {
    Ok(symplectic_eigenvalues(c)?.0)
}

/// E(t) on the uniform grid 0, dt, …, t_max starting from the ground state.
pub fn trace(params: &ModelParams, t_max: f64, dt: f64) -> Result<EntanglementTrace> {
    if !(t_max > 0.0) || !(dt > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidParameter {
            field: "t_max",
            reason: format!("need t_max > 0 and dt > 0, got t_max = {t_max}, dt = {dt}"),
        });
    }
    let n = (t_max / dt - 1e-9).ceil() as usize;
    let times: Vec<f64> = (0..=n).map(|k| (k as f64 * dt).min(t_max)).collect();
    trace_on_grid(params, &times, DEFAULT_TOL)
}

/// E(tᵢ) for arbitrary increasing times.
pub fn trace_on_grid(params: &ModelParams, times: &[f64], tol: f64) -> Result<EntanglementTrace> {
    let params = params.validate()?;
    if times.is_empty() {
        return Err(Error::InsufficientData("empty time grid".into()));
    }
    let greens = greens_time(times, &params, &DurbinSettings::default())?;
    let covs = covariance_series(times, &ground_state_covariance(), &greens, &params, tol)?;
    let mut values = Vec::with_capacity(covs.len());
    let mut min_eig = f64::INFINITY;
    for c in &covs {
        min_eig = min_eig.min(min_eigenvalue(c)?);
        values.push(log_negativity(c)?);
    }
    let asymptote = if params.distance > 0.0 {
        let c = covariance_asymptotic(&params, None, tol)?;
        min_eig = min_eig.min(min_eigenvalue(&c)?);
        Some(log_negativity(&c)?)
    } else {
        None
    };
    let peaks = detect_peaks(times, &values);
    Ok(EntanglementTrace {
        times: times.to_vec(),
        values,
        params,
        peaks,
        asymptote,
        min_symplectic_eigenvalue: min_eig,
    })
}

/// Interior local maxima above the zero threshold, refined by a parabola
/// through the three surrounding samples.
pub fn detect_peaks(times: &[f64], values: &[f64]) -> Vec<Peak> {
    let n = values.len().min(times.len());
    let mut peaks = Vec::new();
    for k in 1..n.saturating_sub(1) {
        let (a, b, c) = (values[k - 1], values[k], values[k + 1]);
        if !(b > a && b >= c && b > ZERO_THRESHOLD) {
            continue;
        }
        let (ta, tb, tc) = (times[k - 1], times[k], times[k + 1]);
        // vertex of the interpolating parabola
        let d1 = (b - a) / (tb - ta);
        let d2 = (c - b) / (tc - tb);
        let curv = (d2 - d1) / (tc - ta);
        // Newton form p(t) = a + d1·(t − ta) + curv·(t − ta)(t − tb)
        let (time, height) = if curv < 0.0 {
            let tv = (0.5 * (ta + tb) - d1 / (2.0 * curv)).clamp(ta, tc);
            (tv, (a + d1 * (tv - ta) + curv * (tv - ta) * (tv - tb)).max(b))
        } else {
            (tb, b)
        };
        let mut j = k - 1;
        let onset = loop {
            if values[j] <= ZERO_THRESHOLD || j == 0 {
                break times[j];
            }
            if values[j] <= values[j - 1] && values[j] <= values[j + 1] {
                break times[j];
            }
            j -= 1;
        };
        peaks.push(Peak { time, height, onset });
    }
    peaks
}

/// α(Ωt) ≈ 0.2937 − ln(Ωt)/π.
pub fn short_time_alpha(omega_t: f64) -> f64 {
    0.2937 - omega_t.ln() / PI
}

/// E(t) ≈ (4/ln2)(γ/ω₀){e^{−rΩ/c}Ωt − α(Ωt)(Ωt)²}, clamped at zero; valid
/// for T = 0 and Ωt ≪ 1.
pub fn short_time_expansion(t: f64, params: &ModelParams) -> Result<f64> {
    let p = params.validate()?;
    if !p.is_zero_temperature() {
        return Err(Error::InvalidParameter {
            field: "temperature",
            reason: "the short-time expansion holds at zero temperature only".into(),
        });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter {
            field: "t",
            reason: format!("must be positive, got {t}"),
        });
    }
    let x = p.omega_cut * t;
    let value = 4.0 / LN_2 * p.gamma / p.omega0 * ((-p.distance * p.omega_cut).exp() * x - short_time_alpha(x) * x * x);
    Ok(value.max(0.0))
}

/// Leading coefficient of the expansion: lim E/t = (4/ln2)(γ/ω₀)Ω e^{−rΩ/c}.
pub fn short_time_slope(params: &ModelParams) -> f64 {
    4.0 / LN_2 * params.gamma / params.omega0 * params.omega_cut * (-params.distance * params.omega_cut).exp()
}

/// Measured (E(t₂) − E(t₁))/(t₂ − t₁) for Ωt₁ = 0.001, Ωt₂ = 0.01.
pub fn initial_slope(params: &ModelParams) -> Result<f64> {
    let p = params.validate()?;
    let (t1, t2) = (1e-3 / p.omega_cut, 1e-2 / p.omega_cut);
    let tr = trace_on_grid(&p, &[t1, t2], DEFAULT_TOL)?;
    Ok((tr.values[1] - tr.values[0]) / (t2 - t1))
}

/// Stationary logarithmic negativity.
pub fn asymptotic_negativity(params: &ModelParams) -> Result<f64> {
    log_negativity(&covariance_asymptotic(params, None, DEFAULT_TOL)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalDistanceResult {
    /// Distance where the stationary E vanishes.
    pub d0: Option<f64>,
    /// Distance where the second peak vanishes.
    pub d1: Option<f64>,
    /// d/(c/Ω), the coefficient of the 1/Ω law for this single point.
    pub slope_a: f64,
    /// Final interval (entangled end, zero end).
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub min_symplectic_eigenvalue: f64,
    /// Second peaks found while bisecting for d₁, keyed by distance.
    pub second_peaks: Vec<(f64, Peak)>,
}

/// Bisection on r for the boundary of the set where `indicator` holds;
/// `indicator(lo)` must be true and `indicator(hi)` false.
fn bisect<F>(bracket: (f64, f64), tol: f64, mut indicator: F) -> Result<((f64, f64), usize)>
where
    F: FnMut(f64) -> Result<bool>,
{
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter {
            field: "bracket",
            reason: format!("need lo < hi and tol > 0, got [{lo}, {hi}], tol {tol}"),
        });
    }
    if !indicator(lo)? || indicator(hi)? {
        return Err(Error::Bracket { lo, hi });
    }
    let mut evaluations = 2;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if indicator(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
        evaluations += 1;
    }
    Ok(((lo, hi), evaluations))
}

/// d₀ by bisection on r ↦ E∞(r) > threshold; the bracket low end must be
/// positive.
pub fn find_d0(params: &ModelParams, r_bracket: (f64, f64), tol: f64) -> Result<CriticalDistanceResult> {
    let p = params.validate()?;
    if !(r_bracket.0 > 0.0) {
        return Err(Error::InvalidParameter {
            field: "r_bracket",
            reason: "no stationary state at r = 0; start the bracket above zero".into(),
        });
    }
    let mut min_eig = f64::INFINITY;
    let (bracket, evaluations) = bisect(r_bracket, tol, |r| {
        let c = covariance_asymptotic(&p.with_distance(r), None, DEFAULT_TOL)?;
        min_eig = min_eig.min(min_eigenvalue(&c)?);
        Ok(log_negativity(&c)? > ZERO_THRESHOLD)
    })?;
    let d0 = 0.5 * (bracket.0 + bracket.1);
    Ok(CriticalDistanceResult {
        d0: Some(d0),
        d1: None,
        slope_a: d0 * p.omega_cut,
        bracket,
        evaluations,
        min_symplectic_eigenvalue: min_eig,
        second_peaks: Vec::new(),
    })
}

/// Trace resolving the short-time double peak at distance r.
pub fn short_time_trace(params: &ModelParams) -> Result<EntanglementTrace> {
    let p = params.validate()?;
    let r = p.distance;
    let t_max = (3.0 * r).max(1.0 / p.omega0);
    let dt = (r / 200.0).min(0.02 / p.omega_cut).max(t_max / 4000.0);
    trace(&p, t_max, dt)
}

/// d₁ by bisection on r ↦ (second-peak height > threshold). Requires
/// rΩ/c ≥ 1 throughout, otherwise the two peaks merge.
pub fn find_d1(params: &ModelParams, r_bracket: (f64, f64), tol: f64) -> Result<CriticalDistanceResult> {
    let p = params.validate()?;
    if r_bracket.0 * p.omega_cut < 1.0 {
        return Err(Error::AmbiguousPeaks { distance: r_bracket.0 });
    }
    let mut min_eig = f64::INFINITY;
    let mut second_peaks = Vec::new();
    let (bracket, evaluations) = bisect(r_bracket, tol, |r| {
        let tr = short_time_trace(&p.with_distance(r))?;
        min_eig = min_eig.min(tr.min_symplectic_eigenvalue);
        let peak = tr.second_peak();
        if let Some(pk) = peak {
            second_peaks.push((r, pk));
        }
        Ok(peak.is_some())
    })?;
    let d1 = 0.5 * (bracket.0 + bracket.1);
    Ok(CriticalDistanceResult {
        d0: None,
        d1: Some(d1),
        slope_a: d1 * p.omega_cut,
        bracket,
        evaluations,
        min_symplectic_eigenvalue: min_eig,
        second_peaks,
    })
}

/// Smallest distance on `r_grid` beyond which the trace stays zero after
/// `after` (up to `t_max`); None if every distance recovers.
pub fn recovery_onset(params: &ModelParams, r_grid: &[f64], after: f64, t_max: f64, dt: f64) -> Result<Option<f64>> {
    let mut onset = None;
    for &r in r_grid.iter().rev() {
        let tr = trace(&params.with_distance(r), t_max, dt)?;
        if tr.nonzero_after(after) {
            break;
        }
        onset = Some(r);
    }
    Ok(onset)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    /// Root-mean-square residual.
    pub residual: f64,
    pub samples_used: usize,
}

/// Least-squares line d₀ = a/Ω through the origin over samples
/// (1/Ω, d₀) with Ω ≥ 2ω₀.
pub fn fit_slope(samples: &[(f64, f64)]) -> Result<SlopeFit> {
    let used: Vec<(f64, f64)> = samples.iter().copied().filter(|&(x, _)| x > 0.0 && x <= 0.5).collect();
    if used.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "slope fit needs at least 3 samples with Ω ≥ 2ω₀, got {}",
            used.len()
        )));
    }
    let sxx: f64 = used.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = used.iter().map(|(x, y)| x * y).sum();
    let slope = sxy / sxx;
    let n = used.len() as f64;
    let residual = (used.iter().map(|(x, y)| (y - slope * x).powi(2)).sum::<f64>() / n).sqrt();
    let mean = used.iter().map(|(_, y)| y).sum::<f64>() / n;
    let limit = 0.2 * mean.abs();
    if residual > limit {
        return Err(Error::IllConditionedFit { residual, limit });
    }
    Ok(SlopeFit {
        slope,
        residual,
        samples_used: used.len(),
    })
}

/// Angular frequency 2π/⟨Δt⟩ from the mean spacing of peaks in [from, to].
pub fn dominant_frequency(trace: &EntanglementTrace, from: f64, to: f64) -> Result<f64> {
    let peaks = trace.peaks_in(from, to);
    if peaks.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need two peaks in [{from}, {to}], found {}",
            peaks.len()
        )));
    }
    let spacing = (peaks[peaks.len() - 1].time - peaks[0].time) / (peaks.len() - 1) as f64;
    Ok(2.0 * PI / spacing)
}
