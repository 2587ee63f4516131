//! Shared fixtures for the benchmarks.

use bathent_core::ModelParams;

/// γ = ω₀, Ω = 10ω₀, T = 0 at separation r.
pub fn reference_params(distance: f64) -> ModelParams {
    ModelParams::new(1.0, 10.0, 0.0, distance).expect("reference parameters are valid")
}

/// Uniform output grid 0, dt, …, t_max.
pub fn uniform_times(t_max: f64, dt: f64) -> Vec<f64> {
    let n = (t_max / dt).round() as usize;
    (0..=n).map(|k| k as f64 * dt).collect()
}
