//! Physical parameters and the bath spectral density.
//!
//! Everything is expressed in natural units: ω₀ = c = ħ = k_B = m = 1.
//! Frequencies are measured in ω₀, times in 1/ω₀, distances in c/ω₀ and
//! temperatures in ħω₀/k_B.

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Parameters of two identical oscillators sharing a one-dimensional bath
/// with ohmic spectral density and Drude cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Oscillator frequency ω₀.
    pub omega0: f64,
    /// Damping constant γ.
    pub gamma: f64,
    /// Drude cutoff frequency Ω.
    pub omega_cut: f64,
    /// Bath temperature T. Zero is exact zero temperature.
    pub temperature: f64,
    /// Oscillator separation r.
    pub distance: f64,
    /// Oscillator mass m.
    pub mass: f64,
}

impl Default for ModelParams {
    /// γ = ω₀, Ω = 10ω₀, T = 0, r = 0.1.
    fn default() -> Self {
        Self {
            omega0: 1.0,
            gamma: 1.0,
            omega_cut: 10.0,
            temperature: 0.0,
            distance: 0.1,
            mass: 1.0,
        }
    }
}

impl ModelParams {
    /// Builds validated parameters with ω₀ = m = 1.
    pub fn new(gamma: f64, omega_cut: f64, temperature: f64, distance: f64) -> Result<Self> {
        Self {
            omega0: 1.0,
            gamma,
            omega_cut,
            temperature,
            distance,
            mass: 1.0,
        }
        .validate()
    }

    /// Checks every invariant and returns the parameters unchanged.
    pub fn validate(self) -> Result<Self> {
        fn check(field: &'static str, value: f64, ok: bool, reason: &str) -> Result<()> {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("must be finite, got {value}"),
                });
            }
            if !ok {
                return Err(Error::InvalidParameter {
                    field,
                    reason: format!("{reason}, got {value}"),
                });
            }
            Ok(())
        }
        check("omega0", self.omega0, self.omega0 == 1.0, "fixed to 1 in natural units")?;
        check("mass", self.mass, self.mass == 1.0, "fixed to 1 in natural units")?;
        check("gamma", self.gamma, self.gamma > 0.0, "gamma must be positive")?;
        check(
            "omega_cut",
            self.omega_cut,
            self.omega_cut > 0.0,
            "cutoff must be positive",
        )?;
        check(
            "temperature",
            self.temperature,
            self.temperature >= 0.0,
            "negative temperature",
        )?;
        check("distance", self.distance, self.distance >= 0.0, "negative distance")?;
        Ok(self)
    }

    pub fn with_distance(self, distance: f64) -> Self {
        Self { distance, ..self }
    }

    pub fn with_temperature(self, temperature: f64) -> Self {
        Self { temperature, ..self }
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        Self { gamma, ..self }
    }

    pub fn with_omega_cut(self, omega_cut: f64) -> Self {
        Self { omega_cut, ..self }
    }

    /// Cutoff wavelength λ = 2πc/Ω.
    pub fn cutoff_wavelength(&self) -> f64 {
        2.0 * PI / self.omega_cut
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.temperature == 0.0
    }
}

/// J(ω) = (2mγ/π) ω Ω²/(Ω² + ω²).
pub fn spectral_density(omega: f64, params: &ModelParams) -> f64 {
    let cut2 = params.omega_cut * params.omega_cut;
    2.0 * params.mass * params.gamma / PI * omega * cut2 / (cut2 + omega * omega)
}
