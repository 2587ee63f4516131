use thiserror::Error;

/// Errors raised by the simulation pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("Laplace argument s = {re} + {im}i lies on or left of the convergence abscissa")]
    OutsideConvergence { re: f64, im: f64 },

    #[error("channel determinant {magnitude:e} too close to a pole at s = {re} + {im}i")]
    NearSingular { re: f64, im: f64, magnitude: f64 },

    #[error("Durbin series did not converge: tail contribution {tail:e} exceeds {tol:e}")]
    DurbinNonConvergence { tail: f64, tol: f64 },

    #[error("inverted Green's function has imaginary residue {residue:e}")]
    ComplexResidue { residue: f64 },

    #[error("frequency integral truncated at {omega_max}: error estimate {estimate:e} exceeds {tol:e}")]
    Truncation { omega_max: f64, estimate: f64, tol: f64 },

    #[error("unphysical covariance: smallest symplectic eigenvalue {min_eigenvalue}")]
    Unphysical { min_eigenvalue: f64 },

    #[error("time {t} is outside the stored grid [0, {t_max}]")]
    GridCoverage { t: f64, t_max: f64 },

    #[error("symplectic spectrum does not pair up (mismatch {mismatch:e})")]
    Pairing { mismatch: f64 },

    #[error("noise kernel diverges logarithmically at coincident arguments")]
    LogDivergent,

    #[error("bracket [{lo}, {hi}] does not enclose a change of the indicator")]
    Bracket { lo: f64, hi: f64 },

    #[error("first and second peaks are unresolvable at r = {distance} (rΩ/c < 1)")]
    AmbiguousPeaks { distance: f64 },

    #[error("ill-conditioned fit: residual {residual} exceeds {limit}")]
    IllConditionedFit { residual: f64, limit: f64 },

    #[error("recurrence horizon {horizon} of the discrete bath is too short for t = {t}")]
    Recurrence { horizon: f64, t: f64 },

    #[error("propagator lost symplecticity: deviation {deviation:e}")]
    Symplecticity { deviation: f64 },

    #[error("not enough data: {0}")]
    InsufficientData(String),
}

pub type Result<T> = std::result::Result<T, Error>;
