//! Entanglement dynamics of two harmonic oscillators coupled to a common
//! one-dimensional bosonic bath (Caldeira-Leggett model with a Drude cutoff).
//!
//! The pipeline runs model → kernels → greens → covariance → entanglement →
//! analysis; `oracle` is an independent finite-bath reference.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod analysis;
pub mod covariance;
pub mod entanglement;
pub mod error;
pub mod greens;
pub mod kernels;
pub mod laplace;
pub mod model;
pub mod oracle;
pub mod quadrature;

pub use analysis::{CriticalDistanceResult, EntanglementTrace, Peak, SlopeFit};
pub use covariance::{CovarianceMatrix, TimeLabel};
pub use entanglement::{log_negativity, SymplecticForm};
pub use error::{Error, Result};
pub use greens::{Channel, GreensFunction};
pub use laplace::DurbinSettings;
pub use model::{spectral_density, ModelParams};
pub use oracle::{DiscreteBath, GlobalGaussianState, NormalModeOracle};
