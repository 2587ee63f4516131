//! Logarithmic negativity of two-mode Gaussian states.

use nalgebra::{Matrix2, Matrix4};

use crate::covariance::CovarianceMatrix;
use crate::error::{Error, Result};

/// Symplectic eigenvalues closer than this to 1 count as exactly 1.
const UNIT_SNAP: f64 = 1e-12;
/// Relative mismatch allowed between the two members of a ± pair.
const PAIRING_TOL: f64 = 1e-8;
/// Uncertainty-bound slack for a physical state.
const PHYSICAL_TOL: f64 = 1e-6;

/// Σ for the ordering (Q₁, Q₂, P₁, P₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymplecticForm {
    pub matrix: Matrix4<f64>,
}

impl SymplecticForm {
    pub fn new() -> Self {
        #[rustfmt::skip]
        let matrix = Matrix4::new(
            0.0, 0.0, 1.0, 0.0,
            0.0, 0.0, 0.0, 1.0,
            -1.0, 0.0, 0.0, 0.0,
            0.0, -1.0, 0.0, 0.0,
        );
        Self { matrix }
    }
}

impl Default for SymplecticForm {
    fn default() -> Self {
        Self::new()
    }
}

/// Time reversal of the second oscillator: flips the sign of row and column 4.
pub fn partial_transpose(c: &CovarianceMatrix) -> CovarianceMatrix {
    let mut out = c.clone();
    for k in 0..4 {
        if k != 3 {
            out.entries[(3, k)] = -out.entries[(3, k)];
            out.entries[(k, 3)] = -out.entries[(k, 3)];
        }
    }
    out
}

/// The two symplectic eigenvalues (ascending): moduli of the eigenvalues of
/// iΣc, which come in ± pairs.
pub fn symplectic_eigenvalues(c: &CovarianceMatrix) -> Result<(f64, f64)> {
    let m = SymplecticForm::new().matrix * c.entries;
    // eigenvalues of Σc are ±iλ; those of iΣc are ∓λ
    let mut moduli: Vec<f64> = m.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    moduli.sort_by(f64::total_cmp);
    let pair = |a: f64, b: f64| -> Result<f64> {
        let mismatch = (a - b).abs();
        if mismatch > PAIRING_TOL * a.max(b).max(1.0) {
            return Err(Error::Pairing { mismatch });
        }
        Ok(0.5 * (a + b))
    };
    Ok((pair(moduli[0], moduli[1])?, pair(moduli[2], moduli[3])?))
}

/// Two-mode closed form λ±² = (Δ ± √(Δ² − 4 det c))/2 with
/// Δ = det A + det B + 2 det C for the mode blocks of c.
pub fn symplectic_eigenvalues_closed_form(c: &CovarianceMatrix) -> (f64, f64) {
    let e = &c.entries;
    let block = |i: usize, j: usize| Matrix2::new(e[(i, j)], e[(i, j + 2)], e[(i + 2, j)], e[(i + 2, j + 2)]);
    let delta = block(0, 0).determinant() + block(1, 1).determinant() + 2.0 * block(0, 1).determinant();
    let det = e.determinant();
    let disc = (delta * delta - 4.0 * det).max(0.0).sqrt();
    let lo = (0.5 * (delta - disc)).max(0.0).sqrt();
    let hi = (0.5 * (delta + disc)).max(0.0).sqrt();
    (lo, hi)
}

/// Fails with `Unphysical` if c violates the uncertainty relation.
pub fn ensure_physical(c: &CovarianceMatrix, slack: f64) -> Result<()> {
    let (lo, _) = symplectic_eigenvalues(c)?;
    if lo < 1.0 - slack {
        return Err(Error::Unphysical { min_eigenvalue: lo });
    }
    Ok(())
}

/// E = −Σⱼ log₂ min(1, λ̃ⱼ) over the symplectic eigenvalues of the partial
/// transpose.
pub fn log_negativity(c: &CovarianceMatrix) -> Result<f64> {
    ensure_physical(c, PHYSICAL_TOL)?;
    let (a, b) = symplectic_eigenvalues(&partial_transpose(c))?;
    let term = |l: f64| {
        if l >= 1.0 - UNIT_SNAP {
            0.0
        } else {
            -l.log2()
        }
    };
    Ok(term(a) + term(b))
}
