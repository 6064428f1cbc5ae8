//! Factorization of nonnegative trigonometric polynomials and sup-norm bounds.
//!
//! Univariate polynomials are factored exactly (up to rounding) by spectral
//! factorization. In several variables a polynomial that splits into
//! univariate factors is handled axis by axis; anything else goes through a
//! Gram-matrix sum-of-squares search, which is best effort and reports
//! non-convergence as an error.

mod bound;
mod riesz;
mod sos;

pub use bound::{grid_min_real, sup_bound};
pub use riesz::riesz_factor;
pub use sos::{sos_factor, SosFactorization, SosMethod, SosOptions};

use crate::error::{Error, Result};
use crate::trigpoly::TrigPoly;

/// Relative tolerance on `max |c_k - conj(c_-k)|` for a polynomial to count as real.
pub const REAL_TOLERANCE: f64 = 1e-12;

fn check_real(t: &TrigPoly) -> Result<()> {
    let defect = t.hermitian_defect();
    if defect > REAL_TOLERANCE * t.l1_norm().max(1.0) {
        return Err(Error::NotReal(defect));
    }
    Ok(())
}
