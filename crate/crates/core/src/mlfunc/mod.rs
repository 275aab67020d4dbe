//! Mittag-Leffler functions and the fractional solution operators
//! `S_q(t) = E_{q,1}(A t^q)` and `T_q(t) = t^(q-1) E_{q,q}(A t^q)`.

mod matrix;
mod scalar;
mod sector;

pub use matrix::{ml_matrix, solution_op_s, solution_op_t, MatrixFunctionPlan, OperatorPair};
pub use scalar::{ml_complex, ml_scalar, SERIES_RADIUS};
pub use sector::{sectorial_diagnostic, EigenSectorCheck, SectorEstimate, SectorParams, SectorialReport};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fractional order `q` of the Caputo derivative.
///
/// Accepts `0 < q <= 1`; `q = 1` is the classical first-order limit.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct FracOrder<T>(T);

impl<T: Scalar> FracOrder<T> {
    pub fn new(q: T) -> Result<Self> {
        if q > T::zero() && q <= T::one() {
            Ok(Self(q))
        } else {
            Err(Error::Order(q.to_f64_lossy()))
        }
    }

    #[inline]
    pub fn value(self) -> T {
        self.0
    }

    /// Whether the order is the classical `q = 1`.
    pub fn is_classical(self) -> bool {
        self.0 == T::one()
    }
}
