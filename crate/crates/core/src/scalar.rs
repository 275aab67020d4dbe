//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real floating-point scalar the toolkit is generic over (`f32` or `f64`).
pub trait Scalar:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the value is unrepresentable,
    /// which cannot happen for the finite constants used in this crate.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    #[inline]
    fn eps() -> Self {
        Self::default_epsilon()
    }

    /// Largest finite value of the type.
    fn max_finite() -> Self;
}

impl Scalar for f32 {
    fn max_finite() -> Self {
        f32::MAX
    }
}

impl Scalar for f64 {
    fn max_finite() -> Self {
        f64::MAX
    }
}

/// `x^p` with the convention `0^p = 0` for `p > 0`, which the power-kernel
/// moments rely on when `p` approaches zero from above.
#[inline]
pub(crate) fn pow0<T: Scalar>(x: T, p: T) -> T {
    if x <= T::zero() {
        if p == T::zero() {
            T::one()
        } else {
            T::zero()
        }
    } else {
        x.powf(p)
    }
}
