//! Scalar abstraction shared by the numerical core.
//!
//! Projection maps, losses, hypotheses and ensembles are generic over
//! [`Scalar`], which is implemented for `f32` and `f64`. Random draws are
//! always made in `f64` and then narrowed, so an `f32` model built from a
//! seed is the rounding of the `f64` model built from the same seed.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use ndarray::{LinalgScalar, ScalarOperand};
use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point element type accepted by the generic core.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + LinalgScalar
    + ScalarOperand
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or computed constant into `Self`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Scalar")
    }

    /// Widens to `f64`.
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Scalar always widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// `sign` with the convention `sign(0) = +1`, used by every sign-valued
/// predictor and by majority voting.
#[inline]
pub fn sign<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        -T::one()
    }
}

/// Clamps `x` into `[-beta, beta]`.
#[inline]
pub fn clip<T: Scalar>(x: T, beta: T) -> T {
    x.max(-beta).min(beta)
}
