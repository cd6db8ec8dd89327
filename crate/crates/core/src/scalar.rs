//! Scalar abstraction.
//!
//! Every numerical routine in the crate is written against [`Real`], which is
//! implemented for `f32` and `f64`. Tolerances are specified once in double
//! precision and widened for lower-precision types by [`Real::tol`].

use std::fmt::{Debug, Display, LowerExp};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

pub trait Real:
    RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Send + Sync + 'static
{
    /// Machine epsilon of the type, as an `f64`.
    const EPS_F64: f64;

    /// Converts a double-precision constant into this type.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    #[inline]
    fn of_usize(x: usize) -> Self {
        Self::from_usize(x).expect("representable count")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// A tolerance stated for `f64`, scaled up by the ratio of machine
    /// epsilons so that it stays meaningful for `f32`.
    #[inline]
    fn tol(x: f64) -> Self {
        Self::of(x * (Self::EPS_F64 / f64::EPSILON).max(1.0))
    }
}

impl Real for f64 {
    const EPS_F64: f64 = f64::EPSILON;
}

impl Real for f32 {
    const EPS_F64: f64 = f32::EPSILON as f64;
}
