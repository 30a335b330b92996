//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! The math is written once against [`Real`] and instantiated for `f32` and
//! `f64`. Simulation and verification default to `f64` through the aliases at
//! the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating point scalar: `f32` or `f64`.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable")
    }

    /// Lossy conversion from a count.
    #[inline]
    fn from_count(n: u64) -> Self {
        Self::from_u64(n).expect("count representable")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite or infinite float converts")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `max(log x, 0)`.
#[inline]
pub fn log_plus<F: Real>(x: F) -> F {
    if x <= F::one() {
        F::zero()
    } else {
        x.ln()
    }
}
