//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Real scalar used throughout the crate: `f32`, `f64`, or a forward-mode
/// AD number such as [`HyperDual`](crate::dual::HyperDual).
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        <Self as FromPrimitive>::from_f64(x).expect("f64 literal representable")
    }

    /// Real part as `f64` (for AD numbers this drops the infinitesimal parts).
    #[inline]
    fn re(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn two() -> Self {
        Self::one() + Self::one()
    }

    #[inline]
    fn half() -> Self {
        Self::one() / Self::two()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_diff<T: Real>(a: T, b: T, floor: T) -> T {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Relative tolerance band used for strict inequalities: `eps * max(1, |scale|)`.
pub fn band<T: Real>(eps: T, scale: T) -> T {
    eps * T::one().max(scale.abs())
}
