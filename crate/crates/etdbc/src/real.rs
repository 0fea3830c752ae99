//! Scalar abstraction: the numerical core is generic over the floating-point
//! type. Concrete `f64` aliases live at the crate root.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar: f32 or f64.
pub trait Real:
    Float + FloatConst + FromPrimitive + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    /// Shorthand for lossy conversion of an `f64` literal.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal conversion")
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

/// Wrap an angle to [0, 2π).
pub fn wrap_two_pi<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let mut r = a % tau;
    if r < T::zero() {
        r = r + tau;
    }
    // `a % tau` can round up to tau itself for tiny negative inputs
    if r >= tau {
        r = r - tau;
    }
    r
}

/// Wrap an angle to (−π, π].
pub fn wrap_pi<T: Real>(a: T) -> T {
    let tau = T::TAU();
    let pi = T::PI();
    let mut r = a % tau;
    if r > pi {
        r = r - tau;
    } else if r <= -pi {
        r = r + tau;
    }
    r
}
