//! Scalar abstraction shared by every module.
//!
//! All physics is written once against [`Real`] and instantiated for `f32`
//! and `f64`. Random draws go through the trait so that callers never need
//! `StandardNormal: Distribution<T>` style bounds.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating point type the simulator can run on.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Converts an `f64` literal. Panics only if the value is not representable,
    /// which cannot happen for the finite literals used in this crate.
    #[inline]
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }

    /// Standard normal draw.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on `[0, 1)`.
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

impl Real for f32 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f32>()
    }
}

impl Real for f64 {
    #[inline]
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }

    #[inline]
    fn unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
        rng.random::<f64>()
    }
}

/// Reduces an angle to `(-π, π]`.
#[inline]
pub fn reduce_phase<T: Real>(theta: T) -> T {
    let two_pi = T::TAU();
    let mut r = theta % two_pi;
    if r > T::PI() {
        r = r - two_pi;
    } else if r <= -T::PI() {
        r = r + two_pi;
    }
    r
}

/// Sine of a reduced phase, exactly zero on the multiples of π.
///
/// Floating point `sin(π)` is about `1e-16`; snapping keeps the step
/// function boundaries where the homodyne difference is genuinely zero.
#[inline]
pub fn sin_reduced<T: Real>(theta: T) -> T {
    let r = reduce_phase(theta);
    if r == T::zero() || r == T::PI() {
        T::zero()
    } else {
        r.sin()
    }
}

/// Uniform draw on `(-π, π]`.
#[inline]
pub fn uniform_phase<T: Real, R: Rng + ?Sized>(rng: &mut R) -> T {
    // u in [0, 1) maps to (-π, π].
    T::PI() - T::TAU() * T::unit(rng)
}
