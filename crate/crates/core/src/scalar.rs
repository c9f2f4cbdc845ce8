//! Floating point abstraction shared by every numerical module.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Real scalar type the model, the variational engine and the sampler are
/// generic over. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal or computed constant.
    fn of(x: f64) -> Self;

    /// Lossy conversion back to `f64` for reporting and serialization.
    fn as_f64(self) -> f64;

    fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Uniform draw on `[0, 1)`.
    fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self;
}

macro_rules! impl_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            #[inline]
            fn of(x: f64) -> Self {
                x as $t
            }

            #[inline]
            fn as_f64(self) -> f64 {
                self as f64
            }

            #[inline]
            fn sample_standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
                <StandardNormal as Distribution<$t>>::sample(&StandardNormal, rng)
            }

            #[inline]
            fn sample_unit<R: Rng + ?Sized>(rng: &mut R) -> Self {
                rng.random::<$t>()
            }
        }
    };
}

impl_scalar!(f32);
impl_scalar!(f64);

/// `log(1 + exp(z))` without overflow for large `|z|`.
#[inline]
pub fn log1p_exp<T: Scalar>(z: T) -> T {
    if z > T::zero() {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Standard logistic function `1 / (1 + exp(-z))`.
#[inline]
pub fn logistic<T: Scalar>(z: T) -> T {
    if z >= T::zero() {
        T::one() / (T::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (T::one() + e)
    }
}

#[inline]
pub(crate) fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc + (x - y) * (x - y))
}

#[inline]
pub(crate) fn sq_norm<T: Scalar>(a: &[T]) -> T {
    a.iter().fold(T::zero(), |acc, &x| acc + x * x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log1p_exp_is_stable_at_extremes() {
        assert_eq!(log1p_exp(800.0_f64), 800.0);
        assert!(log1p_exp(-800.0_f64) >= 0.0);
        assert!((log1p_exp(0.0_f64) - 2.0_f64.ln()).abs() < 1e-15);
        assert!((log1p_exp(3.0_f32) - (1.0_f32 + 3.0_f32.exp()).ln()).abs() < 1e-6);
    }

    #[test]
    fn logistic_symmetry() {
        for &z in &[-30.0, -2.5, 0.0, 0.7, 40.0] {
            let a: f64 = logistic(z);
            let b: f64 = logistic(-z);
            assert!((a + b - 1.0).abs() < 1e-15);
        }
    }
}
