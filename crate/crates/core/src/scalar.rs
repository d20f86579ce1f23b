//! Scalar abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive};

/// Real-number type the model code is generic over.
///
/// Implemented for `f32`, `f64` and any other type providing the `num-traits`
/// float surface (e.g. double-double types used for high-precision checks).
pub trait Scalar:
    Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
    /// Lossy conversion from an `f64` literal.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("usize representable in scalar type")
    }

    /// E|Z| for a standard normal Z, i.e. sqrt(2/pi).
    #[inline]
    fn mean_abs_normal() -> Self {
        (Self::lit(2.0) / Self::PI()).sqrt()
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float + FloatConst + FromPrimitive + Debug + Display + Send + Sync + 'static
{
}

/// Sum of a sequence of scalars (works for types without `std::iter::Sum`).
#[inline]
pub fn sum<F: Scalar, I: IntoIterator<Item = F>>(values: I) -> F {
    values.into_iter().fold(F::zero(), |acc, v| acc + v)
}

/// Arithmetic mean; `None` for an empty sequence.
pub fn mean<F: Scalar>(values: &[F]) -> Option<F> {
    if values.is_empty() {
        None
    } else {
        Some(sum(values.iter().copied()) / F::from_usize_lossy(values.len()))
    }
}
