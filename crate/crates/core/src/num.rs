//! Scalar abstraction for the numeric parts of the crate (similarity scores,
//! probabilities, metrics). Everything symbolic is scalar-free; everything
//! numeric is generic over [`Scalar`] with `f64` aliases at the crate root.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossless-enough conversion from a count; counts here are desk scale.
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count fits in scalar")
    }

    /// `num / den` as a scalar.
    fn from_ratio(num: usize, den: usize) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }
}

impl<T> Scalar for T where
    T: Float + FromPrimitive + Debug + Display + Default + Send + Sync + 'static
{
}
