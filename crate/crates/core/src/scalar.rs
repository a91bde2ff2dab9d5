use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar used for probabilities, log-likelihood ratios and soft weights.
///
/// Implemented for `f32` and `f64`.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant representable")
    }

    /// `ln((1 - p) / p)`.
    #[inline]
    fn llr_of_probability(p: Self) -> Self {
        ((Self::one() - p) / p).ln()
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Total order on finite reals, falling back to `Equal` for NaN.
#[inline]
pub(crate) fn cmp_real<T: Real>(a: T, b: T) -> std::cmp::Ordering {
    a.partial_cmp(&b).unwrap_or(std::cmp::Ordering::Equal)
}
