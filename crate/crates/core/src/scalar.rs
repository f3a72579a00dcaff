use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Real scalar type used by datasets, tree evaluation and the distance models.
///
/// Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Default + Debug + Display + Send + Sync + 'static
{
    /// Converts from `f64`, rounding to the nearest representable value.
    fn of(v: f64) -> Self {
        Self::from_f64(v).unwrap_or_else(Self::nan)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Clamps infinities to the largest finite magnitude. NaN maps to zero.
    fn saturate(self) -> Self {
        if self.is_finite() {
            self
        } else if self.is_nan() {
            Self::zero()
        } else if self.is_sign_positive() {
            Self::max_value()
        } else {
            Self::min_value()
        }
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
