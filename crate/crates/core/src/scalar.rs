//! Scalar abstraction shared by the numeric modules.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating point type usable for raster values, statistics and parameters.
///
/// `Display` must print the shortest representation that parses back to the
/// same value, which holds for the primitive float types.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Lossy conversion from `f64`; never fails for finite or infinite input.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 converts to every float type")
    }

    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize converts to every float type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("float converts to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Parses a decimal token, accepting `inf`/`-inf` literals.
pub(crate) fn parse_scalar<T: Scalar>(token: &str) -> Option<T> {
    match token {
        "inf" | "+inf" | "Infinity" => Some(T::infinity()),
        "-inf" | "-Infinity" => Some(T::neg_infinity()),
        _ => token.parse::<T>().ok(),
    }
}
