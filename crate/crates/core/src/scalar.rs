//! Floating-point abstraction for the numeric pipeline.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Scalar type the sparse vectors, solver and models are generic over.
///
/// Implemented for `f32` and `f64`; the crate-root aliases fix `f64` as the
/// default precision.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Send + Sync + 'static
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}
