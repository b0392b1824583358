use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating point type the linear algebra and profile code is generic over.
///
/// Implemented for `f32` and `f64`. Probabilities, quadrature and the
/// experiment layer stay in `f64`.
pub trait Scalar:
    'static
    + Float
    + NumAssign
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
{
    /// Lossy conversion from `f64`. Every value used by this crate is
    /// representable up to rounding.
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar converts to f64")
    }

    /// Default relative tolerance for iterative solvers at this precision.
    fn default_tolerance() -> Self;
}

impl Scalar for f32 {
    fn default_tolerance() -> Self {
        1e-6
    }
}

impl Scalar for f64 {
    fn default_tolerance() -> Self {
        1e-10
    }
}
