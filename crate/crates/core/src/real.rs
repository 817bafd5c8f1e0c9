use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, SubAssign};

use num_traits::{Float, FromPrimitive};

/// Scalar type the library is generic over. Implemented by `f32` and `f64`
/// (and any other type satisfying the bounds).
///
/// Tabulated coefficients and hardware transcendentals bound the attainable
/// accuracy at double precision, so the special-function layer computes in
/// `f64` internally and converts at the boundary; everything else runs in
/// `F` arithmetic.
pub trait Real:
    Float + FromPrimitive + AddAssign + SubAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into `F`. Panics only if the type cannot
    /// represent ordinary finite constants, which no `Float` type refuses.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 constant must convert")
    }

    /// Converts a count into `F`.
    #[inline]
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("usize must convert")
    }

    /// Widens to `f64` (lossless for the supported scalar types).
    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar must widen to f64")
    }
}

impl<T> Real for T where
    T: Float + FromPrimitive + AddAssign + SubAssign + Sum + Debug + Display + Send + Sync + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip() {
        assert_eq!(f64::of(0.25), 0.25);
        assert_eq!(f32::of(0.25), 0.25f32);
        assert_eq!(f64::count(41), 41.0);
        assert_eq!(1.5f32.as_f64(), 1.5);
    }
}
