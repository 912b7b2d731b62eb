//! Numeric abstraction shared by the geometry and scoring code.
//!
//! Area, clipping, region assignment and the accuracy aggregates only need
//! field operations and ordering, so they are written against [`Scalar`] and
//! work for `f32`, `f64` and exact rationals alike. Anything that needs square
//! roots or angles additionally requires [`num_traits::Float`].

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// An ordered field element: `f32`, `f64` or `Ratio<i64>`.
pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn two() -> Self {
        Self::one() + Self::one()
    }

    fn from_usize_exact(n: usize) -> Self {
        Self::from_usize(n).expect("usize fits scalar")
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    fn clamp_to(self, lo: Self, hi: Self) -> Self {
        self.max_of(lo).min_of(hi)
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Exact rational scalar used by oracle-style tests and exact reports.
pub type Rational = num_rational::Ratio<i64>;

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{One, Zero};

    #[test]
    fn rational_is_a_scalar() {
        let half = Rational::new(1, 2);
        assert_eq!(half + half, Rational::one());
        assert_eq!(Rational::two(), Rational::from_integer(2));
        assert_eq!(half.clamp_to(Rational::zero(), Rational::new(1, 4)), Rational::new(1, 4));
    }

    #[test]
    fn float_helpers() {
        assert_eq!(3.0f64.min_of(2.0), 2.0);
        assert_eq!(3.0f32.max_of(4.0), 4.0);
        assert_eq!(f64::from_usize_exact(7), 7.0);
    }
}
