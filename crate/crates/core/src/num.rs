//! Scalar abstraction for the master-problem and newsvendor arithmetic.
//!
//! The linear multiple-choice knapsack and its branch-and-bound only need
//! ordered field operations, so they are written against [`Scalar`] and run
//! unchanged on `f32`, `f64` and exact rationals such as
//! [`num_rational::Rational64`]. Closed-form newsvendor sums additionally
//! need `exp`/`ln` and use [`num_traits::Float`].

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Ordered field element usable as a cost or emission coefficient.
pub trait Scalar:
    Copy + PartialOrd + Debug + Send + Sync + Num + Signed + FromPrimitive + ToPrimitive + 'static
{
    /// Lossy conversion from `f64`; panics only for non-finite input.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite value representable in scalar type")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
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
}

impl<T> Scalar for T where
    T: Copy
        + PartialOrd
        + Debug
        + Send
        + Sync
        + Num
        + Signed
        + FromPrimitive
        + ToPrimitive
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Rational64;

    fn mid<T: Scalar>(a: T, b: T) -> T {
        (a + b) / (T::one() + T::one())
    }

    #[test]
    fn generic_over_float_and_rational() {
        assert_eq!(mid(1.0f32, 2.0), 1.5);
        assert_eq!(mid(1.0f64, 2.0), 1.5);
        assert_eq!(
            mid(Rational64::new(1, 3), Rational64::new(2, 3)),
            Rational64::new(1, 2)
        );
        assert_eq!(Rational64::of(0.25), Rational64::new(1, 4));
    }
}
