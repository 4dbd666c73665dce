//! Scalar abstraction shared by payoff computation and the cost model.
//!
//! Everything numeric that is not a plain counter is written against
//! [`Scalar`], so the same code runs in `f64` for the evolutionary loop and
//! in exact rationals ([`crate::Exact`]) for golden-value checks.

use std::fmt::Debug;

use num_traits::{FromPrimitive, Num, ToPrimitive};

/// Numeric type usable for payoffs and cost ratios.
///
/// Blanket-implemented for anything with field-like arithmetic and lossless
/// conversion from small integers: `f32`, `f64`, `Ratio<i64>`, `BigRational`.
pub trait Scalar:
    Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
    fn from_count(v: u64) -> Self {
        Self::from_u64(v).expect("integer not representable in scalar type")
    }

    /// `num / den`, exact for rational scalars.
    fn ratio(num: u64, den: u64) -> Self {
        Self::from_count(num) / Self::from_count(den)
    }

    /// `2^e`, computed inside the scalar type.
    fn pow2(e: u32) -> Self {
        num_traits::pow(Self::one() + Self::one(), e as usize)
    }

    fn from_real(v: f64) -> Self {
        Self::from_f64(v).expect("real value not representable in scalar type")
    }

    fn to_real(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Clone + PartialOrd + Debug + FromPrimitive + ToPrimitive + Send + Sync
{
}
