//! Numeric abstraction for the enumeration oracle.
//!
//! Exact rationals make "gap = 0" decidable; floats are supported for quick
//! runs and compared with [`Scalar::is_negligible`].

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed, ToPrimitive, Zero};

/// Probability and expectation arithmetic used by the oracle.
pub trait Scalar:
    Num + Signed + Clone + Debug + Display + PartialOrd + ToPrimitive + Send + Sync + 'static
{
    /// Whether arithmetic is exact (no rounding).
    const EXACT: bool;

    fn from_ratio(numer: i64, denom: i64) -> Self;

    fn from_int(value: i64) -> Self {
        Self::from_ratio(value, 1)
    }

    fn from_rational(value: &BigRational) -> Self;

    /// Exactly zero for exact types, below `1e-9` in magnitude otherwise.
    fn is_negligible(&self) -> bool;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        Ratio::new(BigInt::from(numer), BigInt::from(denom))
    }

    fn from_rational(value: &BigRational) -> Self {
        value.clone()
    }

    fn is_negligible(&self) -> bool {
        self.is_zero()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        numer as f64 / denom as f64
    }

    fn from_rational(value: &BigRational) -> Self {
        value.to_f64().unwrap_or(f64::NAN)
    }

    fn is_negligible(&self) -> bool {
        self.abs() < 1e-9
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_ratio(numer: i64, denom: i64) -> Self {
        (numer as f64 / denom as f64) as f32
    }

    fn from_rational(value: &BigRational) -> Self {
        value.to_f32().unwrap_or(f32::NAN)
    }

    fn is_negligible(&self) -> bool {
        self.abs() < 1e-5
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_and_float_agree_on_simple_ratios() {
        let exact = BigRational::from_ratio(-38, 5);
        assert_eq!(exact.to_f64().unwrap(), -7.6);
        assert!((f64::from_ratio(-38, 5) + 7.6).abs() < 1e-12);
        assert!((BigRational::from_ratio(1, 3) * BigRational::from_int(3)
            - BigRational::from_int(1))
        .is_negligible());
        assert!(!BigRational::from_ratio(1, 1_000_000_000_000).is_negligible());
        assert!(1e-12f64.is_negligible());
    }
}
