//! Scalar abstraction shared by every numeric routine.
//!
//! The engine is written once over [`Scalar`] and instantiated for `f64`
//! (production), `f32`, and [`Rational`] (exact arithmetic, used to reproduce
//! closed-form game values without rounding).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

pub trait Scalar:
    Num
    + Signed
    + Clone
    + Debug
    + Display
    + PartialOrd
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Send
    + Sync
    + 'static
{
    /// `true` when arithmetic is exact and comparisons need no tolerance.
    const EXACT: bool;

    /// Converts a decimal literal as written (so `0.05` becomes `1/20` for exact types).
    fn from_decimal(x: f64) -> Self;

    fn from_ratio(num: u64, den: u64) -> Self {
        Self::from_u64(num).expect("u64 fits every scalar")
            / Self::from_u64(den).expect("u64 fits every scalar")
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_decimal(x: f64) -> Self {
        x
    }
}

impl Scalar for f32 {
    const EXACT: bool = false;

    fn from_decimal(x: f64) -> Self {
        x as f32
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_decimal(x: f64) -> Self {
        decimal_to_rational(x)
    }
}

/// Parses the shortest round-trip decimal representation of `x` into an exact ratio.
fn decimal_to_rational(x: f64) -> Rational {
    assert!(
        x.is_finite(),
        "cannot convert non-finite value {x} to a rational"
    );
    let text = format!("{x:e}");
    let (mantissa, exponent) = text.split_once('e').expect("exponent form");
    let exponent: i32 = exponent.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits_part = mantissa.trim_start_matches('-');
    let (int_part, frac_part) = digits_part.split_once('.').unwrap_or((digits_part, ""));
    let digits: BigInt = format!("{int_part}{frac_part}")
        .parse()
        .expect("decimal digits");
    let scale = exponent - frac_part.len() as i32;
    let ten = BigInt::from(10u32);
    let mut value = if scale >= 0 {
        Ratio::from_integer(digits * num_traits::pow(ten, scale as usize))
    } else {
        Ratio::new(digits, num_traits::pow(ten, (-scale) as usize))
    };
    if negative {
        value = -value;
    }
    value
}

/// Exact `num / den` as a [`Rational`].
pub fn rational(num: i64, den: i64) -> Rational {
    Ratio::new(BigInt::from(num), BigInt::from(den))
}

pub(crate) fn tol_of<T: Scalar>(tol: f64) -> T {
    if T::EXACT && tol == 0.0 {
        T::zero()
    } else {
        T::from_f64(tol).unwrap_or_else(T::zero)
    }
}

pub(crate) fn approx_eq<T: Scalar>(a: &T, b: &T, tol: &T) -> bool {
    (a.clone() - b.clone()).abs() <= *tol
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimal_literals_become_short_fractions() {
        assert_eq!(Rational::from_decimal(0.05), rational(1, 20));
        assert_eq!(Rational::from_decimal(0.95), rational(19, 20));
        assert_eq!(Rational::from_decimal(4.0), rational(4, 1));
        assert_eq!(Rational::from_decimal(-1.25), rational(-5, 4));
        assert_eq!(Rational::from_decimal(1e-7), rational(1, 10_000_000));
        assert_eq!(Rational::from_decimal(0.0), rational(0, 1));
    }

    #[test]
    fn ratio_constructor_agrees_across_scalars() {
        assert_eq!(f64::from_ratio(1, 4), 0.25);
        assert_eq!(Rational::from_ratio(3, 12), rational(1, 4));
    }
}
