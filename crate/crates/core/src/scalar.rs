//! Numeric backbone: every market quantity is either an exact arbitrary-precision
//! rational or an `f64` with tolerance-aware comparisons. The algorithms are generic
//! over [`Scalar`]; the containing structures carry the mode through the type.

use std::fmt::{Debug, Display};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow, Signed, ToPrimitive, Zero};

/// Exact-mode scalar.
pub type Rat = BigRational;

/// Arithmetic interface shared by the exact and approximate modes.
pub trait Scalar:
    Clone
    + PartialEq
    + PartialOrd
    + Debug
    + Display
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is closed under +,−,×,÷ with no rounding.
    const EXACT: bool;

    fn from_int(v: i64) -> Self;
    fn ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    fn recip(&self) -> Self;
    fn abs(&self) -> Self;
    fn powi(&self, exp: i32) -> Self;
    /// Residual smaller than this is treated as zero by the flow code.
    fn flow_eps() -> Self;
    /// JSON form: exact values as `{num, den}` (plain integer when the
    /// denominator is 1), approximate values as numbers.
    fn to_json(&self) -> serde_json::Value;
    /// Numerator/denominator pair for trace records; approximate values
    /// report (value, 1).
    fn to_num_den_json(&self) -> (serde_json::Value, serde_json::Value);
}

fn bigint_json(v: &BigInt) -> serde_json::Value {
    match v.to_i64() {
        Some(small) => serde_json::Value::from(small),
        None => serde_json::Value::from(v.to_string()),
    }
}

impl Scalar for Rat {
    const EXACT: bool = true;

    fn from_int(v: i64) -> Self {
        Rat::from_integer(BigInt::from(v))
    }

    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Rat::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn recip(&self) -> Self {
        BigRational::recip(self)
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn powi(&self, exp: i32) -> Self {
        Pow::pow(self.clone(), exp)
    }

    fn flow_eps() -> Self {
        Rat::zero()
    }

    fn to_json(&self) -> serde_json::Value {
        if self.denom().is_one() {
            bigint_json(self.numer())
        } else {
            serde_json::json!({ "num": bigint_json(self.numer()), "den": bigint_json(self.denom()) })
        }
    }

    fn to_num_den_json(&self) -> (serde_json::Value, serde_json::Value) {
        (bigint_json(self.numer()), bigint_json(self.denom()))
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_int(v: i64) -> Self {
        v as f64
    }

    fn ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn recip(&self) -> Self {
        1.0 / self
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn powi(&self, exp: i32) -> Self {
        f64::powi(*self, exp)
    }

    fn flow_eps() -> Self {
        1e-12
    }

    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::from(*self)
    }

    fn to_num_den_json(&self) -> (serde_json::Value, serde_json::Value) {
        (serde_json::Value::from(*self), serde_json::Value::from(1.0))
    }
}

/// Comparison tolerances. Exact mode uses zeros, so every tolerance-aware
/// predicate degenerates to exact equality there; approximate mode defaults
/// to 1e-9 for both the relative and absolute slack.
#[derive(Clone, Debug)]
pub struct Tol<T> {
    pub rel: T,
    pub abs: T,
}

impl<T: Scalar> Tol<T> {
    pub fn exact() -> Self {
        Tol {
            rel: T::zero(),
            abs: T::zero(),
        }
    }

    /// Mode default: zeros when exact, 1e-9 otherwise.
    pub fn for_mode() -> Self {
        if T::EXACT {
            Self::exact()
        } else {
            Tol {
                rel: T::ratio(1, 1_000_000_000),
                abs: T::ratio(1, 1_000_000_000),
            }
        }
    }

    /// |a − b| <= abs
    pub fn eq_abs(&self, a: &T, b: &T) -> bool {
        (a.clone() - b.clone()).abs() <= self.abs
    }

    /// ratio <= (1 + rel) · floor — the MPB edge membership test.
    pub fn within_rel_of_min(&self, ratio: &T, floor: &T) -> bool {
        ratio.clone() <= (T::one() + self.rel.clone()) * floor.clone()
    }

    /// e <= min + abs — membership in the minimum set.
    pub fn in_min_set(&self, e: &T, min: &T) -> bool {
        e.clone() <= min.clone() + self.abs.clone()
    }
}

/// Sum of a scalar iterator (the trait deliberately avoids a `Sum` bound).
pub fn total<T: Scalar>(iter: impl IntoIterator<Item = T>) -> T {
    iter.into_iter().fold(T::zero(), |acc, v| acc + v)
}

/// Exponent k with base^k == value, if one exists. Exact in exact mode; the
/// f64 log only seeds the candidate, which is then verified by `powi`.
pub fn power_exponent<T: Scalar>(value: &T, base: &T) -> Option<i32> {
    if value <= &T::zero() || base <= &T::zero() || base == &T::one() {
        return None;
    }
    let guess = value.to_f64().ln() / base.to_f64().ln();
    if !guess.is_finite() || guess.abs() > 4096.0 {
        return None;
    }
    let k = guess.round() as i32;
    for cand in [k, k - 1, k + 1] {
        if &base.powi(cand) == value {
            return Some(cand);
        }
    }
    None
}
