//! Exact rational numbers used by the analytic formulas.
//!
//! Values parsed from decimal strings (`"0.7"`) stay exact (`7/10`), so the
//! closed forms evaluate to their exact fractions (`9/17`, `289/1024`).

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Arbitrary-precision fraction kept in lowest terms with a positive
/// denominator.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Ratio(BigRational);

impl Ratio {
    pub fn new(numer: i64, denom: i64) -> Ratio {
        Ratio(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_integer(n: i64) -> Ratio {
        Ratio(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Ratio {
        Ratio(BigRational::zero())
    }

    pub fn one() -> Ratio {
        Ratio(BigRational::one())
    }

    /// The exact binary value of `x`. Returns `None` for NaN and infinities.
    pub fn from_f64(x: f64) -> Option<Ratio> {
        BigRational::from_float(x).map(Ratio)
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn pow(&self, exp: i32) -> Ratio {
        Ratio(num_traits::Pow::pow(&self.0, exp))
    }

    pub fn recip(&self) -> Ratio {
        Ratio(self.0.recip())
    }

    /// Rescale to `denom` if that is a multiple of the reduced denominator.
    /// Used to print a distribution over a common denominator.
    pub fn numer_over(&self, denom: &BigInt) -> Option<BigInt> {
        let (q, r) = denom.div_rem(self.0.denom());
        r.is_zero().then(|| self.0.numer() * q)
    }

    /// Least common multiple of the denominators of `values`.
    pub fn common_denom<'a>(values: impl IntoIterator<Item = &'a Ratio>) -> BigInt {
        values
            .into_iter()
            .fold(BigInt::one(), |acc, r| acc.lcm(r.0.denom()))
    }
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a number: {0:?} (expected an integer, decimal, or p/q fraction)")]
pub struct ParseRatioError(String);

/// Accepts `3`, `-0.75`, `1e-3`, `2.5E2` and `p/q`.
impl FromStr for Ratio {
    type Err = ParseRatioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRatioError(s.to_string());
        let t = s.trim();
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Ratio(BigRational::new(n, d)));
        }

        let (mantissa, exponent) = match t.find(['e', 'E']) {
            Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| err())?),
            None => (t, 0),
        };
        let (neg, digits) = match mantissa.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
        };
        let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err());
        }
        if !int_part.bytes().chain(frac_part.bytes()).all(|c| c.is_ascii_digit()) {
            return Err(err());
        }
        let all: String = format!("{int_part}{frac_part}");
        let mut numer: BigInt = all.parse().map_err(|_| err())?;
        if neg {
            numer = -numer;
        }
        let scale = exponent - frac_part.len() as i32;
        let ten = BigRational::from_integer(10.into());
        let value = BigRational::from_integer(numer) * num_traits::Pow::pow(&ten, scale);
        Ok(Ratio(value))
    }
}

impl Serialize for Ratio {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Ratio {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident) => {
        impl $tr for Ratio {
            type Output = Ratio;
            fn $method(self, rhs: Ratio) -> Ratio {
                Ratio($tr::$method(self.0, rhs.0))
            }
        }
        impl<'a> $tr<&'a Ratio> for &'a Ratio {
            type Output = Ratio;
            fn $method(self, rhs: &'a Ratio) -> Ratio {
                Ratio($tr::$method(&self.0, &rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Ratio {
    type Output = Ratio;
    fn neg(self) -> Ratio {
        Ratio(-self.0)
    }
}

impl std::iter::Sum for Ratio {
    fn sum<I: Iterator<Item = Ratio>>(iter: I) -> Ratio {
        iter.fold(Ratio::zero(), |a, b| a + b)
    }
}

impl<'a> std::iter::Sum<&'a Ratio> for Ratio {
    fn sum<I: Iterator<Item = &'a Ratio>>(iter: I) -> Ratio {
        iter.fold(Ratio::zero(), |a, b| &a + b)
    }
}

impl From<i64> for Ratio {
    fn from(n: i64) -> Ratio {
        Ratio::from_integer(n)
    }
}
