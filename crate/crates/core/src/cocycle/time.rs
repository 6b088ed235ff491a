use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact non-negative time.
///
/// Breakpoints are compared exactly so partitions built from decimal input
/// never depend on floating-point rounding.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Time(BigRational);

impl Time {
    pub fn zero() -> Self {
        Time(BigRational::zero())
    }

    pub fn from_integer(n: u64) -> Self {
        Time(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn from_ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(Time(BigRational::new(BigInt::from(num), BigInt::from(den))))
    }

    /// Exact value of a finite non-negative double.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::InvalidInput(format!("time must be finite and >= 0, got {x}")));
        }
        BigRational::from_float(x)
            .map(Time)
            .ok_or_else(|| Error::InvalidInput(format!("cannot represent {x}")))
    }

    /// Parses `"12"`, `"0.25"`, `".5"`, `"3e-2"` or `"1/3"`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("not a non-negative decimal time: {s:?}"));
        let s = s.trim();
        if let Some((n, d)) = s.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() || n.is_negative() || d.is_negative() {
                return Err(bad());
            }
            return Ok(Time(BigRational::new(n, d)));
        }
        let (mantissa, exp) = match s.find(['e', 'E']) {
            Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
            None => (s, 0),
        };
        let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
        if (int.is_empty() && frac.is_empty())
            || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit())
        {
            return Err(bad());
        }
        let digits: BigInt = format!("{int}{frac}0").parse().map_err(|_| bad())?;
        let scale = exp - frac.len() as i32 - 1;
        let ten = BigInt::from(10u8);
        let value = if scale >= 0 {
            BigRational::from_integer(digits * num_traits::pow(ten, scale as usize))
        } else {
            BigRational::new(digits, num_traits::pow(ten, (-scale) as usize))
        };
        Ok(Time(value))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    /// `self / k`.
    pub fn div_int(&self, k: u64) -> Self {
        Time(&self.0 / BigRational::from_integer(BigInt::from(k)))
    }

    /// `self · k`.
    pub fn mul_int(&self, k: u64) -> Self {
        Time(&self.0 * BigRational::from_integer(BigInt::from(k)))
    }

    /// Terminating decimal when one exists, otherwise `p/q`.
    pub fn to_decimal_string(&self) -> String {
        let mut den = self.0.denom().clone();
        let (two, five) = (BigInt::from(2u8), BigInt::from(5u8));
        let mut places = 0usize;
        let (mut twos, mut fives) = (0usize, 0usize);
        while (&den % &two).is_zero() {
            den /= &two;
            twos += 1;
        }
        while (&den % &five).is_zero() {
            den /= &five;
            fives += 1;
        }
        if !den.is_one() {
            return format!("{}/{}", self.0.numer(), self.0.denom());
        }
        places += twos.max(fives);
        let scaled = &self.0 * BigRational::from_integer(num_traits::pow(BigInt::from(10u8), places));
        let digits = scaled.to_integer().to_string();
        if places == 0 {
            return digits;
        }
        let padded = format!("{digits:0>width$}", width = places + 1);
        let (i, f) = padded.split_at(padded.len() - places);
        format!("{i}.{f}")
    }
}

impl Add for &Time {
    type Output = Time;
    fn add(self, rhs: &Time) -> Time {
        Time(&self.0 + &rhs.0)
    }
}

/// Saturates at zero.
impl Sub for &Time {
    type Output = Time;
    fn sub(self, rhs: &Time) -> Time {
        match self.0.cmp(&rhs.0) {
            Ordering::Greater => Time(&self.0 - &rhs.0),
            _ => Time::zero(),
        }
    }
}

impl fmt::Debug for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Time({})", self.to_decimal_string())
    }
}

impl fmt::Display for Time {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimals_exactly() {
        assert_eq!(Time::parse("0.1").unwrap(), Time::from_ratio(1, 10).unwrap());
        assert_eq!(Time::parse("2.0").unwrap(), Time::from_integer(2));
        assert_eq!(Time::parse(".5").unwrap(), Time::from_ratio(1, 2).unwrap());
        assert_eq!(Time::parse("3e-2").unwrap(), Time::from_ratio(3, 100).unwrap());
        assert_eq!(Time::parse("1.5E1").unwrap(), Time::from_integer(15));
        assert_eq!(Time::parse("1/3").unwrap(), Time::from_ratio(1, 3).unwrap());
        for bad in ["", "-1", "abc", "1.2.3", "1/0", "."] {
            assert!(Time::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn decimal_sum_is_exact() {
        let a = Time::parse("0.1").unwrap();
        let b = Time::parse("0.2").unwrap();
        assert_eq!(&a + &b, Time::parse("0.3").unwrap());
    }

    #[test]
    fn formatting() {
        assert_eq!(Time::parse("0.25").unwrap().to_decimal_string(), "0.25");
        assert_eq!(Time::parse("7").unwrap().to_decimal_string(), "7");
        assert_eq!(Time::parse("0.05").unwrap().to_decimal_string(), "0.05");
        assert_eq!(Time::from_ratio(1, 3).unwrap().to_decimal_string(), "1/3");
        let t = Time::from_ratio(2, 3).unwrap();
        assert_eq!(Time::parse(&t.to_decimal_string()).unwrap(), t);
    }

    #[test]
    fn sub_saturates() {
        let a = Time::from_integer(1);
        let b = Time::from_integer(2);
        assert!((&a - &b).is_zero());
    }
}
