//! Exact rational helpers shared by the LP, MILP and oracle code paths.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn pow10(places: u32) -> BigInt {
    num_traits::pow(BigInt::from(10), places as usize)
}

/// Parses a plain decimal literal (`-0.125`, `3`, `1e-3`) into an exact rational.
pub fn parse_decimal(s: &str) -> Result<Q> {
    let s = s.trim();
    let bad = || Error::Parameter(format!("not a decimal number: {s:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i32 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = match digits.find('.') {
        Some(dot) => (&digits[..dot], &digits[dot + 1..]),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let mut numer: BigInt = all.parse().map_err(|_| bad())?;
    if negative {
        numer = -numer;
    }
    let scale = exponent - frac_part.len() as i32;
    let value = if scale >= 0 {
        Q::from_integer(numer * pow10(scale as u32))
    } else {
        Q::new(numer, pow10((-scale) as u32))
    };
    Ok(value)
}

/// Rounds a float to `places` decimal places and returns the exact decimal.
pub fn from_f64_snapped(x: f64, places: u32) -> Result<Q> {
    if !x.is_finite() {
        return Err(Error::Parameter(format!("non-finite value {x}")));
    }
    let scaled = (x * 10f64.powi(places as i32)).round();
    let numer = BigInt::from(scaled as i128);
    Ok(Q::new(numer, pow10(places)))
}

pub fn to_f64(x: &Q) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// True when the reduced denominator has no prime factors besides 2 and 5.
pub fn is_terminating_decimal(x: &Q) -> bool {
    let mut den = x.denom().clone();
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while den.is_even() {
        den /= &two;
    }
    while (&den % &five).is_zero() {
        den /= &five;
    }
    den.is_one()
}

/// Exact decimal rendering of a terminating rational; `None` otherwise.
pub fn exact_decimal_string(x: &Q) -> Option<String> {
    if !is_terminating_decimal(x) {
        return None;
    }
    let mut places = 0u32;
    let mut scaled = x.clone();
    while !scaled.is_integer() {
        scaled *= q(10);
        places += 1;
    }
    let numer = scaled.to_integer();
    let negative = numer.is_negative();
    let digits = numer.abs().to_string();
    let body = if places == 0 {
        digits
    } else {
        let places = places as usize;
        let padded = format!("{digits:0>width$}", width = places + 1);
        let (int_part, frac_part) = padded.split_at(padded.len() - places);
        format!("{int_part}.{frac_part}")
    };
    Some(if negative { format!("-{body}") } else { body })
}

/// Human readable form: exact decimal when possible, `p/q` otherwise.
pub fn display(x: &Q) -> String {
    exact_decimal_string(x).unwrap_or_else(|| format!("{}/{}", x.numer(), x.denom()))
}

/// Parses either a decimal literal or a `p/q` fraction.
pub fn parse_rational(s: &str) -> Result<Q> {
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| Error::Parameter(format!("bad fraction {s:?}")))?;
            let d: BigInt = d.trim().parse().map_err(|_| Error::Parameter(format!("bad fraction {s:?}")))?;
            if d.is_zero() {
                return Err(Error::Parameter(format!("zero denominator in {s:?}")));
            }
            Ok(Q::new(n, d))
        }
        None => parse_decimal(s),
    }
}

pub fn dot(a: &[Q], b: &[Q]) -> Q {
    a.iter().zip(b).fold(Q::zero(), |acc, (x, y)| acc + x * y)
}
