//! Exact rational numbers used for every short-horizon quantity.
//!
//! Probabilities such as `0.25` are parsed into exact fractions so that
//! cumulative rewards can be compared for equality without rounding.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

/// Parses `"3"`, `"-0.125"`, `"1e-3"`, `"2.5E2"` or `"7/16"` exactly.
pub fn parse(input: &str) -> Result<Rational> {
    let s = input.trim();
    let fail = |reason: &str| Error::ParseRational {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    if s.is_empty() {
        return Err(fail("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_decimal(num.trim()).ok_or_else(|| fail("bad numerator"))?;
        let den = parse_decimal(den.trim()).ok_or_else(|| fail("bad denominator"))?;
        if den.is_zero() {
            return Err(fail("zero denominator"));
        }
        return Ok(num / den);
    }
    parse_decimal(s).ok_or_else(|| fail("expected a decimal or num/den"))
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first()? {
        b'-' => (true, &mantissa[1..]),
        b'+' => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole
        .bytes()
        .chain(frac.bytes())
        .all(|b| b.is_ascii_digit())
    {
        return None;
    }
    let all_digits = format!("{whole}{frac}");
    let mut value = Rational::from_integer(all_digits.parse::<BigInt>().ok()?);
    let scale = exponent - frac.len() as i32;
    let ten = BigInt::from(10);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Some(if negative { -value } else { value })
}

/// Canonical `num/den` form, or a plain integer when the denominator is 1.
pub fn format(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Decimal rendering. Exact when the denominator has only factors 2 and 5,
/// otherwise rounded to `max_digits` fractional digits.
pub fn format_decimal(r: &Rational, max_digits: usize) -> String {
    let negative = r.is_negative();
    let abs = r.abs();
    let whole = abs.trunc();
    let mut rest = &abs - &whole;
    let mut out = whole.numer().to_string();
    if !rest.is_zero() {
        out.push('.');
        let ten = int(10);
        let mut digits = 0;
        while !rest.is_zero() && digits < max_digits {
            rest *= &ten;
            let d = rest.trunc();
            out.push_str(&d.numer().to_string());
            rest -= d;
            digits += 1;
        }
    }
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // to_f64 on huge numerators/denominators can fail; fall back to a
        // quotient of separately rounded parts.
        r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN)
    })
}

/// Best rational approximation is not needed here: f64 values coming from a
/// command line are converted exactly via their shortest decimal rendering.
pub fn from_f64_decimal(v: f64) -> Result<Rational> {
    if !v.is_finite() {
        return Err(Error::ParseRational {
            input: v.to_string(),
            reason: "not finite".into(),
        });
    }
    parse(&format!("{v:?}"))
}
