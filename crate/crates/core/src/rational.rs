//! Exact rational numbers and their string encoding.
//!
//! Every power, threshold and reward is a [`BigRational`]. On the wire they
//! travel as strings (`"7/20"`, `"-3"`, `"0.55"`) so nothing is lost to
//! floating point.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational `{input}`: {reason}")]
pub struct ParseRationalError {
    pub input: String,
    pub reason: &'static str,
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// `num / den`. Panics when `den == 0`.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"a/b"`, an integer, or a finite decimal such as `"-0.25"`.
pub fn parse(input: &str) -> Result<Rational, ParseRationalError> {
    let s = input.trim();
    let err = |reason| ParseRationalError {
        input: input.to_string(),
        reason,
    };
    if s.is_empty() {
        return Err(err("empty string"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| err("bad numerator"))?;
        let den = BigInt::from_str(den.trim()).map_err(|_| err("bad denominator"))?;
        if den.is_zero() {
            return Err(err("zero denominator"));
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err("bad decimal fraction"));
        }
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let mantissa = BigInt::from_str(&digits).map_err(|_| err("bad decimal"))?;
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let value = Rational::new(mantissa, scale);
        return Ok(if negative { -value } else { value });
    }
    BigInt::from_str(s)
        .map(Rational::from_integer)
        .map_err(|_| err("not a number"))
}

/// Canonical string form: `"2/5"`, `"-3"`, `"0"`.
pub fn encode(value: &Rational) -> String {
    value.to_string()
}

/// Decimal rendering rounded half away from zero to `places` digits.
pub fn to_decimal(value: &Rational, places: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10), places);
    let scaled = value.abs() * Rational::from_integer(scale.clone());
    let (q, r) = scaled.numer().div_rem(scaled.denom());
    let twice = r * BigInt::from(2);
    let rounded = if twice >= *scaled.denom() {
        q + BigInt::one()
    } else {
        q
    };
    let (whole, frac) = rounded.div_rem(&scale);
    let sign = if value.is_negative() && !rounded_is_zero(&whole, &frac) {
        "-"
    } else {
        ""
    };
    if places == 0 {
        return format!("{sign}{whole}");
    }
    format!(
        "{sign}{whole}.{:0>width$}",
        frac.to_string(),
        width = places
    )
}

fn rounded_is_zero(whole: &BigInt, frac: &BigInt) -> bool {
    whole.is_zero() && frac.is_zero()
}

/// `count / total` as an exact frequency; `0` when `total == 0`.
pub fn frequency(count: u64, total: u64) -> Rational {
    if total == 0 {
        return Rational::zero();
    }
    Rational::new(BigInt::from(count), BigInt::from(total))
}

/// Serde adapter: one rational as a string.
pub mod as_str {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&encode(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let raw = String::deserialize(d)?;
        parse(&raw).map_err(D::Error::custom)
    }
}

/// Serde adapter: a list of rationals as strings.
pub mod vec_as_str {
    use super::*;
    use serde::{de::Error as _, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&encode(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw = Vec::<String>::deserialize(d)?;
        raw.iter()
            .map(|s| parse(s).map_err(D::Error::custom))
            .collect()
    }
}

/// Serde adapter: an optional rational as a string or `null`.
pub mod opt_as_str {
    use super::*;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => s.serialize_some(&encode(v)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let raw = Option::<String>::deserialize(d)?;
        raw.map(|s| parse(&s).map_err(D::Error::custom)).transpose()
    }
}

/// Serde adapter: an ordered map with rational values as strings.
pub mod map_as_str {
    use std::collections::BTreeMap;

    use super::*;
    use serde::{
        de::Error as _, ser::SerializeMap, Deserialize, Deserializer, Serialize, Serializer,
    };

    pub fn serialize<K, S>(values: &BTreeMap<K, Rational>, s: S) -> Result<S::Ok, S::Error>
    where
        K: Serialize,
        S: Serializer,
    {
        let mut map = s.serialize_map(Some(values.len()))?;
        for (k, v) in values {
            map.serialize_entry(k, &encode(v))?;
        }
        map.end()
    }

    pub fn deserialize<'de, K, D>(d: D) -> Result<BTreeMap<K, Rational>, D::Error>
    where
        K: Deserialize<'de> + Ord,
        D: Deserializer<'de>,
    {
        let raw = BTreeMap::<K, String>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| parse(&v).map(|v| (k, v)).map_err(D::Error::custom))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_forms() {
        assert_eq!(parse("7/20").unwrap(), ratio(7, 20));
        assert_eq!(parse("-3").unwrap(), int(-3));
        assert_eq!(parse("0.55").unwrap(), ratio(11, 20));
        assert_eq!(parse("-0.25").unwrap(), ratio(-1, 4));
        assert_eq!(parse(" 4/8 ").unwrap(), ratio(1, 2));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("").is_err());
        assert!(parse("1/0").is_err());
        assert!(parse("abc").is_err());
        assert!(parse("1.").is_err());
        assert!(parse("1.2.3").is_err());
    }

    #[test]
    fn encode_is_canonical() {
        assert_eq!(encode(&ratio(4, 10)), "2/5");
        assert_eq!(encode(&int(-3)), "-3");
        assert_eq!(encode(&ratio(0, 7)), "0");
    }

    #[test]
    fn decimal_rendering_rounds() {
        assert_eq!(to_decimal(&ratio(2, 3), 4), "0.6667");
        assert_eq!(to_decimal(&ratio(-1, 8), 2), "-0.13");
        assert_eq!(to_decimal(&ratio(1, 1000), 2), "0.00");
        assert_eq!(to_decimal(&int(5), 0), "5");
    }
}
