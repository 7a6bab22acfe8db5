//! Decimal fixed-point numbers.
//!
//! Rule programs compare privacy budgets such as `0.1` against thresholds, so
//! numbers are stored as integer millionths. `0.1` and `0.100001` are distinct
//! and compare exactly.

use std::fmt;
use std::str::FromStr;

/// Number of fractional decimal digits kept.
pub const SCALE_DIGITS: u32 = 6;
const SCALE: i64 = 1_000_000;

/// A signed decimal with six fractional digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Fixed(i64);

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FixedParseError {
    #[error("empty number")]
    Empty,
    #[error("invalid digit in number `{0}`")]
    Invalid(String),
    #[error("number `{0}` has more than {SCALE_DIGITS} fractional digits")]
    TooPrecise(String),
    #[error("number `{0}` is out of range")]
    Overflow(String),
}

impl Fixed {
    pub const ZERO: Fixed = Fixed(0);

    pub fn from_micros(micros: i64) -> Self {
        Fixed(micros)
    }

    pub fn from_int(value: i64) -> Self {
        Fixed(value * SCALE)
    }

    pub fn micros(self) -> i64 {
        self.0
    }

    pub fn checked_add(self, other: Fixed) -> Option<Fixed> {
        self.0.checked_add(other.0).map(Fixed)
    }

    pub fn is_positive(self) -> bool {
        self.0 > 0
    }
}

impl FromStr for Fixed {
    type Err = FixedParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let text = s.trim();
        if text.is_empty() {
            return Err(FixedParseError::Empty);
        }
        let (negative, body) = match text.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, text),
        };
        let (int_part, frac_part) = match body.split_once('.') {
            Some((i, f)) => (i, f),
            None => (body, ""),
        };
        let all_digits = |p: &str| p.bytes().all(|b| b.is_ascii_digit());
        if int_part.is_empty() || !all_digits(int_part) || !all_digits(frac_part) {
            return Err(FixedParseError::Invalid(s.to_string()));
        }
        if body.contains('.') && frac_part.is_empty() {
            return Err(FixedParseError::Invalid(s.to_string()));
        }
        if frac_part.len() > SCALE_DIGITS as usize {
            return Err(FixedParseError::TooPrecise(s.to_string()));
        }
        let overflow = || FixedParseError::Overflow(s.to_string());
        let int: i64 = int_part.parse().map_err(|_| overflow())?;
        let mut frac: i64 = 0;
        for (i, b) in frac_part.bytes().enumerate() {
            frac += i64::from(b - b'0') * 10_i64.pow(SCALE_DIGITS - 1 - i as u32);
        }
        let magnitude = int
            .checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(overflow)?;
        Ok(Fixed(if negative { -magnitude } else { magnitude }))
    }
}

impl serde::Serialize for Fixed {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Fixed {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        let int = abs / SCALE as u64;
        let frac = abs % SCALE as u64;
        if frac == 0 {
            write!(f, "{sign}{int}")
        } else {
            let digits = format!("{frac:06}");
            write!(f, "{sign}{int}.{}", digits.trim_end_matches('0'))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(s: &str) -> Fixed {
        s.parse().unwrap()
    }

    #[test]
    fn tenth_is_exact() {
        assert_eq!(fx("0.1").micros(), 100_000);
        assert!(fx("0.1") <= fx("0.1"));
        assert!(fx("0.100001") > fx("0.1"));
        assert!(fx("0.05") < fx("0.1"));
    }

    #[test]
    fn display_is_shortest() {
        assert_eq!(fx("0.10").to_string(), "0.1");
        assert_eq!(fx("3").to_string(), "3");
        assert_eq!(fx("-1.5").to_string(), "-1.5");
        assert_eq!(fx("0.000001").to_string(), "0.000001");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!("0.1234567".parse::<Fixed>(), Err(FixedParseError::TooPrecise(_))));
        assert!(matches!("1.".parse::<Fixed>(), Err(FixedParseError::Invalid(_))));
        assert!(matches!(".5".parse::<Fixed>(), Err(FixedParseError::Invalid(_))));
        assert!(matches!("".parse::<Fixed>(), Err(FixedParseError::Empty)));
    }

    #[test]
    fn sums() {
        assert_eq!(fx("0.05").checked_add(fx("0.04")), Some(fx("0.09")));
    }
}
