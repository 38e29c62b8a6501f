//! Fixed-point token amounts.
//!
//! Every reserve, balance and LP quantity is an unsigned 128-bit integer
//! counting units of 10^-18 tokens. Products are taken in 256 bits so
//! `a * b / c` never overflows before the division.

use std::fmt;
use std::str::FromStr;

use primitive_types::U256;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of fractional decimal digits carried by [`Amount`].
pub const DECIMALS: u32 = 18;
/// Raw units per whole token.
pub const SCALE: u128 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AmountError {
    #[error("amount must be non-negative, got {0}")]
    Negative(f64),
    #[error("amount is not a finite number")]
    NotFinite,
    #[error("amount overflows the 128-bit fixed-point range")]
    Overflow,
    #[error("cannot parse amount {0:?}")]
    Parse(String),
}

/// A non-negative token amount with 18 fractional digits.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Amount(u128);

impl Amount {
    pub const ZERO: Amount = Amount(0);
    pub const ONE: Amount = Amount(SCALE);

    pub const fn from_raw(raw: u128) -> Self {
        Amount(raw)
    }

    pub const fn raw(self) -> u128 {
        self.0
    }

    pub fn from_tokens(tokens: u64) -> Self {
        Amount(tokens as u128 * SCALE)
    }

    /// Converts a float token count, rounding to the nearest raw unit.
    pub fn from_f64(value: f64) -> Result<Self, AmountError> {
        if !value.is_finite() {
            return Err(AmountError::NotFinite);
        }
        if value < 0.0 {
            return Err(AmountError::Negative(value));
        }
        let raw = (value * SCALE as f64).round();
        if raw >= u128::MAX as f64 {
            return Err(AmountError::Overflow);
        }
        Ok(Amount(raw as u128))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_add(rhs.0).map(Amount)
    }

    pub fn checked_sub(self, rhs: Amount) -> Option<Amount> {
        self.0.checked_sub(rhs.0).map(Amount)
    }

    pub fn saturating_sub(self, rhs: Amount) -> Amount {
        Amount(self.0.saturating_sub(rhs.0))
    }

    /// `self * num / den`, rounded down. `None` on zero divisor or overflow.
    pub fn mul_div_floor(self, num: Amount, den: Amount) -> Option<Amount> {
        mul_div_floor(self.0, num.0, den.0).map(Amount)
    }

    /// `self * fraction`, with the fraction quantized to 18 digits.
    /// Fractions outside `[0, 1]` are clamped.
    pub fn scale_by(self, fraction: f64) -> Amount {
        let f = if fraction.is_nan() {
            0.0
        } else {
            fraction.clamp(0.0, 1.0)
        };
        let f_raw = (f * SCALE as f64).round() as u128;
        Amount(mul_div_floor(self.0, f_raw.min(SCALE), SCALE).unwrap_or(0))
    }

    /// Signed difference `self - rhs`.
    pub fn diff(self, rhs: Amount) -> SignedAmount {
        SignedAmount(self.0 as i128 - rhs.0 as i128)
    }

    pub fn min(self, rhs: Amount) -> Amount {
        Amount(self.0.min(rhs.0))
    }
}

pub(crate) fn mul_div_floor(a: u128, b: u128, c: u128) -> Option<u128> {
    if c == 0 {
        return None;
    }
    let q = U256::from(a) * U256::from(b) / U256::from(c);
    if q > U256::from(u128::MAX) {
        None
    } else {
        Some(q.low_u128())
    }
}

/// Exact product of two raw amounts.
pub(crate) fn wide_mul(a: Amount, b: Amount) -> U256 {
    U256::from(a.0) * U256::from(b.0)
}

pub(crate) fn isqrt(v: U256) -> u128 {
    v.integer_sqrt().low_u128()
}

impl fmt::Display for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fixed(f, false, self.0)
    }
}

impl fmt::Debug for Amount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

fn write_fixed(f: &mut fmt::Formatter<'_>, negative: bool, raw: u128) -> fmt::Result {
    let int = raw / SCALE;
    let frac = raw % SCALE;
    if negative {
        f.write_str("-")?;
    }
    if frac == 0 {
        write!(f, "{int}")
    } else {
        let digits = format!("{frac:018}");
        write!(f, "{int}.{}", digits.trim_end_matches('0'))
    }
}

impl FromStr for Amount {
    type Err = AmountError;

    /// Parses a plain decimal such as `"20"` or `"6.666666666666666667"`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || AmountError::Parse(s.to_string());
        if s.starts_with('-') {
            return Err(AmountError::Negative(s.parse().unwrap_or(f64::NAN)));
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > DECIMALS as usize {
            return Err(bad());
        }
        let int: u128 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| AmountError::Overflow)?
        };
        let frac_raw: u128 = if frac.is_empty() {
            0
        } else {
            frac.parse::<u128>().map_err(|_| bad())? * 10u128.pow(DECIMALS - frac.len() as u32)
        };
        int.checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac_raw))
            .map(Amount)
            .ok_or(AmountError::Overflow)
    }
}

impl Serialize for Amount {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Amount {
    /// Accepts either a decimal string (exact) or a JSON number.
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Number(f64),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Number(n) => Amount::from_f64(n).map_err(serde::de::Error::custom),
        }
    }
}

/// A signed token amount, used for reserve and balance deltas.
#[derive(Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SignedAmount(i128);

impl SignedAmount {
    pub const ZERO: SignedAmount = SignedAmount(0);

    pub const fn raw(self) -> i128 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / SCALE as f64
    }

    pub fn abs(self) -> Amount {
        Amount(self.0.unsigned_abs())
    }
}

impl fmt::Display for SignedAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_fixed(f, self.0 < 0, self.0.unsigned_abs())
    }
}

impl fmt::Debug for SignedAmount {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_display() {
        let a: Amount = "6.666666666666666667".parse().unwrap();
        assert_eq!(a.raw(), 6_666_666_666_666_666_667);
        assert_eq!(a.to_string(), "6.666666666666666667");
        assert_eq!("20".parse::<Amount>().unwrap(), Amount::from_tokens(20));
        assert_eq!(".5".parse::<Amount>().unwrap().to_string(), "0.5");
        assert!("1.0000000000000000001".parse::<Amount>().is_err());
        assert!("-1".parse::<Amount>().is_err());
        assert!("abc".parse::<Amount>().is_err());
        assert!(".".parse::<Amount>().is_err());
    }

    #[test]
    fn from_f64_rejects_negative_and_nan() {
        assert_eq!(Amount::from_f64(-1.0), Err(AmountError::Negative(-1.0)));
        assert_eq!(Amount::from_f64(f64::NAN), Err(AmountError::NotFinite));
        assert_eq!(Amount::from_f64(1.5).unwrap().raw(), 1_500_000_000_000_000_000);
    }

    #[test]
    fn mul_div_uses_wide_intermediate() {
        let big = Amount::from_tokens(1_000_000_000);
        // 1e27 * 1e27 overflows u128 but the quotient fits.
        assert_eq!(big.mul_div_floor(big, big), Some(big));
        assert_eq!(big.mul_div_floor(big, Amount::ZERO), None);
    }

    #[test]
    fn signed_display() {
        let a = Amount::from_tokens(1);
        let b: Amount = "3.25".parse().unwrap();
        assert_eq!(a.diff(b).to_string(), "-2.25");
        assert_eq!(b.diff(a).to_string(), "2.25");
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let a: Amount = serde_json::from_str("\"1.25\"").unwrap();
        let b: Amount = serde_json::from_str("1.25").unwrap();
        assert_eq!(a, b);
        assert_eq!(serde_json::to_string(&a).unwrap(), "\"1.25\"");
        assert!(serde_json::from_str::<Amount>("-3").is_err());
    }
}
