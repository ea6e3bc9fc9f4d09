//! 18-decimal fixed-point token amounts.
//!
//! A [`Wad`] stores `value * 10^18` in a `u128`, the same granularity as
//! on-chain ETH and stETH balances. Text form is a plain decimal string
//! (`"265972"`, `"0.0004"`); formatting is canonical, so
//! `parse(format(x)) == x` for every value.

use std::fmt;
use std::str::FromStr;

use ruint::aliases::U256;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

pub const DECIMALS: u32 = 18;
pub const SCALE: u128 = 1_000_000_000_000_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WadError {
    #[error("empty decimal string")]
    Empty,
    #[error("invalid decimal string {0:?}")]
    Invalid(String),
    #[error("more than 18 fractional digits in {0:?}")]
    TooPrecise(String),
    #[error("amount {0:?} overflows 128-bit fixed point")]
    Overflow(String),
    #[error("negative or non-finite value {0}")]
    NotRepresentable(f64),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Wad(u128);

impl Wad {
    pub const ZERO: Wad = Wad(0);
    pub const ONE: Wad = Wad(SCALE);
    pub const MAX: Wad = Wad(u128::MAX);

    pub const fn from_raw(raw: u128) -> Self {
        Wad(raw)
    }

    pub const fn raw(self) -> u128 {
        self.0
    }

    /// Whole tokens. Panics on overflow, which only a `u128` beyond ~3.4e20 tokens reaches.
    pub const fn from_tokens(tokens: u64) -> Self {
        Wad(tokens as u128 * SCALE)
    }

    /// Floor conversion from a binary float; used for synthetic cohorts and display inputs.
    pub fn from_f64(value: f64) -> Result<Self, WadError> {
        if !value.is_finite() || value < 0.0 {
            return Err(WadError::NotRepresentable(value));
        }
        let scaled = value * SCALE as f64;
        if scaled >= u128::MAX as f64 {
            return Err(WadError::NotRepresentable(value));
        }
        Ok(Wad(scaled as u128))
    }

    pub fn to_f64(self) -> f64 {
        let int = (self.0 / SCALE) as f64;
        let frac = (self.0 % SCALE) as f64 / SCALE as f64;
        int + frac
    }

    pub fn is_zero(self) -> bool {
        self.0 == 0
    }

    pub fn checked_add(self, rhs: Wad) -> Option<Wad> {
        self.0.checked_add(rhs.0).map(Wad)
    }

    pub fn checked_sub(self, rhs: Wad) -> Option<Wad> {
        self.0.checked_sub(rhs.0).map(Wad)
    }

    pub fn saturating_sub(self, rhs: Wad) -> Wad {
        Wad(self.0.saturating_sub(rhs.0))
    }

    pub fn abs_diff(self, rhs: Wad) -> Wad {
        Wad(self.0.abs_diff(rhs.0))
    }

    /// `self * rhs`, rounded down.
    pub fn mul_floor(self, rhs: Wad) -> Wad {
        let p = U256::from(self.0) * U256::from(rhs.0) / U256::from(SCALE);
        Wad(u128::try_from(p).unwrap_or(u128::MAX))
    }

    /// `self * rhs`, rounded up.
    pub fn mul_ceil(self, rhs: Wad) -> Wad {
        let p = U256::from(self.0) * U256::from(rhs.0);
        let s = U256::from(SCALE);
        let q = p.div_ceil(s);
        Wad(u128::try_from(q).unwrap_or(u128::MAX))
    }

    /// `self / rhs`, rounded down. `None` on division by zero or overflow.
    pub fn checked_div_floor(self, rhs: Wad) -> Option<Wad> {
        if rhs.0 == 0 {
            return None;
        }
        let q = U256::from(self.0) * U256::from(SCALE) / U256::from(rhs.0);
        u128::try_from(q).ok().map(Wad)
    }
}

impl std::iter::Sum for Wad {
    fn sum<I: Iterator<Item = Wad>>(iter: I) -> Wad {
        iter.fold(Wad::ZERO, |acc, w| Wad(acc.0 + w.0))
    }
}

impl fmt::Display for Wad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let int = self.0 / SCALE;
        let frac = self.0 % SCALE;
        if frac == 0 {
            return write!(f, "{int}");
        }
        let digits = format!("{frac:018}");
        write!(f, "{int}.{}", digits.trim_end_matches('0'))
    }
}

impl FromStr for Wad {
    type Err = WadError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.is_empty() {
            return Err(WadError::Empty);
        }
        let (int_part, frac_part) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        let well_formed = !int_part.is_empty()
            && int_part.bytes().all(|b| b.is_ascii_digit())
            && frac_part.bytes().all(|b| b.is_ascii_digit())
            && !(s.contains('.') && frac_part.is_empty());
        if !well_formed {
            return Err(WadError::Invalid(s.to_string()));
        }
        if frac_part.len() > DECIMALS as usize {
            return Err(WadError::TooPrecise(s.to_string()));
        }
        let overflow = || WadError::Overflow(s.to_string());
        let int: u128 = int_part.parse().map_err(|_| overflow())?;
        let mut frac: u128 = 0;
        if !frac_part.is_empty() {
            frac = frac_part.parse().map_err(|_| overflow())?;
            frac *= 10u128.pow(DECIMALS - frac_part.len() as u32);
        }
        int.checked_mul(SCALE)
            .and_then(|v| v.checked_add(frac))
            .map(Wad)
            .ok_or_else(overflow)
    }
}

impl Serialize for Wad {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Wad {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(de::Error::custom)
    }
}

/// Serde adapter for ratios and prices kept as `f64` but written as decimal strings.
pub mod f64_string {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(value)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        let s = String::deserialize(deserializer)?;
        let v: f64 = s.parse().map_err(de::Error::custom)?;
        if !v.is_finite() {
            return Err(de::Error::custom(format!("non-finite value {s:?}")));
        }
        Ok(v)
    }
}
