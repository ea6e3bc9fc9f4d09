//! Two-asset StableSwap pool modelling the stETH–ETH Curve pool.
//!
//! Coins are priced at par inside the invariant; the stETH price is purely a
//! function of pool imbalance. Swaps hold `D` fixed, solve for the new
//! opposite reserve and take the fee from the output, leaving it in the pool.

pub mod calibrate;
pub mod math;

use std::fmt;
use std::str::FromStr;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::wad::{Wad, SCALE};

pub use calibrate::{calibrate_amplification, Calibration, CalibrationBounds};

/// Amplification is stored with two decimals (`16.37` is `1637`).
pub const A_PRECISION: u64 = 100;

/// Largest fee the model accepts (1%).
pub const MAX_FEE: Wad = Wad::from_raw(SCALE / 100);

/// Historical fee tier of the stETH–ETH pool.
pub const DEFAULT_FEE: Wad = Wad::from_raw(400_000_000_000_000);

/// Size of the quote that defines the spot rate.
pub const PRICE_PROBE: Wad = Wad::from_tokens(100);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AmmError {
    #[error("pool has an empty reserve")]
    EmptyPool,
    #[error("swap input must be positive")]
    NonPositiveInput,
    #[error("insufficient liquidity for the requested swap")]
    InsufficientLiquidity,
    #[error("{solver} solver did not converge within {iterations} iterations")]
    NoConvergence { solver: &'static str, iterations: u32 },
    #[error("fixed-point overflow")]
    Overflow,
    #[error("fee {0} exceeds the 1% bound")]
    FeeOutOfRange(Wad),
    #[error("amplification must be at least 1, got {0}")]
    AmplificationOutOfRange(Amplification),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Amplification(u64);

impl Amplification {
    pub const fn from_scaled(scaled: u64) -> Self {
        Amplification(scaled)
    }

    pub const fn from_integer(a: u64) -> Self {
        Amplification(a * A_PRECISION)
    }

    pub const fn scaled(self) -> u64 {
        self.0
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 / A_PRECISION as f64
    }
}

impl fmt::Display for Amplification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (int, frac) = (self.0 / A_PRECISION, self.0 % A_PRECISION);
        if frac == 0 {
            write!(f, "{int}")
        } else if frac % 10 == 0 {
            write!(f, "{int}.{}", frac / 10)
        } else {
            write!(f, "{int}.{frac:02}")
        }
    }
}

impl FromStr for Amplification {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let w: Wad = s.parse().map_err(|e| format!("amplification: {e}"))?;
        let unit = SCALE / A_PRECISION as u128;
        if !w.raw().is_multiple_of(unit) {
            return Err(format!("amplification {s:?} has more than two decimals"));
        }
        u64::try_from(w.raw() / unit)
            .map(Amplification)
            .map_err(|_| format!("amplification {s:?} is too large"))
    }
}

impl Serialize for Amplification {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Amplification {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?.parse().map_err(de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    StethToEth,
    EthToSteth,
}

impl Direction {
    pub fn reverse(self) -> Self {
        match self {
            Direction::StethToEth => Direction::EthToSteth,
            Direction::EthToSteth => Direction::StethToEth,
        }
    }
}

/// Pool snapshot. Serialized with decimal-string amounts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolState {
    pub reserve_eth: Wad,
    pub reserve_steth: Wad,
    pub amplification: Amplification,
    pub fee: Wad,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwapQuote {
    pub amount_in: Wad,
    pub amount_out: Wad,
    pub direction: Direction,
    pub effective_rate: f64,
    pub post_state: PoolState,
}

impl PoolState {
    pub fn new(
        reserve_eth: Wad,
        reserve_steth: Wad,
        amplification: Amplification,
        fee: Wad,
    ) -> Result<Self, AmmError> {
        let state = PoolState { reserve_eth, reserve_steth, amplification, fee };
        state.validate()?;
        Ok(state)
    }

    /// Pool at the fork block used by the stress scenarios, before the dump.
    pub fn mainnet_fork(amplification: Amplification) -> Self {
        PoolState {
            reserve_eth: Wad::from_tokens(265_972),
            reserve_steth: Wad::from_tokens(266_966),
            amplification,
            fee: DEFAULT_FEE,
        }
    }

    pub fn validate(&self) -> Result<(), AmmError> {
        if self.reserve_eth.is_zero() || self.reserve_steth.is_zero() {
            return Err(AmmError::EmptyPool);
        }
        if self.fee > MAX_FEE {
            return Err(AmmError::FeeOutOfRange(self.fee));
        }
        if self.amplification.scaled() < A_PRECISION {
            return Err(AmmError::AmplificationOutOfRange(self.amplification));
        }
        Ok(())
    }

    fn reserves(&self, direction: Direction) -> (Wad, Wad) {
        match direction {
            Direction::StethToEth => (self.reserve_steth, self.reserve_eth),
            Direction::EthToSteth => (self.reserve_eth, self.reserve_steth),
        }
    }

    fn with_reserves(mut self, direction: Direction, reserve_in: Wad, reserve_out: Wad) -> Self {
        match direction {
            Direction::StethToEth => {
                self.reserve_steth = reserve_in;
                self.reserve_eth = reserve_out;
            }
            Direction::EthToSteth => {
                self.reserve_eth = reserve_in;
                self.reserve_steth = reserve_out;
            }
        }
        self
    }
}

pub fn invariant_d(state: &PoolState) -> Result<Wad, AmmError> {
    math::solve_d(
        state.reserve_eth.raw(),
        state.reserve_steth.raw(),
        state.amplification.scaled(),
    )
    .map(|s| Wad::from_raw(s.value))
}

pub fn get_dy(state: &PoolState, direction: Direction, dx: Wad) -> Result<SwapQuote, AmmError> {
    state.validate()?;
    if dx.is_zero() {
        return Err(AmmError::NonPositiveInput);
    }
    let amp = state.amplification.scaled();
    let (reserve_in, reserve_out) = state.reserves(direction);
    let d = math::solve_d(reserve_in.raw(), reserve_out.raw(), amp)?.value;
    let new_in = reserve_in.checked_add(dx).ok_or(AmmError::InsufficientLiquidity)?;
    let new_out = Wad::from_raw(math::solve_y(new_in.raw(), d, amp)?.value);
    let gross = reserve_out
        .checked_sub(new_out)
        .ok_or(AmmError::InsufficientLiquidity)?;
    let fee = gross.mul_ceil(state.fee);
    let amount_out = gross.saturating_sub(fee);
    if amount_out >= reserve_out {
        return Err(AmmError::InsufficientLiquidity);
    }
    let post_state = state.with_reserves(direction, new_in, reserve_out.saturating_sub(amount_out));
    Ok(SwapQuote {
        amount_in: dx,
        amount_out,
        direction,
        effective_rate: amount_out.to_f64() / dx.to_f64(),
        post_state,
    })
}

/// Executes a swap; the returned state is the quote's post-state.
pub fn exchange(state: &PoolState, direction: Direction, dx: Wad) -> Result<(Wad, PoolState), AmmError> {
    let quote = get_dy(state, direction, dx)?;
    Ok((quote.amount_out, quote.post_state))
}

/// ETH received per stETH for a `probe`-sized sale, fee included, as an 18-decimal ratio.
pub fn probe_rate(state: &PoolState, probe: Wad) -> Result<Wad, AmmError> {
    let quote = get_dy(state, Direction::StethToEth, probe)?;
    quote
        .amount_out
        .checked_div_floor(probe)
        .ok_or(AmmError::Overflow)
}

/// The stETH price convention: a 100-stETH probe sale.
pub fn spot_rate(state: &PoolState) -> Result<Wad, AmmError> {
    probe_rate(state, PRICE_PROBE)
}
