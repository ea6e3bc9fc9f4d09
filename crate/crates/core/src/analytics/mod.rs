//! Closed-form leverage staking mathematics.
//!
//! A position starts from `principal` ETH, stakes (or swaps) it for stETH,
//! supplies the stETH on the lender, borrows ETH against it and restakes the
//! loan, `n` times. Everything here is a pure function of its inputs.

mod apr;
mod health;
mod params;
mod schedule;

pub use apr::{actual_apr, net_apr, ActualAprInputs, AprBreakdown, RateSet, DEFAULT_BLOCK_TIME_SECS};
pub use health::{general_health_factor, health_factor, max_price_drop, HealthFactor};
pub use params::{AaveRiskParams, ParamSchedule};
pub use schedule::{
    build_schedule, build_schedule_generalized, multiplier_limit, LeverageSchedule, LoopPolicy,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("principal must be positive, got {0}")]
    NonPositivePrincipal(f64),
    #[error("{name} must be a positive finite price, got {value}")]
    InvalidPrice { name: &'static str, value: f64 },
    #[error("primary-market price is fixed at 1, got {0}")]
    PrimaryPriceNotOne(f64),
    #[error("risk parameters violate 0 < ltv < lt <= 1 (ltv = {ltv}, lt = {lt})")]
    InvalidRiskParams { ltv: f64, lt: f64 },
    #[error("{name}[{index}] = {value} is outside [0, 1]")]
    FractionOutOfRange { name: &'static str, index: usize, value: f64 },
    #[error("{name} has {len} entries, {needed} needed for {loops} loops")]
    PolicyTooShort { name: &'static str, len: usize, needed: usize, loops: u32 },
    #[error("leverage ratio l*p_a/p_m = {0} >= 1, the loop series diverges")]
    DivergentLeverage(f64),
    #[error("{0}")]
    Domain(String),
    #[error("rate {name} must be a non-negative finite number, got {value}")]
    InvalidRate { name: &'static str, value: f64 },
    #[error("malformed parameter schedule: {0}")]
    Schedule(String),
}

/// Where the position acquires its stETH.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MarketMode {
    /// Staking with the issuer at the fixed 1:1 primary price.
    Direct,
    /// Buying on the secondary market (the Curve pool).
    Indirect,
}

/// The prices a leverage position is built and evaluated at.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceFrame {
    pub p_primary_t0: f64,
    pub p_secondary_t0: f64,
    /// Lender oracle price when the loops were executed.
    pub p_aave_t0: f64,
    /// Lender oracle price at evaluation time.
    pub p_aave_tc: f64,
    pub market_mode: MarketMode,
}

impl PriceFrame {
    pub fn new(
        p_secondary_t0: f64,
        p_aave_t0: f64,
        p_aave_tc: f64,
        market_mode: MarketMode,
    ) -> Result<Self, AnalyticsError> {
        let frame = PriceFrame {
            p_primary_t0: 1.0,
            p_secondary_t0,
            p_aave_t0,
            p_aave_tc,
            market_mode,
        };
        frame.validate()?;
        Ok(frame)
    }

    /// Everything at par, direct staking.
    pub fn par() -> Self {
        PriceFrame {
            p_primary_t0: 1.0,
            p_secondary_t0: 1.0,
            p_aave_t0: 1.0,
            p_aave_tc: 1.0,
            market_mode: MarketMode::Direct,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        for (name, value) in [
            ("p_primary_t0", self.p_primary_t0),
            ("p_secondary_t0", self.p_secondary_t0),
            ("p_aave_t0", self.p_aave_t0),
            ("p_aave_tc", self.p_aave_tc),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(AnalyticsError::InvalidPrice { name, value });
            }
        }
        if self.p_primary_t0 != 1.0 {
            return Err(AnalyticsError::PrimaryPriceNotOne(self.p_primary_t0));
        }
        Ok(())
    }

    /// Market price the stETH is acquired at.
    pub fn p_market(&self) -> f64 {
        match self.market_mode {
            MarketMode::Direct => self.p_primary_t0,
            MarketMode::Indirect => self.p_secondary_t0,
        }
    }

    /// Same frame re-evaluated at a different lender price.
    pub fn at_evaluation_price(mut self, p_aave_tc: f64) -> Self {
        self.p_aave_tc = p_aave_tc;
        self
    }

    /// Per-loop growth factor `l * p_a(t0) / p_m(t0)`.
    pub fn loop_ratio(&self, params: &AaveRiskParams) -> f64 {
        params.ltv * self.p_aave_t0 / self.p_market()
    }
}
