use serde::{Deserialize, Serialize};

use super::{AaveRiskParams, AnalyticsError, LeverageSchedule, PriceFrame};

/// Post-merge slot time.
pub const DEFAULT_BLOCK_TIME_SECS: f64 = 12.0;

const SECONDS_PER_YEAR: f64 = 3600.0 * 24.0 * 365.0;

/// Simple annual rates, treated as exogenous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSet {
    pub staking_apr: f64,
    pub deposit_apr: f64,
    pub borrow_apr: f64,
}

impl RateSet {
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        for (name, value) in [
            ("staking_apr", self.staking_apr),
            ("deposit_apr", self.deposit_apr),
            ("borrow_apr", self.borrow_apr),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                return Err(AnalyticsError::InvalidRate { name, value });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprBreakdown {
    pub staking_component: f64,
    pub deposit_component: f64,
    pub borrow_component: f64,
    pub net: f64,
}

pub fn net_apr(
    schedule: &LeverageSchedule,
    rates: &RateSet,
    params: &AaveRiskParams,
    prices: &PriceFrame,
) -> Result<AprBreakdown, AnalyticsError> {
    rates.validate()?;
    prices.validate()?;
    let s = schedule.principal;
    let p_m = prices.p_market();

    let staking_component = rates.staking_apr * (schedule.total_invested / s);
    let deposit_component = rates.deposit_apr * schedule.total_collateral * p_m / s;
    let borrow_component = if schedule.total_debt == 0.0 {
        0.0
    } else {
        let capacity = params.ltv * prices.p_aave_t0;
        if capacity == 0.0 {
            return Err(AnalyticsError::Domain(
                "borrow component needs a positive ltv when the schedule carries debt".into(),
            ));
        }
        rates.borrow_apr * schedule.total_debt * p_m / (s * capacity)
    };

    Ok(AprBreakdown {
        staking_component,
        deposit_component,
        borrow_component,
        net: staking_component + deposit_component - borrow_component,
    })
}

/// Lifetime totals of one lender position, as aggregated from its events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActualAprInputs {
    pub total_deposit_steth: f64,
    pub total_withdraw_steth: f64,
    pub total_borrow_eth: f64,
    pub total_repay_eth: f64,
    /// stETH/ETH price when the last withdrawal happened.
    pub steth_price_at_last_withdraw: f64,
    pub first_deposit_block: u64,
    pub last_withdraw_block: u64,
}

/// Realized APR of a closed position.
///
/// The net stETH gained, less the ETH interest paid converted at the
/// closing price, per unit deposited and annualized over the block span.
pub fn actual_apr(inputs: &ActualAprInputs, block_time_secs: f64) -> Result<f64, AnalyticsError> {
    if inputs.last_withdraw_block <= inputs.first_deposit_block {
        return Err(AnalyticsError::Domain(format!(
            "last withdraw block {} must follow first deposit block {}",
            inputs.last_withdraw_block, inputs.first_deposit_block
        )));
    }
    if !(inputs.total_deposit_steth > 0.0) {
        return Err(AnalyticsError::Domain("total stETH deposited must be positive".into()));
    }
    if !(inputs.steth_price_at_last_withdraw > 0.0) {
        return Err(AnalyticsError::InvalidPrice {
            name: "steth_price_at_last_withdraw",
            value: inputs.steth_price_at_last_withdraw,
        });
    }
    if !(block_time_secs > 0.0) {
        return Err(AnalyticsError::Domain(format!("block time {block_time_secs} must be positive")));
    }
    let accrued_steth = inputs.total_withdraw_steth - inputs.total_deposit_steth;
    let accrued_eth = inputs.total_repay_eth - inputs.total_borrow_eth;
    let blocks_per_year = SECONDS_PER_YEAR / block_time_secs;
    let span = (inputs.last_withdraw_block - inputs.first_deposit_block) as f64;
    Ok(
        (accrued_steth - accrued_eth / inputs.steth_price_at_last_withdraw) * blocks_per_year
            / (inputs.total_deposit_steth * span),
    )
}
