use std::fmt;

use serde::{Deserialize, Serialize};

use super::{AaveRiskParams, AnalyticsError, LeverageSchedule, PriceFrame};

/// Health factor of a position. Debt-free positions carry an explicit
/// sentinel instead of a float infinity so the value serializes portably.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum HealthFactor {
    Finite(f64),
    NoDebt,
}

impl HealthFactor {
    pub fn from_ratio(weighted_collateral: f64, debt: f64) -> Self {
        if debt > 0.0 {
            HealthFactor::Finite(weighted_collateral / debt)
        } else {
            HealthFactor::NoDebt
        }
    }

    pub fn is_liquidatable(&self) -> bool {
        matches!(self, HealthFactor::Finite(v) if *v < 1.0)
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            HealthFactor::Finite(v) => Some(*v),
            HealthFactor::NoDebt => None,
        }
    }

    /// Ordering key with the sentinel above every finite value.
    pub fn sort_key(&self) -> f64 {
        self.value().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for HealthFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HealthFactor::Finite(v) => write!(f, "{v}"),
            HealthFactor::NoDebt => f.write_str("no-debt"),
        }
    }
}

/// Health factor of a leverage schedule at the frame's evaluation price.
pub fn health_factor(
    schedule: &LeverageSchedule,
    params: &AaveRiskParams,
    prices: &PriceFrame,
) -> HealthFactor {
    HealthFactor::from_ratio(
        schedule.total_collateral * prices.p_aave_tc * params.liquidation_threshold,
        schedule.total_debt,
    )
}

/// Multi-asset health factor: `collaterals` are `(value_in_eth, liquidation_threshold)` pairs.
pub fn general_health_factor(
    collaterals: &[(f64, f64)],
    debts: &[f64],
) -> Result<HealthFactor, AnalyticsError> {
    if debts.is_empty() {
        return Err(AnalyticsError::Domain(
            "health factor is undefined without any debt entry".into(),
        ));
    }
    let mut weighted = 0.0;
    for &(value, lt) in collaterals {
        if !(value.is_finite() && value >= 0.0) || !(0.0..=1.0).contains(&lt) {
            return Err(AnalyticsError::Domain(format!(
                "collateral entry ({value}, {lt}) is not a non-negative value with a threshold in [0, 1]"
            )));
        }
        weighted += value * lt;
    }
    let mut total_debt = 0.0;
    for &d in debts {
        if !(d.is_finite() && d >= 0.0) {
            return Err(AnalyticsError::Domain(format!("debt value {d} is negative or non-finite")));
        }
        total_debt += d;
    }
    Ok(HealthFactor::from_ratio(weighted, total_debt))
}

/// Largest relative fall of the lender price a fully looped position survives.
pub fn max_price_drop(params: &AaveRiskParams) -> f64 {
    params.ltv / params.liquidation_threshold - 1.0
}
