//! Round-based cascading liquidation engine.
//!
//! A scenario seeds the pool, dumps stETH into it, marks every position at
//! the resulting pool price and then repeats rounds: re-mark, liquidate all
//! positions with health factor below one, sell the seized stETH into the
//! pool. Deleveraging at round 0 unwinds leverage positions through the same
//! pool before the first round.

mod compare;
mod config;
mod engine;
mod generator;
mod output;

pub use compare::{compare_scenarios, Comparison, ComparisonRow, ScenarioSeries};
pub use config::{
    load_scenario, parse_scenario, DeleverageUnwind, LiquidationOrder, PositionSeed, ScenarioConfig,
};
pub use engine::{
    init_scenario, run_simulation, DeleverageOutcome, DeleverageStep, Engine, RoundReport,
    SimulationResult, TerminationReason,
};
pub use generator::CohortGenerator;
pub use output::{rounds_csv, summary_json, write_comparison_csv, write_rounds_csv};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::amm::AmmError;
use crate::analytics::{AaveRiskParams, AnalyticsError, HealthFactor};
use crate::wad::Wad;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("scenario {pointer}: {message}")]
    Config { pointer: String, message: String },
    #[error(transparent)]
    Amm(#[from] AmmError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error("scenarios {first} and {second} do not share the same pool seed")]
    SeedMismatch { first: String, second: String },
    #[error("{0}")]
    Engine(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl SimError {
    pub(crate) fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        SimError::Config { pointer: pointer.into(), message: message.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cohort {
    Leverage,
    Ordinary,
}

/// A lender position holding stETH collateral against ETH debt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPosition {
    pub id: String,
    pub cohort: Cohort,
    pub collateral_steth: Wad,
    pub debt_eth: Wad,
    pub hf: HealthFactor,
    pub liquidated: bool,
    pub risk: AaveRiskParams,
}

impl SimPosition {
    pub fn from_seed(seed: &PositionSeed, price: f64) -> Result<Self, SimError> {
        let mut pos = SimPosition {
            id: seed.id.clone(),
            cohort: seed.cohort,
            collateral_steth: seed.collateral_steth,
            debt_eth: seed.debt_eth,
            hf: HealthFactor::NoDebt,
            liquidated: false,
            risk: seed.risk,
        };
        pos.mark(price)?;
        Ok(pos)
    }

    /// Recomputes `hf` at `price` ETH per stETH.
    pub fn mark(&mut self, price: f64) -> Result<HealthFactor, SimError> {
        self.hf = crate::analytics::general_health_factor(
            &[(self.collateral_steth.to_f64() * price, self.risk.liquidation_threshold)],
            &[self.debt_eth.to_f64()],
        )?;
        Ok(self.hf)
    }

    pub fn is_live(&self) -> bool {
        !self.liquidated
    }
}
