use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_path_to_error::Segment;

use super::generator::CohortGenerator;
use super::{Cohort, SimError};
use crate::amm::{Amplification, PoolState, PRICE_PROBE};
use crate::analytics::AaveRiskParams;
use crate::wad::Wad;

/// Amplification fit so that a 170,000 stETH sale into the fork-block pool
/// leaves a 0.9052 probe rate.
pub const CALIBRATED_AMPLIFICATION: Amplification = Amplification::from_scaled(1504);

pub const DEFAULT_DUMP: Wad = Wad::from_tokens(170_000);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeleverageUnwind {
    /// Repay all debt, then withdraw what collateral is left.
    Full,
    /// Stop once the health factor at the live pool price reaches `target`.
    ToTargetHf { target: f64 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiquidationOrder {
    /// Most distressed first; ties keep input order.
    #[default]
    AscendingHf,
    /// Input order.
    Input,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PositionSeed {
    pub id: String,
    pub cohort: Cohort,
    pub collateral_steth: Wad,
    pub debt_eth: Wad,
    pub risk: AaveRiskParams,
}

fn default_unwind() -> DeleverageUnwind {
    DeleverageUnwind::Full
}

fn default_max_rounds() -> u32 {
    1000
}

fn default_probe() -> Wad {
    PRICE_PROBE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub name: String,
    pub pool: PoolState,
    pub initial_dump_steth: Wad,
    #[serde(default)]
    pub positions: Vec<PositionSeed>,
    /// Synthetic cohort appended after `positions`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<CohortGenerator>,
    pub include_leverage_cohort: bool,
    pub include_ordinary_cohort: bool,
    #[serde(default)]
    pub deleverage_at_round0: bool,
    #[serde(default = "default_unwind")]
    pub deleverage_unwind: DeleverageUnwind,
    #[serde(default = "default_max_rounds")]
    pub max_rounds: u32,
    #[serde(default)]
    pub liquidation_order: LiquidationOrder,
    #[serde(default = "default_probe")]
    pub price_probe_steth: Wad,
    /// Share of debt a single liquidation may repay; `None` repays all of it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub close_factor: Option<f64>,
}

impl ScenarioConfig {
    /// Fork-block pool, default dump, generated leverage cohort only.
    pub fn stress_default(seed: u64) -> Self {
        ScenarioConfig {
            name: String::new(),
            pool: PoolState::mainnet_fork(CALIBRATED_AMPLIFICATION),
            initial_dump_steth: DEFAULT_DUMP,
            positions: Vec::new(),
            generator: Some(CohortGenerator::new(seed)),
            include_leverage_cohort: true,
            include_ordinary_cohort: false,
            deleverage_at_round0: false,
            deleverage_unwind: DeleverageUnwind::Full,
            max_rounds: default_max_rounds(),
            liquidation_order: LiquidationOrder::AscendingHf,
            price_probe_steth: PRICE_PROBE,
            close_factor: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        self.pool
            .validate()
            .map_err(|e| SimError::config("/pool", e.to_string()))?;
        if self.max_rounds < 1 {
            return Err(SimError::config("/max_rounds", "must be at least 1"));
        }
        if !self.include_leverage_cohort && !self.include_ordinary_cohort {
            return Err(SimError::config(
                "/include_leverage_cohort",
                "at least one of include_leverage_cohort and include_ordinary_cohort must be true",
            ));
        }
        if self.price_probe_steth.is_zero() {
            return Err(SimError::config("/price_probe_steth", "must be positive"));
        }
        if let DeleverageUnwind::ToTargetHf { target } = self.deleverage_unwind {
            if !(target.is_finite() && target >= 1.0) {
                return Err(SimError::config(
                    "/deleverage_unwind/target",
                    format!("target health factor {target} must be a finite number >= 1"),
                ));
            }
        }
        if let Some(cf) = self.close_factor {
            if !(cf > 0.0 && cf <= 1.0) {
                return Err(SimError::config("/close_factor", format!("{cf} is outside (0, 1]")));
            }
        }
        if let Some(g) = &self.generator {
            g.validate()?;
        }
        let mut ids = HashSet::new();
        for (i, p) in self.positions.iter().enumerate() {
            if p.id.is_empty() {
                return Err(SimError::config(format!("/positions/{i}/id"), "empty id"));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(SimError::config(format!("/positions/{i}/id"), format!("duplicate id {:?}", p.id)));
            }
            p.risk
                .validate()
                .map_err(|e| SimError::config(format!("/positions/{i}/risk"), e.to_string()))?;
        }
        Ok(())
    }

    /// Explicit positions followed by generated ones, restricted to included cohorts.
    pub fn seed_positions(&self) -> Result<Vec<PositionSeed>, SimError> {
        let mut seeds = self.positions.clone();
        if let Some(g) = &self.generator {
            seeds.extend(g.generate()?);
        }
        let mut ids = HashSet::new();
        for s in &seeds {
            if !ids.insert(s.id.as_str()) {
                return Err(SimError::config("/generator", format!("generated id {:?} collides with an explicit position", s.id)));
            }
        }
        seeds.retain(|s| match s.cohort {
            Cohort::Leverage => self.include_leverage_cohort,
            Cohort::Ordinary => self.include_ordinary_cohort,
        });
        Ok(seeds)
    }

    /// Pool, dump and probe, the part two scenarios must share to be compared.
    pub fn seed_key(&self) -> (PoolState, Wad, Wad) {
        (self.pool, self.initial_dump_steth, self.price_probe_steth)
    }
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => {
                out.push('/');
                out.push_str(&key.replace('~', "~0").replace('/', "~1"));
            }
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    if out.is_empty() {
        out.push('/');
    }
    out
}

/// Parses and validates a scenario; errors carry a JSON pointer to the offending value.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig, SimError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ScenarioConfig = serde_path_to_error::deserialize(de).map_err(|e| {
        let ptr = pointer(e.path());
        SimError::config(ptr, e.into_inner().to_string())
    })?;
    config.validate()?;
    Ok(config)
}

pub fn load_scenario(path: &Path) -> Result<ScenarioConfig, SimError> {
    let text = std::fs::read_to_string(path)?;
    let mut config = parse_scenario(&text)?;
    if config.name.is_empty() {
        config.name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
    }
    Ok(config)
}
