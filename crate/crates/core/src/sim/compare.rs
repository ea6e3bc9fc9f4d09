use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::engine::{run_simulation, SimulationResult};
use super::SimError;
use crate::wad::Wad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSeries {
    pub name: String,
    pub result: SimulationResult,
}

/// One round across all scenarios; `None` where a scenario had no such round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub round: u32,
    pub price: Vec<Option<f64>>,
    pub liq_count_lev: Vec<Option<u32>>,
    pub liq_count_ord: Vec<Option<u32>>,
    pub liq_volume_eth: Vec<Option<Wad>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub scenarios: Vec<ScenarioSeries>,
    pub rows: Vec<ComparisonRow>,
}

/// Runs every scenario on its own thread and aligns the per-round series.
///
/// All scenarios must share the pool seed, dump and probe size.
pub fn compare_scenarios(configs: &[(String, ScenarioConfig)]) -> Result<Comparison, SimError> {
    if configs.len() < 2 {
        return Err(SimError::Engine("comparison needs at least two scenarios".into()));
    }
    let (first_name, first) = &configs[0];
    for (name, c) in &configs[1..] {
        if c.seed_key() != first.seed_key() {
            return Err(SimError::SeedMismatch { first: first_name.clone(), second: name.clone() });
        }
    }
    let results: Vec<Result<SimulationResult, SimError>> = std::thread::scope(|s| {
        let handles: Vec<_> = configs
            .iter()
            .map(|(_, c)| s.spawn(move || run_simulation(c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(SimError::Engine("scenario thread panicked".into()))))
            .collect()
    });
    let mut scenarios = Vec::with_capacity(configs.len());
    for ((name, _), result) in configs.iter().zip(results) {
        scenarios.push(ScenarioSeries { name: name.clone(), result: result? });
    }

    let lo = scenarios.iter().filter_map(|s| s.result.rounds.first()).map(|r| r.round).min();
    let hi = scenarios.iter().filter_map(|s| s.result.rounds.last()).map(|r| r.round).max();
    let mut rows = Vec::new();
    if let (Some(lo), Some(hi)) = (lo, hi) {
        for round in lo..=hi {
            let at: Vec<_> = scenarios.iter().map(|s| s.result.round(round)).collect();
            rows.push(ComparisonRow {
                round,
                price: at.iter().map(|r| r.map(|r| r.steth_price)).collect(),
                liq_count_lev: at.iter().map(|r| r.map(|r| r.liquidated_count_leverage)).collect(),
                liq_count_ord: at.iter().map(|r| r.map(|r| r.liquidated_count_ordinary)).collect(),
                liq_volume_eth: at.iter().map(|r| r.map(|r| r.liquidation_volume_eth)).collect(),
            });
        }
    }
    Ok(Comparison { scenarios, rows })
}
