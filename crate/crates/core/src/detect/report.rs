use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::algo::{detect_direct, detect_indirect, find_match, PositionTrace, Strategy, Tolerance};
use super::events::{Asset, EventKind, EventRecord};
use super::DetectError;
use crate::analytics::{actual_apr, ActualAprInputs, DEFAULT_BLOCK_TIME_SECS};
use crate::wad::Wad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectConfig {
    pub tolerance: Tolerance,
    /// stETH/ETH price applied to interest repaid in ETH when computing realized APR.
    pub steth_price_at_last_withdraw: f64,
    pub block_time_secs: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            tolerance: Tolerance::default(),
            steth_price_at_last_withdraw: 1.0,
            block_time_secs: DEFAULT_BLOCK_TIME_SECS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressReport {
    pub address: String,
    pub strategy: Strategy,
    pub n_loops: u32,
    pub principal: Wad,
    pub total_invested: Wad,
    pub realized_multiplier: Option<f64>,
    /// `None` unless the address both deposited and later withdrew stETH.
    pub realized_apr: Option<f64>,
    pub matched_events: usize,
    /// The other algorithm also matched, on a later head.
    pub also_matched: Option<Strategy>,
    /// `(block, log_index)` of heads of further disjoint episodes after the reported one.
    pub later_episodes: Vec<(u64, u64)>,
}

/// Realized APR from an address's own deposit, withdraw, borrow and repay events.
pub fn realized_apr(
    events: &[EventRecord],
    steth_price_at_last_withdraw: f64,
    block_time_secs: f64,
) -> Result<f64, DetectError> {
    let sum = |kind: EventKind, asset: Asset| -> f64 {
        events
            .iter()
            .filter(|e| e.kind == kind && e.amount_in.asset == asset)
            .map(|e| e.amount_in.value)
            .sum::<Wad>()
            .to_f64()
    };
    let first_deposit = events
        .iter()
        .filter(|e| e.kind == EventKind::Deposit && e.amount_in.asset == Asset::Steth)
        .map(|e| e.block)
        .min()
        .ok_or_else(|| DetectError::Domain("address has no stETH deposit".into()))?;
    let last_withdraw = events
        .iter()
        .filter(|e| e.kind == EventKind::Withdraw && e.amount_in.asset == Asset::Steth)
        .map(|e| e.block)
        .max()
        .ok_or_else(|| DetectError::Domain("address has no stETH withdrawal".into()))?;
    let inputs = ActualAprInputs {
        total_deposit_steth: sum(EventKind::Deposit, Asset::Steth),
        total_withdraw_steth: sum(EventKind::Withdraw, Asset::Steth),
        total_borrow_eth: sum(EventKind::Borrow, Asset::Eth),
        total_repay_eth: sum(EventKind::Repay, Asset::Eth),
        steth_price_at_last_withdraw,
        first_deposit_block: first_deposit,
        last_withdraw_block: last_withdraw,
    };
    Ok(actual_apr(&inputs, block_time_secs)?)
}

fn later_episodes(own: &[EventRecord], trace: &PositionTrace, tol: Tolerance) -> Vec<(u64, u64)> {
    let Some(start) = trace.head_block() else { return Vec::new() };
    let mut from = own
        .iter()
        .position(|e| (e.block, e.log_index) == start)
        .unwrap_or(own.len());
    let mut heads = Vec::new();
    let mut first = true;
    while let Some([h0, .., h1]) = find_match(own, trace.strategy, tol, from) {
        if !first {
            heads.push((own[h0].block, own[h0].log_index));
        }
        first = false;
        from = h1 + 1;
    }
    heads
}

fn report_one(address: &str, own: &[EventRecord], config: &DetectConfig) -> AddressReport {
    let tol = config.tolerance;
    let direct = detect_direct(address, own, tol);
    let indirect = detect_indirect(address, own, tol);
    let (trace, other) = match (direct.strategy, indirect.strategy) {
        (Strategy::None, _) => (indirect, None),
        (_, Strategy::None) => (direct, None),
        _ if indirect.head_block() < direct.head_block() => (indirect, Some(Strategy::Direct)),
        _ => (direct, Some(Strategy::Indirect)),
    };
    let matched = trace.strategy != Strategy::None;
    AddressReport {
        address: address.to_string(),
        strategy: trace.strategy,
        n_loops: trace.n_loops,
        principal: trace.principal,
        total_invested: trace.total_invested,
        realized_multiplier: matched.then_some(trace.realized_multiplier),
        realized_apr: realized_apr(own, config.steth_price_at_last_withdraw, config.block_time_secs).ok(),
        matched_events: trace.matched_sequence.len(),
        also_matched: other,
        later_episodes: later_episodes(own, &trace, tol),
    }
}

/// One report per address, ordered by address.
pub fn detect_all(records: &[EventRecord], config: &DetectConfig) -> Result<Vec<AddressReport>, DetectError> {
    config.tolerance.validate()?;
    let mut by_address: BTreeMap<&str, Vec<EventRecord>> = BTreeMap::new();
    for rec in records {
        by_address.entry(rec.address.as_str()).or_default().push(rec.clone());
    }
    Ok(by_address
        .iter()
        .map(|(address, own)| report_one(address, own, config))
        .collect())
}
