use serde::{Deserialize, Serialize};

use super::config::{DeleverageUnwind, LiquidationOrder, ScenarioConfig};
use super::{Cohort, SimError, SimPosition};
use crate::amm::{exchange, probe_rate, Direction, PoolState};
use crate::analytics::HealthFactor;
use crate::wad::Wad;

/// Upper bound on swap-repay steps for one position's unwind.
pub const MAX_DELEVERAGE_STEPS: usize = 512;

/// Smallest tranche sold during an unwind, so dust debt still clears.
const MIN_TRANCHE: Wad = Wad::from_raw(1_000_000_000);

/// Overshoot on computed tranche sizes to absorb slippage.
const TRANCHE_MARGIN: f64 = 1.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    NoLiquidatable,
    MaxRounds,
    /// A collateral sale failed and nothing could be liquidated.
    PoolExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: u32,
    /// Marking price at the start of the round.
    pub steth_price: f64,
    pub liquidatable_leverage: u32,
    pub liquidatable_ordinary: u32,
    pub liquidated_count_leverage: u32,
    pub liquidated_count_ordinary: u32,
    /// Seized collateral, stETH counted one-for-one as ETH.
    pub liquidation_volume_eth: Wad,
    pub liquidation_repaid_eth: Wad,
    pub deleverage_repaid_eth: Wad,
    /// stETH sold into the pool this round, all sources.
    pub steth_sold: Wad,
    /// ETH paid out by the pool this round.
    pub eth_bought: Wad,
    pub pool_halted: bool,
    pub pool_after: PoolState,
}

impl RoundReport {
    fn empty(round: u32, steth_price: f64, pool: PoolState) -> Self {
        RoundReport {
            round,
            steth_price,
            liquidatable_leverage: 0,
            liquidatable_ordinary: 0,
            liquidated_count_leverage: 0,
            liquidated_count_ordinary: 0,
            liquidation_volume_eth: Wad::ZERO,
            liquidation_repaid_eth: Wad::ZERO,
            deleverage_repaid_eth: Wad::ZERO,
            steth_sold: Wad::ZERO,
            eth_bought: Wad::ZERO,
            pool_halted: false,
            pool_after: pool,
        }
    }

    pub fn liquidated(&self) -> u32 {
        self.liquidated_count_leverage + self.liquidated_count_ordinary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeleverageStep {
    pub sold_steth: Wad,
    pub received_eth: Wad,
    pub repaid_eth: Wad,
    pub collateral_after: Wad,
    pub debt_after: Wad,
    /// Pool probe rate after the swap.
    pub price_after: f64,
    pub hf_after: HealthFactor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeleverageOutcome {
    pub id: String,
    pub repaid_eth: Wad,
    pub sold_steth: Wad,
    pub received_eth: Wad,
    /// Collateral returned to the owner once the unwind finished.
    pub withdrawn_steth: Wad,
    pub remaining_debt: Wad,
    pub complete: bool,
    pub steps: Vec<DeleverageStep>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationResult {
    pub name: String,
    /// Probe rate right after the initial dump.
    pub initial_price: f64,
    pub rounds: Vec<RoundReport>,
    pub terminal_price: f64,
    pub total_liquidated_eth: Wad,
    pub termination_reason: TerminationReason,
    pub leverage_positions: u32,
    pub leverage_liquidated: u32,
    pub ordinary_positions: u32,
    pub ordinary_liquidated: u32,
    pub deleveraged_positions: u32,
    pub deleverage_incomplete: u32,
}

impl SimulationResult {
    /// Rounds after the optional round-0 deleverage.
    pub fn rounds_run(&self) -> usize {
        self.rounds.iter().filter(|r| r.round >= 1).count()
    }

    pub fn leverage_liquidated_share(&self) -> f64 {
        if self.leverage_positions == 0 {
            return 0.0;
        }
        f64::from(self.leverage_liquidated) / f64::from(self.leverage_positions)
    }

    pub fn round(&self, round: u32) -> Option<&RoundReport> {
        self.rounds.iter().find(|r| r.round == round)
    }
}

/// One scenario's mutable state: the pool and the position book.
#[derive(Debug, Clone)]
pub struct Engine {
    config: ScenarioConfig,
    pool: PoolState,
    positions: Vec<SimPosition>,
    initial_price: f64,
    round: u32,
    rounds: Vec<RoundReport>,
    terminated: Option<TerminationReason>,
    deleverage: Vec<DeleverageOutcome>,
}

/// Seeds the pool, executes the initial dump and marks every position at the post-dump price.
pub fn init_scenario(config: &ScenarioConfig) -> Result<Engine, SimError> {
    config.validate()?;
    let mut pool = config.pool;
    if !config.initial_dump_steth.is_zero() {
        pool = exchange(&pool, Direction::StethToEth, config.initial_dump_steth)?.1;
    }
    let initial_price = probe_rate(&pool, config.price_probe_steth)?.to_f64();
    let positions = config
        .seed_positions()?
        .iter()
        .map(|s| SimPosition::from_seed(s, initial_price))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Engine {
        config: config.clone(),
        pool,
        positions,
        initial_price,
        round: 0,
        rounds: Vec::new(),
        terminated: None,
        deleverage: Vec::new(),
    })
}

/// Runs a scenario to termination.
pub fn run_simulation(config: &ScenarioConfig) -> Result<SimulationResult, SimError> {
    let mut engine = init_scenario(config)?;
    if config.deleverage_at_round0 {
        engine.deleverage_cohort()?;
    }
    while !engine.is_terminated() {
        engine.run_round()?;
    }
    Ok(engine.finish())
}

impl Engine {
    pub fn pool(&self) -> &PoolState {
        &self.pool
    }

    pub fn positions(&self) -> &[SimPosition] {
        &self.positions
    }

    pub fn initial_price(&self) -> f64 {
        self.initial_price
    }

    pub fn reports(&self) -> &[RoundReport] {
        &self.rounds
    }

    pub fn deleverage_outcomes(&self) -> &[DeleverageOutcome] {
        &self.deleverage
    }

    pub fn is_terminated(&self) -> bool {
        self.terminated.is_some()
    }

    pub fn termination(&self) -> Option<TerminationReason> {
        self.terminated
    }

    /// Current pool probe rate.
    pub fn mark_price(&self) -> Result<f64, SimError> {
        Ok(probe_rate(&self.pool, self.config.price_probe_steth)?.to_f64())
    }

    fn mark_all(&mut self, price: f64) -> Result<(), SimError> {
        for p in self.positions.iter_mut().filter(|p| p.is_live()) {
            p.mark(price)?;
        }
        Ok(())
    }

    fn ordered(&self, mut idx: Vec<usize>, order: LiquidationOrder) -> Vec<usize> {
        if order == LiquidationOrder::AscendingHf {
            idx.sort_by(|&a, &b| {
                self.positions[a]
                    .hf
                    .sort_key()
                    .total_cmp(&self.positions[b].hf.sort_key())
                    .then(a.cmp(&b))
            });
        }
        idx
    }

    /// One liquidation round; the engine terminates when nothing was liquidatable.
    pub fn run_round(&mut self) -> Result<RoundReport, SimError> {
        if self.is_terminated() {
            return Err(SimError::Engine("simulation already terminated".into()));
        }
        self.round += 1;
        let price = self.mark_price()?;
        self.mark_all(price)?;
        let candidates: Vec<usize> = (0..self.positions.len())
            .filter(|&i| self.positions[i].is_live() && self.positions[i].hf.is_liquidatable())
            .collect();
        let order = self.ordered(candidates, self.config.liquidation_order);
        let mut report = RoundReport::empty(self.round, price, self.pool);
        for &i in &order {
            match self.positions[i].cohort {
                Cohort::Leverage => report.liquidatable_leverage += 1,
                Cohort::Ordinary => report.liquidatable_ordinary += 1,
            }
        }
        if order.is_empty() {
            self.terminated = Some(TerminationReason::NoLiquidatable);
            self.rounds.push(report.clone());
            return Ok(report);
        }

        for &i in &order {
            if !self.liquidate(i, price, &mut report)? {
                report.pool_halted = true;
                break;
            }
        }
        report.pool_after = self.pool;

        if report.pool_halted && report.liquidated() == 0 {
            self.terminated = Some(TerminationReason::PoolExhausted);
        } else if self.round >= self.config.max_rounds {
            self.terminated = Some(TerminationReason::MaxRounds);
        }
        self.rounds.push(report.clone());
        Ok(report)
    }

    /// Returns `false` when the pool refused the collateral sale; the position is then untouched.
    fn liquidate(&mut self, i: usize, price: f64, report: &mut RoundReport) -> Result<bool, SimError> {
        let pos = &self.positions[i];
        let (repaid, seized) = match self.config.close_factor {
            None => (pos.debt_eth, pos.collateral_steth),
            Some(cf) => {
                let repaid = pos.debt_eth.mul_floor(to_wad(cf)?);
                let seized = to_wad(repaid.to_f64() / price)?.min(pos.collateral_steth);
                (repaid, seized)
            }
        };
        let mut received = Wad::ZERO;
        if !seized.is_zero() {
            match exchange(&self.pool, Direction::StethToEth, seized) {
                Ok((out, post)) => {
                    received = out;
                    self.pool = post;
                }
                Err(_) => return Ok(false),
            }
        }
        let pos = &mut self.positions[i];
        pos.debt_eth = pos.debt_eth.saturating_sub(repaid);
        pos.collateral_steth = pos.collateral_steth.saturating_sub(seized);
        let closed = pos.debt_eth.is_zero() || pos.collateral_steth.is_zero();
        if closed {
            pos.debt_eth = Wad::ZERO;
            pos.collateral_steth = Wad::ZERO;
            pos.liquidated = true;
            pos.hf = HealthFactor::NoDebt;
            match pos.cohort {
                Cohort::Leverage => report.liquidated_count_leverage += 1,
                Cohort::Ordinary => report.liquidated_count_ordinary += 1,
            }
        }
        report.liquidation_volume_eth = add(report.liquidation_volume_eth, seized)?;
        report.liquidation_repaid_eth = add(report.liquidation_repaid_eth, repaid)?;
        report.steth_sold = add(report.steth_sold, seized)?;
        report.eth_bought = add(report.eth_bought, received)?;
        Ok(true)
    }

    /// Round 0: every live leverage position with debt unwinds, most distressed first.
    pub fn deleverage_cohort(&mut self) -> Result<RoundReport, SimError> {
        if self.round != 0 || !self.rounds.is_empty() {
            return Err(SimError::Engine("deleveraging runs only before round 1".into()));
        }
        let price = self.mark_price()?;
        self.mark_all(price)?;
        let targets: Vec<usize> = (0..self.positions.len())
            .filter(|&i| {
                let p = &self.positions[i];
                p.is_live() && p.cohort == Cohort::Leverage && !p.debt_eth.is_zero()
            })
            .collect();
        let order = self.ordered(targets, LiquidationOrder::AscendingHf);
        let mut report = RoundReport::empty(0, price, self.pool);
        let unwind = self.config.deleverage_unwind;
        for i in order {
            let outcome = self.deleverage_position(i, unwind)?;
            report.deleverage_repaid_eth = add(report.deleverage_repaid_eth, outcome.repaid_eth)?;
            report.steth_sold = add(report.steth_sold, outcome.sold_steth)?;
            report.eth_bought = add(report.eth_bought, outcome.received_eth)?;
            self.deleverage.push(outcome);
        }
        report.pool_after = self.pool;
        self.rounds.push(report.clone());
        Ok(report)
    }

    /// Swap-repay loop for one leverage position against the live pool.
    ///
    /// Each step sells the collateral that can leave the position while it
    /// stays at health factor one; a position already below one sells the
    /// tranche whose proceeds restore it to one in a single atomic step.
    /// Tranches never exceed what the remaining debt needs.
    pub fn deleverage_position(&mut self, i: usize, unwind: DeleverageUnwind) -> Result<DeleverageOutcome, SimError> {
        let pos = self
            .positions
            .get(i)
            .ok_or_else(|| SimError::Engine(format!("no position at index {i}")))?;
        if pos.cohort != Cohort::Leverage || !pos.is_live() {
            return Err(SimError::Engine(format!("{} is not a live leverage position", pos.id)));
        }
        let mut outcome = DeleverageOutcome {
            id: pos.id.clone(),
            repaid_eth: Wad::ZERO,
            sold_steth: Wad::ZERO,
            received_eth: Wad::ZERO,
            withdrawn_steth: Wad::ZERO,
            remaining_debt: pos.debt_eth,
            complete: pos.debt_eth.is_zero(),
            steps: Vec::new(),
        };
        if pos.debt_eth.is_zero() {
            return Ok(outcome);
        }
        let lt = pos.risk.liquidation_threshold;
        let fee = self.pool.fee.to_f64();

        let reached = |pos: &SimPosition| match unwind {
            DeleverageUnwind::Full => pos.debt_eth.is_zero(),
            DeleverageUnwind::ToTargetHf { target } => pos.hf.sort_key() >= target,
        };

        for _ in 0..MAX_DELEVERAGE_STEPS {
            let price = match self.mark_price() {
                Ok(p) if p > 0.0 => p,
                _ => break,
            };
            self.positions[i].mark(price)?;
            let pos = &self.positions[i];
            if reached(pos) {
                break;
            }
            let (c, b) = (pos.collateral_steth.to_f64(), pos.debt_eth.to_f64());
            let free = c - b / (price * lt);
            let mut tranche = if free > 0.0 {
                free
            } else if 1.0 - fee - lt > 0.0 {
                (b - c * price * lt) / (price * (1.0 - fee - lt)) * TRANCHE_MARGIN
            } else {
                c
            };
            tranche = tranche.min(b / (price * (1.0 - fee)) * TRANCHE_MARGIN);
            let sell = to_wad(tranche.max(0.0))?.max(MIN_TRANCHE).min(pos.collateral_steth);
            if sell.is_zero() {
                break;
            }
            let Ok((received, post)) = exchange(&self.pool, Direction::StethToEth, sell) else { break };
            self.pool = post;
            let pos = &mut self.positions[i];
            let repaid = received.min(pos.debt_eth);
            pos.debt_eth = pos.debt_eth.saturating_sub(repaid);
            pos.collateral_steth = pos.collateral_steth.saturating_sub(sell);
            outcome.repaid_eth = add(outcome.repaid_eth, repaid)?;
            outcome.sold_steth = add(outcome.sold_steth, sell)?;
            outcome.received_eth = add(outcome.received_eth, received)?;
            let price_after = probe_rate(&self.pool, self.config.price_probe_steth)
                .map(Wad::to_f64)
                .unwrap_or(0.0);
            let pos = &mut self.positions[i];
            let hf_after = pos.mark(price_after)?;
            outcome.steps.push(DeleverageStep {
                sold_steth: sell,
                received_eth: received,
                repaid_eth: repaid,
                collateral_after: pos.collateral_steth,
                debt_after: pos.debt_eth,
                price_after,
                hf_after,
            });
            if repaid.is_zero() || (pos.collateral_steth.is_zero() && !pos.debt_eth.is_zero()) {
                break;
            }
        }

        let pos = &mut self.positions[i];
        if unwind == DeleverageUnwind::Full && pos.debt_eth.is_zero() {
            outcome.withdrawn_steth = pos.collateral_steth;
            pos.collateral_steth = Wad::ZERO;
            pos.hf = HealthFactor::NoDebt;
        }
        outcome.remaining_debt = pos.debt_eth;
        outcome.complete = reached(pos);
        Ok(outcome)
    }

    pub fn finish(self) -> SimulationResult {
        let count = |cohort: Cohort, liquidated: bool| {
            self.positions
                .iter()
                .filter(|p| p.cohort == cohort && (!liquidated || p.liquidated))
                .count() as u32
        };
        let total_liquidated_eth = self.rounds.iter().map(|r| r.liquidation_volume_eth).sum();
        SimulationResult {
            name: self.config.name.clone(),
            initial_price: self.initial_price,
            terminal_price: self.rounds.last().map_or(self.initial_price, |r| r.steth_price),
            total_liquidated_eth,
            termination_reason: self.terminated.unwrap_or(TerminationReason::MaxRounds),
            leverage_positions: count(Cohort::Leverage, false),
            leverage_liquidated: count(Cohort::Leverage, true),
            ordinary_positions: count(Cohort::Ordinary, false),
            ordinary_liquidated: count(Cohort::Ordinary, true),
            deleveraged_positions: self.deleverage.len() as u32,
            deleverage_incomplete: self.deleverage.iter().filter(|d| !d.complete).count() as u32,
            rounds: self.rounds,
        }
    }
}

fn to_wad(v: f64) -> Result<Wad, SimError> {
    Wad::from_f64(v).map_err(|e| SimError::Engine(e.to_string()))
}

fn add(a: Wad, b: Wad) -> Result<Wad, SimError> {
    a.checked_add(b)
        .ok_or_else(|| SimError::Engine("amount overflow".into()))
}
