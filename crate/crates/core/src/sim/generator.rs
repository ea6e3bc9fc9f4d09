use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::PositionSeed;
use super::{Cohort, SimError};
use crate::analytics::{build_schedule, AaveRiskParams, MarketMode, ParamSchedule, PriceFrame};
use crate::wad::Wad;

/// Share of single-loop positions among direct and indirect leverage stakers.
const SINGLE_LOOP_DIRECT: f64 = 0.55;
const SINGLE_LOOP_INDIRECT: f64 = 0.83;

/// Relative weights of loop counts 2..=10 among multi-loop positions.
const MULTI_LOOP_WEIGHTS_DIRECT: [u32; 9] = [26, 18, 13, 10, 8, 7, 6, 6, 6];
const MULTI_LOOP_WEIGHTS_INDIRECT: [u32; 9] = [34, 22, 14, 10, 7, 5, 2, 3, 3];

const PRINCIPAL_RANGE: (f64, f64) = (5.0, 5_000.0);
const ORDINARY_COLLATERAL_RANGE: (f64, f64) = (1.0, 2_000.0);
/// Borrowed share of the available LTV on every loop; heavy loopers borrow closer to the cap.
const BORROW_FRACTION_SINGLE: (f64, f64) = (0.60, 0.85);
const BORROW_FRACTION_MULTI: (f64, f64) = (0.95, 1.0);
/// stETH price when a leverage position was opened.
const OPEN_PRICE_DIRECT: (f64, f64) = (0.97, 1.0);
const OPEN_PRICE_INDIRECT: (f64, f64) = (0.95, 1.0);
/// Positions open uniformly in time, so a regime is drawn in proportion to
/// how long it was in force before this block.
const HORIZON_BLOCK: u64 = 17_500_000;

/// Ordinary positions' health factor at a stETH price of 1.
const ORDINARY_HF_RANGE: (f64, f64) = (1.05, 3.0);

fn default_direct() -> u32 {
    262
}

fn default_indirect() -> u32 {
    180
}

fn default_ordinary() -> u32 {
    442
}

fn default_scale() -> f64 {
    1.0
}

/// Seeded synthetic cohort.
///
/// Leverage positions are built with the closed-form loop schedule under a
/// historical (ltv, lt) pair; ordinary positions hold stETH against a single
/// ETH loan. Every draw happens regardless of `first_loop_only`, so toggling
/// it changes position sizes but never which random numbers a position gets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CohortGenerator {
    pub seed: u64,
    #[serde(default = "default_direct")]
    pub leverage_direct: u32,
    #[serde(default = "default_indirect")]
    pub leverage_indirect: u32,
    #[serde(default = "default_ordinary")]
    pub ordinary: u32,
    /// Record leverage positions as of their first borrow.
    #[serde(default)]
    pub first_loop_only: bool,
    /// Multiplies every leverage principal.
    #[serde(default = "default_scale")]
    pub leverage_scale: f64,
}

impl CohortGenerator {
    pub fn new(seed: u64) -> Self {
        CohortGenerator {
            seed,
            leverage_direct: default_direct(),
            leverage_indirect: default_indirect(),
            ordinary: default_ordinary(),
            first_loop_only: false,
            leverage_scale: default_scale(),
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.leverage_scale.is_finite() && self.leverage_scale > 0.0) {
            return Err(SimError::config(
                "/generator/leverage_scale",
                format!("{} must be a positive number", self.leverage_scale),
            ));
        }
        Ok(())
    }

    pub fn generate(&self) -> Result<Vec<PositionSeed>, SimError> {
        self.validate()?;
        let schedule = ParamSchedule::aave_v2_steth();
        let regimes = Regimes::new(schedule.entries());
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut out = Vec::new();
        for i in 0..self.leverage_direct {
            out.push(self.leverage(&mut rng, &regimes, MarketMode::Direct, format!("lev-d-{i:04}"))?);
        }
        for i in 0..self.leverage_indirect {
            out.push(self.leverage(&mut rng, &regimes, MarketMode::Indirect, format!("lev-i-{i:04}"))?);
        }
        for i in 0..self.ordinary {
            out.push(ordinary(&mut rng, &regimes, format!("ord-{i:04}"))?);
        }
        Ok(out)
    }

    fn leverage(
        &self,
        rng: &mut ChaCha8Rng,
        regimes: &Regimes,
        mode: MarketMode,
        id: String,
    ) -> Result<PositionSeed, SimError> {
        let (single, weights, open) = match mode {
            MarketMode::Direct => (SINGLE_LOOP_DIRECT, &MULTI_LOOP_WEIGHTS_DIRECT, OPEN_PRICE_DIRECT),
            MarketMode::Indirect => (SINGLE_LOOP_INDIRECT, &MULTI_LOOP_WEIGHTS_INDIRECT, OPEN_PRICE_INDIRECT),
        };
        let loop_draw: f64 = rng.random();
        let multi_draw = rng.random_range(0..weights.iter().sum::<u32>());
        let principal = log_uniform(rng, PRINCIPAL_RANGE) * self.leverage_scale;
        let regime = regimes.draw(rng);
        let borrow_draw: f64 = rng.random();
        let p_open = rng.random_range(open.0..=open.1);

        let mut n_loops = 1;
        if loop_draw >= single {
            let mut acc = 0;
            for (k, w) in weights.iter().enumerate() {
                acc += w;
                if multi_draw < acc {
                    n_loops = k as u32 + 2;
                    break;
                }
            }
        }
        let range = if n_loops == 1 { BORROW_FRACTION_SINGLE } else { BORROW_FRACTION_MULTI };
        let borrow_fraction = range.0 + (range.1 - range.0) * borrow_draw;
        if self.first_loop_only {
            n_loops = 1;
        }
        let effective = AaveRiskParams {
            ltv: regime.ltv * borrow_fraction,
            liquidation_threshold: regime.liquidation_threshold,
            effective_from_block: None,
        };
        let p_secondary = if mode == MarketMode::Indirect { p_open } else { 1.0 };
        let frame = PriceFrame::new(p_secondary, p_open, p_open, mode)?;
        let schedule = build_schedule(principal, n_loops, &effective, &frame)?;
        Ok(PositionSeed {
            id,
            cohort: Cohort::Leverage,
            collateral_steth: to_wad(schedule.total_collateral)?,
            debt_eth: to_wad(schedule.total_debt)?,
            risk: AaveRiskParams { effective_from_block: None, ..regime },
        })
    }
}

fn ordinary(rng: &mut ChaCha8Rng, regimes: &Regimes, id: String) -> Result<PositionSeed, SimError> {
    let collateral = log_uniform(rng, ORDINARY_COLLATERAL_RANGE);
    let regime = regimes.draw(rng);
    let hf_at_par = rng.random_range(ORDINARY_HF_RANGE.0..=ORDINARY_HF_RANGE.1);
    Ok(PositionSeed {
        id,
        cohort: Cohort::Ordinary,
        collateral_steth: to_wad(collateral)?,
        debt_eth: to_wad(collateral * regime.liquidation_threshold / hf_at_par)?,
        risk: AaveRiskParams { effective_from_block: None, ..regime },
    })
}

struct Regimes {
    params: Vec<AaveRiskParams>,
    /// Cumulative block counts, one per entry.
    cumulative: Vec<u64>,
}

impl Regimes {
    fn new(entries: &[AaveRiskParams]) -> Self {
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut total = 0;
        for (i, e) in entries.iter().enumerate() {
            let start = e.effective_from_block.unwrap_or(0);
            let end = entries
                .get(i + 1)
                .and_then(|n| n.effective_from_block)
                .unwrap_or(HORIZON_BLOCK)
                .max(start);
            total += end - start;
            cumulative.push(total);
        }
        Regimes { params: entries.to_vec(), cumulative }
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> AaveRiskParams {
        let total = *self.cumulative.last().expect("schedule is not empty");
        let x = rng.random_range(0..total);
        let i = self.cumulative.partition_point(|&c| c <= x);
        self.params[i]
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    (rng.random_range(lo.ln()..=hi.ln())).exp()
}

fn to_wad(v: f64) -> Result<Wad, SimError> {
    Wad::from_f64(v).map_err(|e| SimError::Engine(e.to_string()))
}
