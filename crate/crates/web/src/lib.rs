//! Browser bindings for the demo page in `www/`.
//!
//! Every export returns a JSON string; the plain-Rust functions in [`api`]
//! carry the logic so they can be tested natively.

use wasm_bindgen::prelude::*;

pub mod api {
    use lsd_cascade::amm::{exchange, spot_rate, Amplification, Direction, PoolState};
    use lsd_cascade::analytics::{build_schedule, health_factor, multiplier_limit, AaveRiskParams, MarketMode, PriceFrame};
    use lsd_cascade::sim::{run_simulation, CohortGenerator, ScenarioConfig};
    use lsd_cascade::Wad;
    use serde::Serialize;

    pub const MAX_LOOPS: u32 = 60;
    pub const MAX_IMPACT_STEPS: u32 = 400;

    #[derive(Serialize)]
    struct CurvePoint {
        loops: u32,
        multiplier: f64,
        total_debt: f64,
        health_factor: Option<f64>,
    }

    #[derive(Serialize)]
    struct Curve {
        limit: Option<f64>,
        points: Vec<CurvePoint>,
    }

    fn json<T: Serialize>(v: &T) -> Result<String, String> {
        serde_json::to_string(v).map_err(|e| e.to_string())
    }

    /// Multiplier, debt and health factor for 0..=`max_loops` loops.
    pub fn leverage_curve(
        principal: f64,
        ltv: f64,
        lt: f64,
        max_loops: u32,
        p_secondary: f64,
        indirect: bool,
    ) -> Result<String, String> {
        if max_loops > MAX_LOOPS {
            return Err(format!("at most {MAX_LOOPS} loops"));
        }
        let params = AaveRiskParams::new(ltv, lt).map_err(|e| e.to_string())?;
        let mode = if indirect { MarketMode::Indirect } else { MarketMode::Direct };
        let prices = PriceFrame::new(p_secondary, 1.0, 1.0, mode).map_err(|e| e.to_string())?;
        let mut points = Vec::with_capacity(max_loops as usize + 1);
        for n in 0..=max_loops {
            let s = build_schedule(principal, n, &params, &prices).map_err(|e| e.to_string())?;
            points.push(CurvePoint {
                loops: n,
                multiplier: s.multiplier,
                total_debt: s.total_debt,
                health_factor: health_factor(&s, &params, &prices).value(),
            });
        }
        json(&Curve { limit: multiplier_limit(&params, &prices).ok(), points })
    }

    #[derive(Serialize)]
    struct ImpactPoint {
        sold_steth: f64,
        probe_rate: f64,
    }

    /// Probe rate of the fork pool as `total_steth` is sold in `steps` equal tranches.
    pub fn pool_impact(amplification: f64, total_steth: f64, steps: u32) -> Result<String, String> {
        if steps == 0 || steps > MAX_IMPACT_STEPS {
            return Err(format!("steps must lie in 1..={MAX_IMPACT_STEPS}"));
        }
        let amp: Amplification = format!("{amplification:.2}").parse()?;
        let mut pool = PoolState::mainnet_fork(amp);
        pool.validate().map_err(|e| e.to_string())?;
        let tranche = Wad::from_f64(total_steth / f64::from(steps)).map_err(|e| e.to_string())?;
        let mut points = vec![ImpactPoint { sold_steth: 0.0, probe_rate: rate(&pool)? }];
        if tranche.is_zero() {
            return json(&points);
        }
        for i in 1..=steps {
            pool = exchange(&pool, Direction::StethToEth, tranche).map_err(|e| e.to_string())?.1;
            points.push(ImpactPoint { sold_steth: tranche.to_f64() * f64::from(i), probe_rate: rate(&pool)? });
        }
        json(&points)
    }

    fn rate(pool: &PoolState) -> Result<f64, String> {
        spot_rate(pool).map(Wad::to_f64).map_err(|e| e.to_string())
    }

    #[derive(Serialize)]
    struct CascadeRound {
        round: u32,
        price: f64,
        liquidated_leverage: u32,
        liquidated_ordinary: u32,
        volume_eth: f64,
        deleverage_repaid_eth: f64,
    }

    #[derive(Serialize)]
    struct Cascade {
        initial_price: f64,
        terminal_price: f64,
        termination: String,
        leverage_liquidated: u32,
        leverage_positions: u32,
        ordinary_liquidated: u32,
        ordinary_positions: u32,
        total_liquidated_eth: f64,
        rounds: Vec<CascadeRound>,
    }

    /// The default stress scenario on a generated cohort.
    pub fn run_cascade(seed: u32, leverage_scale: f64, include_ordinary: bool, deleverage: bool) -> Result<String, String> {
        let config = ScenarioConfig {
            generator: Some(CohortGenerator { leverage_scale, ..CohortGenerator::new(u64::from(seed)) }),
            include_ordinary_cohort: include_ordinary,
            deleverage_at_round0: deleverage,
            ..ScenarioConfig::stress_default(u64::from(seed))
        };
        let r = run_simulation(&config).map_err(|e| e.to_string())?;
        json(&Cascade {
            initial_price: r.initial_price,
            terminal_price: r.terminal_price,
            termination: format!("{:?}", r.termination_reason),
            leverage_liquidated: r.leverage_liquidated,
            leverage_positions: r.leverage_positions,
            ordinary_liquidated: r.ordinary_liquidated,
            ordinary_positions: r.ordinary_positions,
            total_liquidated_eth: r.total_liquidated_eth.to_f64(),
            rounds: r
                .rounds
                .iter()
                .map(|x| CascadeRound {
                    round: x.round,
                    price: x.steth_price,
                    liquidated_leverage: x.liquidated_count_leverage,
                    liquidated_ordinary: x.liquidated_count_ordinary,
                    volume_eth: x.liquidation_volume_eth.to_f64(),
                    deleverage_repaid_eth: x.deleverage_repaid_eth.to_f64(),
                })
                .collect(),
        })
    }
}

#[wasm_bindgen]
pub fn leverage_curve(
    principal: f64,
    ltv: f64,
    lt: f64,
    max_loops: u32,
    p_secondary: f64,
    indirect: bool,
) -> Result<String, JsValue> {
    api::leverage_curve(principal, ltv, lt, max_loops, p_secondary, indirect).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn pool_impact(amplification: f64, total_steth: f64, steps: u32) -> Result<String, JsValue> {
    api::pool_impact(amplification, total_steth, steps).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn run_cascade(seed: u32, leverage_scale: f64, include_ordinary: bool, deleverage: bool) -> Result<String, JsValue> {
    api::run_cascade(seed, leverage_scale, include_ordinary, deleverage).map_err(|e| JsValue::from_str(&e))
}
