use lsd_cascade::amm::{exchange, spot_rate, Amplification, Direction, PoolState, DEFAULT_FEE};
use lsd_cascade::analytics::{AaveRiskParams, HealthFactor};
use lsd_cascade::sim::{
    compare_scenarios, init_scenario, rounds_csv, run_simulation, summary_json, Cohort, CohortGenerator,
    DeleverageUnwind, PositionSeed, ScenarioConfig, SimError, SimulationResult, TerminationReason,
};
use lsd_cascade::Wad;
use proptest::prelude::*;

fn risk() -> AaveRiskParams {
    AaveRiskParams::new(0.69, 0.81).unwrap()
}

fn seed(id: &str, cohort: Cohort, collateral: u64, debt: &str) -> PositionSeed {
    PositionSeed {
        id: id.into(),
        cohort,
        collateral_steth: Wad::from_tokens(collateral),
        debt_eth: debt.parse().unwrap(),
        risk: risk(),
    }
}

fn deep_pool() -> PoolState {
    PoolState::new(
        Wad::from_tokens(10_000_000),
        Wad::from_tokens(10_000_000),
        Amplification::from_integer(50),
        DEFAULT_FEE,
    )
    .unwrap()
}

fn explicit(pool: PoolState, dump: u64, positions: Vec<PositionSeed>) -> ScenarioConfig {
    ScenarioConfig {
        pool,
        initial_dump_steth: Wad::from_tokens(dump),
        positions,
        generator: None,
        include_ordinary_cohort: true,
        ..ScenarioConfig::stress_default(0)
    }
}

/// Small generated cohort on the fork pool, quick enough for property tests.
fn small(seed: u64, direct: u32, indirect: u32, ordinary: u32) -> ScenarioConfig {
    ScenarioConfig {
        generator: Some(CohortGenerator {
            leverage_direct: direct,
            leverage_indirect: indirect,
            ordinary,
            ..CohortGenerator::new(seed)
        }),
        include_ordinary_cohort: true,
        ..ScenarioConfig::stress_default(seed)
    }
}

fn check_invariants(config: &ScenarioConfig, result: &SimulationResult) {
    let mut pool = init_scenario(config).unwrap().pool().to_owned();
    let mut last_price = f64::INFINITY;
    for r in &result.rounds {
        assert!(r.steth_price <= last_price, "price rose in round {}", r.round);
        last_price = r.steth_price;
        assert_eq!(r.pool_after.reserve_steth, pool.reserve_steth.checked_add(r.steth_sold).unwrap());
        assert_eq!(r.pool_after.reserve_eth, pool.reserve_eth.checked_sub(r.eth_bought).unwrap());
        pool = r.pool_after;
    }
    assert_eq!(result.terminal_price, result.rounds.last().unwrap().steth_price);
    let liquidated: u32 = result.rounds.iter().map(|r| r.liquidated_count_leverage + r.liquidated_count_ordinary).sum();
    assert_eq!(liquidated, result.leverage_liquidated + result.ordinary_liquidated);
}

#[test]
fn undisturbed_pool_prices_near_par() {
    let config = explicit(deep_pool(), 0, vec![seed("a", Cohort::Ordinary, 10, "1")]);
    let engine = init_scenario(&config).unwrap();
    assert!((engine.initial_price() - (1.0 - DEFAULT_FEE.to_f64())).abs() < 1e-6);
}

#[test]
fn default_dump_lands_on_the_anchor() {
    let engine = init_scenario(&ScenarioConfig::stress_default(0)).unwrap();
    assert!((engine.initial_price() - 0.9052).abs() < 0.005, "{}", engine.initial_price());
}

#[test]
fn debt_free_position_is_never_liquidated() {
    let config = explicit(deep_pool(), 9_000_000, vec![seed("free", Cohort::Ordinary, 100, "0")]);
    let engine = init_scenario(&config).unwrap();
    assert_eq!(engine.positions()[0].hf, HealthFactor::NoDebt);
    let result = run_simulation(&config).unwrap();
    assert_eq!(result.ordinary_liquidated, 0);
    assert_eq!(result.termination_reason, TerminationReason::NoLiquidatable);
}

#[test]
fn healthy_book_stops_after_one_round() {
    let config = explicit(deep_pool(), 0, vec![seed("a", Cohort::Ordinary, 100, "50"), seed("b", Cohort::Leverage, 100, "69")]);
    let result = run_simulation(&config).unwrap();
    assert_eq!(result.rounds_run(), 1);
    assert_eq!(result.rounds[0].liquidated(), 0);
    assert_eq!(result.rounds[0].steth_price, result.initial_price);
    assert_eq!(result.termination_reason, TerminationReason::NoLiquidatable);
}

#[test]
fn one_underwater_sale_moves_the_price() {
    let config = explicit(deep_pool(), 0, vec![seed("under", Cohort::Ordinary, 100, "90")]);
    let mut engine = init_scenario(&config).unwrap();
    let before = engine.mark_price().unwrap();
    let report = engine.run_round().unwrap();
    assert_eq!(report.liquidated_count_ordinary, 1);
    assert!(engine.mark_price().unwrap() < before);
    let p = &engine.positions()[0];
    assert!(p.liquidated && p.collateral_steth.is_zero() && p.debt_eth.is_zero());
    assert_eq!(report.liquidation_volume_eth, Wad::from_tokens(100));
    assert_eq!(report.liquidation_repaid_eth, "90".parse().unwrap());
}

#[test]
fn full_unwind_traces_pool_quotes() {
    let config = explicit(deep_pool(), 0, vec![seed("lev", Cohort::Leverage, 100, "69")]);
    let mut engine = init_scenario(&config).unwrap();
    let mut pool = *engine.pool();
    let outcome = engine.deleverage_position(0, DeleverageUnwind::Full).unwrap();
    assert!(outcome.complete);
    assert_eq!(outcome.remaining_debt, Wad::ZERO);
    let p = &engine.positions()[0];
    assert_eq!(p.debt_eth, Wad::ZERO);
    assert_eq!(p.hf, HealthFactor::NoDebt);
    assert!(!outcome.steps.is_empty());

    let mut last_hf = f64::NEG_INFINITY;
    let mut collateral = Wad::from_tokens(100);
    let mut debt: Wad = "69".parse().unwrap();
    for step in &outcome.steps {
        let (received, post) = exchange(&pool, Direction::StethToEth, step.sold_steth).unwrap();
        assert_eq!(received, step.received_eth);
        pool = post;
        let repaid = received.min(debt);
        assert_eq!(step.repaid_eth, repaid);
        debt = debt.checked_sub(repaid).unwrap();
        collateral = collateral.checked_sub(step.sold_steth).unwrap();
        assert_eq!(step.debt_after, debt);
        assert_eq!(step.collateral_after, collateral);
        let hf = step.hf_after.sort_key();
        assert!(hf > last_hf);
        last_hf = hf;
    }
    assert_eq!(*engine.pool(), pool);
    assert_eq!(outcome.withdrawn_steth, collateral);
    assert!(engine.positions()[0].collateral_steth.is_zero());
}

#[test]
fn unwind_to_target_stops_at_target() {
    let config = explicit(deep_pool(), 0, vec![seed("lev", Cohort::Leverage, 100, "69")]);
    let mut engine = init_scenario(&config).unwrap();
    let outcome = engine.deleverage_position(0, DeleverageUnwind::ToTargetHf { target: 1.5 }).unwrap();
    assert!(outcome.complete);
    let p = &engine.positions()[0];
    assert!(p.hf.sort_key() >= 1.5);
    assert!(!p.debt_eth.is_zero());
}

#[test]
fn debt_free_leverage_position_unwinds_to_nothing() {
    let config = explicit(deep_pool(), 0, vec![seed("lev", Cohort::Leverage, 100, "0")]);
    let mut engine = init_scenario(&config).unwrap();
    let outcome = engine.deleverage_position(0, DeleverageUnwind::Full).unwrap();
    assert_eq!(outcome.repaid_eth, Wad::ZERO);
    assert!(outcome.steps.is_empty());
}

#[test]
fn underwater_position_unwinds_atomically() {
    let config = explicit(deep_pool(), 0, vec![seed("lev", Cohort::Leverage, 100, "82")]);
    let mut engine = init_scenario(&config).unwrap();
    assert!(engine.positions()[0].hf.is_liquidatable());
    let outcome = engine.deleverage_position(0, DeleverageUnwind::Full).unwrap();
    assert!(outcome.complete);
    assert!(!outcome.steps[0].hf_after.is_liquidatable());
}

#[test]
fn full_cohort_deleverage_survives_a_thin_pool() {
    let config = ScenarioConfig { deleverage_at_round0: true, ..ScenarioConfig::stress_default(0) };
    let result = run_simulation(&config).unwrap();
    assert!(result.deleverage_incomplete > 0);
    check_invariants(&config, &result);
}

#[test]
fn cascade_invariants_and_determinism() {
    let config = small(11, 40, 30, 60);
    let a = run_simulation(&config).unwrap();
    let b = run_simulation(&config).unwrap();
    assert_eq!(rounds_csv(&a).unwrap(), rounds_csv(&b).unwrap());
    assert_eq!(summary_json(&a).unwrap(), summary_json(&b).unwrap());
    check_invariants(&config, &a);

    let mut engine = init_scenario(&config).unwrap();
    let mut gone = std::collections::HashSet::new();
    while !engine.is_terminated() {
        let before: Vec<bool> = engine.positions().iter().map(|p| p.liquidated).collect();
        engine.run_round().unwrap();
        for (i, p) in engine.positions().iter().enumerate() {
            if p.liquidated {
                assert!(p.collateral_steth.is_zero() && p.debt_eth.is_zero());
                if before[i] {
                    assert!(gone.contains(&i));
                }
                gone.insert(i);
            }
        }
    }
}

#[test]
fn rounds_csv_layout() {
    let result = run_simulation(&small(2, 10, 10, 10)).unwrap();
    let csv = rounds_csv(&result).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "round,price,liq_count_lev,liq_count_ord,liq_volume_eth,delev_repaid_eth");
    assert_eq!(lines.count(), result.rounds.len());
    let back: SimulationResult = serde_json::from_str(&summary_json(&result).unwrap()).unwrap();
    assert_eq!(back, result);
}

#[test]
fn comparison_alignment() {
    let a = small(5, 20, 20, 20);
    let b = ScenarioConfig { include_leverage_cohort: false, ..a.clone() };
    let c = ScenarioConfig { deleverage_at_round0: true, ..a.clone() };
    let cmp = compare_scenarios(&[("a".into(), a.clone()), ("a2".into(), a.clone())]).unwrap();
    assert_eq!(cmp.scenarios[0].result.rounds, cmp.scenarios[1].result.rounds);
    for row in &cmp.rows {
        assert_eq!(row.price[0], row.price[1]);
    }

    let cmp = compare_scenarios(&[("a".into(), a.clone()), ("b".into(), b), ("c".into(), c)]).unwrap();
    assert_eq!(cmp.scenarios.len(), 3);
    let longest = cmp.scenarios.iter().map(|s| s.result.rounds.last().unwrap().round).max().unwrap();
    assert_eq!(cmp.rows.last().unwrap().round, longest);
    assert_eq!(cmp.rows.first().unwrap().round, 0);
    for row in &cmp.rows {
        assert_eq!(row.price.len(), 3);
        assert_eq!(row.price[2].is_some(), cmp.scenarios[2].result.round(row.round).is_some());
    }

    let other = ScenarioConfig { initial_dump_steth: Wad::from_tokens(1), ..a.clone() };
    assert!(matches!(
        compare_scenarios(&[("a".into(), a), ("x".into(), other)]),
        Err(SimError::SeedMismatch { .. })
    ));
}

#[test]
fn max_rounds_caps_the_run() {
    let config = ScenarioConfig { max_rounds: 1, ..small(0, 100, 50, 0) };
    let result = run_simulation(&config).unwrap();
    assert_eq!(result.rounds_run(), 1);
    assert_eq!(result.termination_reason, TerminationReason::MaxRounds);
}

#[test]
fn dump_larger_than_pool_still_prices() {
    let pool = PoolState::mainnet_fork(Amplification::from_scaled(1504));
    let (_, drained) = exchange(&pool, Direction::StethToEth, Wad::from_tokens(5_000_000)).unwrap();
    assert!(spot_rate(&drained).unwrap() < Wad::from_raw(10_000_000_000_000_000));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn leverage_never_spares_ordinary_positions(seed in 0u64..10_000, lev in 1u32..60, ord in 1u32..80) {
        let with = small(seed, lev, lev / 2, ord);
        let without = ScenarioConfig { include_leverage_cohort: false, ..with.clone() };
        let a = run_simulation(&with).unwrap();
        let b = run_simulation(&without).unwrap();
        prop_assert!(a.ordinary_liquidated >= b.ordinary_liquidated);
        prop_assert!(a.terminal_price <= b.terminal_price);
        check_invariants(&with, &a);
        check_invariants(&without, &b);
        prop_assert_eq!(a.termination_reason, TerminationReason::NoLiquidatable);
    }
}
