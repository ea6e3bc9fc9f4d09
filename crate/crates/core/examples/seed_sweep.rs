//! Counts how many generator seeds satisfy each stress-scenario check.
//!
//! Usage: `cargo run --release -p lsd-cascade --example seed_sweep -- [seeds]`

use lsd_cascade::sim::{run_simulation, ScenarioConfig, SimulationResult};

fn run(config: &ScenarioConfig) -> SimulationResult {
    run_simulation(config).expect("stress scenario runs")
}

fn main() {
    let seeds: u64 = std::env::args().nth(1).map_or(200, |s| s.parse().expect("seed count"));
    let mut passed = [0u32; 4];
    let mut all = Vec::new();
    for seed in 0..seeds {
        let base = ScenarioConfig::stress_default(seed);
        let full = run(&base);
        let collapse = full.leverage_liquidated_share() >= 0.99 && full.terminal_price < 0.1 * full.initial_price;

        let mut first = base.clone();
        first.generator.as_mut().unwrap().first_loop_only = true;
        let amplified = full.total_liquidated_eth.to_f64() >= 5.0 * run(&first).total_liquidated_eth.to_f64();

        let mut ordinary = base.clone();
        ordinary.include_leverage_cohort = false;
        ordinary.include_ordinary_cohort = true;
        let mut mixed = ordinary.clone();
        mixed.include_leverage_cohort = true;
        let contagion = run(&mixed).ordinary_liquidated > run(&ordinary).ordinary_liquidated;

        let mut thin = base.clone();
        thin.generator.as_mut().unwrap().leverage_scale = 0.2;
        let plain = run(&thin);
        thin.deleverage_at_round0 = true;
        let unwound = run(&thin);
        let shorter = unwound.rounds_run() < plain.rounds_run()
            && unwound.round(1).is_some_and(|r| r.liquidatable_leverage == 0);

        let checks = [collapse, amplified, contagion, shorter];
        for (n, ok) in passed.iter_mut().zip(checks) {
            *n += u32::from(ok);
        }
        if checks.iter().all(|&ok| ok) {
            all.push(seed);
        }
    }
    println!("collapse {} amplification {} contagion {} deleverage {} all {} / {seeds}",
        passed[0], passed[1], passed[2], passed[3], all.len());
    println!("first passing seeds: {:?}", &all[..all.len().min(20)]);
}
