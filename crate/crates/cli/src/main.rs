mod error;
mod manifest;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lsd_cascade::amm::{calibrate_amplification, Amplification, CalibrationBounds, PoolState};
use lsd_cascade::analytics::{
    build_schedule, health_factor, max_price_drop, multiplier_limit, net_apr, AaveRiskParams, AprBreakdown,
    HealthFactor, LeverageSchedule, MarketMode, ParamSchedule, PriceFrame, RateSet, DEFAULT_BLOCK_TIME_SECS,
};
use lsd_cascade::detect::{detect_all, parse_events, DetectConfig, Tolerance};
use lsd_cascade::sim::{
    compare_scenarios, parse_scenario, rounds_csv, run_simulation, summary_json, write_comparison_csv, ScenarioConfig,
};
use lsd_cascade::Wad;
use serde::Serialize;

use error::CliError;
use manifest::{Command, OutputSet};

const STRICT_ENV: &str = "LSD_CASCADE_STRICT";

#[derive(Parser)]
#[command(name = "lsd-cascade", version, about = "Leverage staking analytics, detection and liquidation stress tests")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Closed-form leverage schedule, health factor and APR for one position.
    Analyze(AnalyzeArgs),
    /// Classify addresses in a JSON-lines event log.
    Detect(DetectArgs),
    /// Run one liquidation scenario.
    Simulate(SimulateArgs),
    /// Run several scenarios from the same pool seed and align their rounds.
    Compare(CompareArgs),
    /// Fit the pool amplification to a post-dump probe rate.
    Calibrate(CalibrateArgs),
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Direct,
    Indirect,
}

#[derive(Args, Serialize)]
struct AnalyzeArgs {
    /// Principal in ETH, as a decimal string.
    #[arg(long)]
    principal: Wad,
    /// Number of borrow-and-restake loops after the initial stake.
    #[arg(long)]
    loops: u32,
    /// Loan-to-value ratio; required unless --block is given.
    #[arg(long, conflicts_with = "block", required_unless_present = "block")]
    ltv: Option<f64>,
    /// Liquidation threshold.
    #[arg(long, conflicts_with = "block", default_value_t = 0.81)]
    lt: f64,
    /// Take ltv and lt from the bundled parameter history at this block.
    #[arg(long)]
    block: Option<u64>,
    #[arg(long, value_enum, default_value_t = Mode::Direct)]
    mode: Mode,
    /// Secondary-market stETH price when the loops were built.
    #[arg(long, default_value_t = 1.0)]
    p_secondary: f64,
    /// Lender oracle price when the loops were built.
    #[arg(long, default_value_t = 1.0)]
    p_aave: f64,
    /// Lender oracle price to evaluate the health factor at; defaults to --p-aave.
    #[arg(long)]
    p_eval: Option<f64>,
    /// Annual staking reward rate, as a fraction.
    #[arg(long, default_value_t = 0.0)]
    staking_apr: f64,
    /// Annual supply rate on the stETH collateral.
    #[arg(long, default_value_t = 0.0)]
    deposit_apr: f64,
    /// Annual borrow rate on the ETH debt.
    #[arg(long, default_value_t = 0.0)]
    borrow_apr: f64,
    /// Print JSON instead of the table.
    #[arg(long)]
    #[serde(skip)]
    json: bool,
    /// Also write analysis.json and manifest.json here.
    #[arg(long)]
    #[serde(skip)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    /// JSON-lines event log.
    events: PathBuf,
    /// Relative matching tolerance, at most 0.05.
    #[arg(long, default_value_t = Tolerance::default().relative)]
    tolerance: f64,
    /// Absolute matching floor in tokens.
    #[arg(long, default_value_t = Tolerance::default().absolute)]
    abs_tolerance: f64,
    /// stETH price used to convert ETH interest in realized APR.
    #[arg(long, default_value_t = 1.0)]
    steth_price: f64,
    /// Seconds per block, used to annualize realized APR.
    #[arg(long, default_value_t = DEFAULT_BLOCK_TIME_SECS)]
    block_time: f64,
    /// Write detection.json, rejected_lines.json and manifest.json here instead of printing.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON file.
    scenario: PathBuf,
    /// Directory for rounds.csv, summary.json and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// Two or more scenario JSON files sharing one pool and dump.
    #[arg(required = true, num_args = 2..)]
    scenarios: Vec<PathBuf>,
    /// Directory for comparison.csv, comparison.json and manifest.json.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize)]
struct CalibrateArgs {
    /// Target probe rate after the dump.
    #[arg(long, default_value_t = 0.9052)]
    target: f64,
    #[arg(long, default_value = "265972")]
    reserve_eth: Wad,
    #[arg(long, default_value = "266966")]
    reserve_steth: Wad,
    #[arg(long, default_value = "170000")]
    dump: Wad,
    #[arg(long, default_value = "0.0004")]
    fee: Wad,
    #[arg(long, default_value = "1")]
    min_amp: Amplification,
    #[arg(long, default_value = "5000")]
    max_amp: Amplification,
    /// Largest accepted distance between achieved and target rate.
    #[arg(long, default_value_t = 0.005)]
    tolerance: f64,
    /// Write pool.json (the calibrated pre-dump pool), calibration.json and manifest.json here.
    #[arg(long)]
    #[serde(skip)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Cmd::Analyze(a) => analyze(a),
        Cmd::Detect(a) => detect(a),
        Cmd::Simulate(a) => simulate(a),
        Cmd::Compare(a) => compare(a),
        Cmd::Calibrate(a) => calibrate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn strict() -> bool {
    std::env::var(STRICT_ENV).is_ok_and(|v| v == "1")
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| CliError::io(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn stdout(text: &str) -> Result<(), CliError> {
    std::io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

#[derive(Serialize)]
struct Analysis {
    schedule: LeverageSchedule,
    ltv: f64,
    liquidation_threshold: f64,
    prices: PriceFrame,
    health_factor: HealthFactor,
    multiplier_limit: Option<f64>,
    max_price_drop: f64,
    apr: AprBreakdown,
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let params = match (args.block, args.ltv) {
        (Some(block), _) => {
            let p = ParamSchedule::aave_v2_steth()
                .at_block(block)
                .ok_or_else(|| CliError::Validation(format!("no parameters in effect at block {block}")))?;
            AaveRiskParams { effective_from_block: None, ..p }
        }
        (None, Some(ltv)) => AaveRiskParams::new(ltv, args.lt)?,
        (None, None) => return Err(CliError::Validation("--ltv or --block is required".into())),
    };
    let mode = match args.mode {
        Mode::Direct => MarketMode::Direct,
        Mode::Indirect => MarketMode::Indirect,
    };
    let prices = PriceFrame::new(args.p_secondary, args.p_aave, args.p_eval.unwrap_or(args.p_aave), mode)?;
    let schedule = build_schedule(args.principal.to_f64(), args.loops, &params, &prices)?;
    let rates = RateSet { staking_apr: args.staking_apr, deposit_apr: args.deposit_apr, borrow_apr: args.borrow_apr };
    let analysis = Analysis {
        schedule,
        ltv: params.ltv,
        liquidation_threshold: params.liquidation_threshold,
        prices,
        health_factor: health_factor(&schedule, &params, &prices),
        multiplier_limit: multiplier_limit(&params, &prices).ok(),
        max_price_drop: max_price_drop(&params),
        apr: net_apr(&schedule, &rates, &params, &prices)?,
    };
    let json = to_json(&analysis);
    if args.json {
        stdout(&json)?;
    } else {
        stdout(&analysis_table(&analysis, args.mode))?;
    }
    if let Some(dir) = &args.out_dir {
        let mut out = OutputSet::create(Command::Analyze, dir)?;
        out.input("flags", to_json(&args).as_bytes());
        out.write("analysis.json", json.as_bytes())?;
        out.finish()?;
    }
    Ok(())
}

fn analysis_table(a: &Analysis, mode: Mode) -> String {
    let s = &a.schedule;
    let limit = a.multiplier_limit.map_or_else(|| "diverges".to_string(), |l| format!("{l:.6}"));
    let mode = match mode {
        Mode::Direct => "direct",
        Mode::Indirect => "indirect",
    };
    let rows = [
        ("mode", mode.to_string()),
        ("principal (ETH)", format!("{}", s.principal)),
        ("loops", s.n_loops.to_string()),
        ("ltv / lt", format!("{} / {}", a.ltv, a.liquidation_threshold)),
        ("total invested (ETH)", format!("{:.6}", s.total_invested)),
        ("total collateral (stETH)", format!("{:.6}", s.total_collateral)),
        ("total debt (ETH)", format!("{:.6}", s.total_debt)),
        ("multiplier", format!("{:.6}", s.multiplier)),
        ("multiplier limit", limit),
        ("health factor", match a.health_factor {
            HealthFactor::Finite(v) => format!("{v:.6}"),
            HealthFactor::NoDebt => "no-debt".into(),
        }),
        ("max price drop", format!("{:.6}", a.max_price_drop)),
        ("staking apr component", format!("{:.6}", a.apr.staking_component)),
        ("deposit apr component", format!("{:.6}", a.apr.deposit_component)),
        ("borrow apr component", format!("{:.6}", a.apr.borrow_component)),
        ("net apr", format!("{:.6}", a.apr.net)),
    ];
    rows.iter().map(|(k, v)| format!("{k:<26}{v}\n")).collect()
}

fn detect(args: DetectArgs) -> Result<(), CliError> {
    let bytes = read(&args.events)?;
    let parsed = parse_events(bytes.as_slice(), strict())?;
    for e in &parsed.errors {
        eprintln!("warning: {}: line {}: {}", args.events.display(), e.line, e.message);
    }
    let config = DetectConfig {
        tolerance: Tolerance { relative: args.tolerance, absolute: args.abs_tolerance },
        steth_price_at_last_withdraw: args.steth_price,
        block_time_secs: args.block_time,
    };
    let reports = detect_all(&parsed.records, &config)?;
    let json = to_json(&reports);
    match &args.out_dir {
        None => stdout(&json),
        Some(dir) => {
            let mut out = OutputSet::create(Command::Detect, dir)?;
            out.input(args.events.display().to_string(), &bytes);
            out.write("detection.json", json.as_bytes())?;
            if !parsed.errors.is_empty() {
                out.write("rejected_lines.json", to_json(&parsed.errors).as_bytes())?;
            }
            out.finish()
        }
    }
}

fn load(path: &Path) -> Result<(Vec<u8>, ScenarioConfig), CliError> {
    let bytes = read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let mut config = parse_scenario(text).map_err(|e| match CliError::from(e) {
        CliError::Validation(m) => CliError::Validation(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if config.name.is_empty() {
        config.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    }
    Ok((bytes, config))
}

fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let (bytes, config) = load(&args.scenario)?;
    let result = run_simulation(&config)?;
    let mut out = OutputSet::create(Command::Simulate, &args.out_dir)?;
    out.input(args.scenario.display().to_string(), &bytes);
    if let Some(g) = &config.generator {
        out.seed(g.seed);
    }
    out.write("rounds.csv", rounds_csv(&result)?.as_bytes())?;
    out.write("summary.json", summary_json(&result)?.as_bytes())?;
    out.finish()?;
    stdout(&format!(
        "{}: {} rounds, {:?}, leverage liquidated {}/{}, ordinary liquidated {}/{}, volume {} ETH, price {:.6} -> {:.6}\n",
        result.name,
        result.rounds_run(),
        result.termination_reason,
        result.leverage_liquidated,
        result.leverage_positions,
        result.ordinary_liquidated,
        result.ordinary_positions,
        result.total_liquidated_eth,
        result.initial_price,
        result.terminal_price,
    ))
}

fn compare(args: CompareArgs) -> Result<(), CliError> {
    let mut out = OutputSet::create(Command::Compare, &args.out_dir)?;
    let mut configs = Vec::new();
    for path in &args.scenarios {
        let (bytes, config) = load(path)?;
        out.input(path.display().to_string(), &bytes);
        if let Some(g) = &config.generator {
            out.seed(g.seed);
        }
        if configs.iter().any(|(n, _)| *n == config.name) {
            return Err(CliError::Validation(format!("scenario name {:?} appears twice", config.name)));
        }
        configs.push((config.name.clone(), config));
    }
    let cmp = compare_scenarios(&configs)?;
    let mut csv = Vec::new();
    write_comparison_csv(&cmp, &mut csv)?;
    out.write("comparison.csv", &csv)?;
    out.write("comparison.json", to_json(&cmp).as_bytes())?;
    out.finish()?;
    let mut summary = String::new();
    for s in &cmp.scenarios {
        let r = &s.result;
        summary.push_str(&format!(
            "{}: {} rounds, liquidated {} leverage / {} ordinary, volume {} ETH, terminal price {:.6}\n",
            s.name,
            r.rounds_run(),
            r.leverage_liquidated,
            r.ordinary_liquidated,
            r.total_liquidated_eth,
            r.terminal_price
        ));
    }
    stdout(&summary)
}

fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let initial = PoolState::new(args.reserve_eth, args.reserve_steth, args.min_amp, args.fee)?;
    if args.min_amp > args.max_amp {
        return Err(CliError::Validation(format!("--min-amp {} exceeds --max-amp {}", args.min_amp, args.max_amp)));
    }
    if !(args.target > 0.0 && args.target < 1.0) {
        return Err(CliError::Validation(format!("--target {} must lie strictly between 0 and 1", args.target)));
    }
    let bounds = CalibrationBounds { min: args.min_amp, max: args.max_amp, tolerance: args.tolerance };
    let c = calibrate_amplification(args.target, &initial, args.dump, bounds)?;
    stdout(&format!(
        "amplification {}\nachieved_rate {:.7}\ntarget_rate {}\nreached {}\n",
        c.amplification, c.achieved_rate, c.target_rate, c.reached
    ))?;
    if let Some(dir) = &args.out_dir {
        let mut out = OutputSet::create(Command::Calibrate, dir)?;
        out.input("flags", to_json(&args).as_bytes());
        let pool = PoolState { amplification: c.amplification, ..initial };
        out.write("pool.json", to_json(&pool).as_bytes())?;
        out.write("calibration.json", to_json(&c).as_bytes())?;
        out.finish()?;
    }
    if !c.reached {
        return Err(CliError::Numeric(format!(
            "target {} unreachable within amplification [{}, {}]; best {} gives {:.7}",
            args.target, args.min_amp, args.max_amp, c.amplification, c.achieved_rate
        )));
    }
    Ok(())
}
