use lsd_cascade::amm::calibrate::post_dump_rate;
use lsd_cascade::amm::math::{solve_d, solve_y, MAX_ITERATIONS};
use lsd_cascade::amm::{
    calibrate_amplification, exchange, get_dy, invariant_d, spot_rate, AmmError, Amplification, CalibrationBounds,
    Direction, PoolState, DEFAULT_FEE,
};
use lsd_cascade::Wad;
use proptest::prelude::*;

const WAD: f64 = 1e18;

fn pool(eth: f64, steth: f64, amp: u64, fee: Wad) -> PoolState {
    PoolState::new(
        Wad::from_f64(eth).unwrap(),
        Wad::from_f64(steth).unwrap(),
        Amplification::from_scaled(amp),
        fee,
    )
    .unwrap()
}

/// Bisection on `4A(x+y) + D − 4AD − D³/(4xy)`, which falls from positive to negative across the root.
fn d_by_bisection(x: f64, y: f64, a: f64) -> f64 {
    let f = |d: f64| 4.0 * a * (x + y) + d - 4.0 * a * d - d * d * d / (4.0 * x * y);
    let (mut lo, mut hi) = (0.0, x + y);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn fork_reserves_match_bisection() {
    let p = pool(265_972.0, 266_966.0, 5_000, DEFAULT_FEE);
    let d = invariant_d(&p).unwrap().to_f64();
    let oracle = d_by_bisection(265_972.0, 266_966.0, 50.0);
    assert!((d - oracle).abs() <= 1e-9 * oracle, "{d} vs {oracle}");
}

#[test]
fn extreme_imbalance_matches_bisection() {
    let (x, y, amp) = (8_276_985_013_792_180u128, 612_940_436u128, 150_938u64);
    let d = solve_d(x, y, amp).unwrap();
    assert!(d.iterations <= MAX_ITERATIONS);
    let oracle = d_by_bisection(x as f64, y as f64, amp as f64 / 100.0);
    assert!((d.value as f64 - oracle).abs() <= 1e-9 * oracle, "{} vs {oracle}", d.value);
}

#[test]
fn balanced_pool_is_the_sum() {
    for amp in [100, 5_000, 500_000] {
        let p = pool(1000.0, 1000.0, amp, DEFAULT_FEE);
        assert_eq!(invariant_d(&p).unwrap(), Wad::from_tokens(2000));
    }
}

#[test]
fn tiny_trade_at_balance_pays_par_less_fee() {
    let p = pool(1e6, 1e6, 5_000, DEFAULT_FEE);
    let q = get_dy(&p, Direction::StethToEth, Wad::from_raw(1_000_000_000_000)).unwrap();
    assert!((q.effective_rate - (1.0 - DEFAULT_FEE.to_f64())).abs() < 1e-9, "{}", q.effective_rate);
}

#[test]
fn quote_and_execute_agree() {
    let p = pool(265_972.0, 266_966.0, 1_504, DEFAULT_FEE);
    let dx = Wad::from_tokens(1234);
    let q = get_dy(&p, Direction::StethToEth, dx).unwrap();
    let (out, post) = exchange(&p, Direction::StethToEth, dx).unwrap();
    assert_eq!(out, q.amount_out);
    assert_eq!(post, q.post_state);
    assert_eq!(post.reserve_steth, p.reserve_steth.checked_add(dx).unwrap());
    assert_eq!(post.reserve_eth, p.reserve_eth.checked_sub(out).unwrap());
}

#[test]
fn rejects_empty_input_and_drain() {
    let p = pool(10.0, 10.0, 5_000, DEFAULT_FEE);
    assert!(matches!(get_dy(&p, Direction::StethToEth, Wad::ZERO), Err(AmmError::NonPositiveInput)));
    let q = get_dy(&p, Direction::StethToEth, Wad::from_tokens(1_000_000_000)).unwrap();
    assert!(q.amount_out < p.reserve_eth);
}

#[test]
fn calibration_reaches_the_anchor() {
    let c = calibrate_amplification(
        0.9052,
        &PoolState::mainnet_fork(Amplification::from_integer(1)),
        Wad::from_tokens(170_000),
        CalibrationBounds::default(),
    )
    .unwrap();
    assert!(c.reached);
    assert!((c.achieved_rate - 0.9052).abs() < 0.005);
    assert_eq!(c.amplification, Amplification::from_scaled(1504));
}

#[test]
fn tiny_dump_cannot_reach_a_deep_discount() {
    let c = calibrate_amplification(
        0.5,
        &PoolState::mainnet_fork(Amplification::from_integer(1)),
        Wad::from_tokens(1),
        CalibrationBounds::default(),
    )
    .unwrap();
    assert!(!c.reached);
}

fn state() -> impl Strategy<Value = PoolState> {
    (1e-3f64..1e8, 1e-3f64..1e3, 100u64..=500_000, 0u128..=10_000_000_000_000_000).prop_map(
        |(eth, imbalance, amp, fee)| pool(eth, eth * imbalance, amp, Wad::from_raw(fee)),
    )
}

fn direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::StethToEth), Just(Direction::EthToSteth)]
}

/// Trade size as a share of the input-side reserve.
fn trade(p: &PoolState, direction: Direction, share: f64) -> Wad {
    let reserve = match direction {
        Direction::StethToEth => p.reserve_steth,
        Direction::EthToSteth => p.reserve_eth,
    };
    Wad::from_f64(reserve.to_f64() * share).unwrap().max(Wad::from_raw(1_000))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn solvers_converge(p in state()) {
        let (x, y, amp) = (p.reserve_eth.raw(), p.reserve_steth.raw(), p.amplification.scaled());
        let d = solve_d(x, y, amp).unwrap();
        prop_assert!(d.iterations <= MAX_ITERATIONS);
        let back = solve_y(x, d.value, amp).unwrap();
        prop_assert!(back.iterations <= MAX_ITERATIONS);
        let (yf, bf) = (y as f64, back.value as f64);
        prop_assert!((yf - bf).abs() <= 1e-12 * yf + 2.0, "{} vs {}", y, back.value);
    }

    #[test]
    fn solvers_converge_under_extreme_imbalance(x in 1e3f64..1e30, log_ratio in -15.0f64..15.0, amp in 100u64..=500_000) {
        let y = (x * 10f64.powf(log_ratio)).max(1.0);
        let (x, y) = (x as u128, y as u128);
        let d = solve_d(x, y, amp).unwrap();
        prop_assert!(d.iterations <= MAX_ITERATIONS);
        let back = solve_y(x, d.value, amp).unwrap();
        prop_assert!(back.iterations <= MAX_ITERATIONS);
        let (yf, bf) = (y as f64, back.value as f64);
        prop_assert!((yf - bf).abs() <= 1e-9 * yf + 2.0, "{} vs {}", y, back.value);
    }

    #[test]
    fn invariant_is_homogeneous(p in state()) {
        let scaled = PoolState {
            reserve_eth: Wad::from_raw(p.reserve_eth.raw() * 10),
            reserve_steth: Wad::from_raw(p.reserve_steth.raw() * 10),
            ..p
        };
        let d = invariant_d(&p).unwrap().raw() as f64;
        let d10 = invariant_d(&scaled).unwrap().raw() as f64;
        prop_assert!((d10 - 10.0 * d).abs() <= 1e-12 * d10 + 10.0);
    }

    #[test]
    fn round_trip_never_profits(p in state(), dir in direction(), share in 1e-9f64..10.0) {
        let dx = trade(&p, dir, share);
        let (out, mid) = exchange(&p, dir, dx).unwrap();
        prop_assume!(!out.is_zero());
        let (back, _) = exchange(&mid, dir.reverse(), out).unwrap();
        prop_assert!(back <= dx);
    }

    #[test]
    fn output_stays_below_reserve(p in state(), dir in direction(), share in 1e-9f64..1e6) {
        let dx = trade(&p, dir, share);
        let q = get_dy(&p, dir, dx).unwrap();
        let reserve_out = match dir {
            Direction::StethToEth => p.reserve_eth,
            Direction::EthToSteth => p.reserve_steth,
        };
        prop_assert!(q.amount_out < reserve_out);
    }

    #[test]
    fn fee_stays_in_the_pool(p in state(), dir in direction(), share in 1e-6f64..10.0) {
        let dx = trade(&p, dir, share);
        let (out, post) = exchange(&p, dir, dx).unwrap();
        let no_fee = PoolState { fee: Wad::ZERO, ..p };
        let (gross, _) = exchange(&no_fee, dir, dx).unwrap();
        let (r_in, r_out, p_in, p_out) = match dir {
            Direction::StethToEth => (p.reserve_steth, p.reserve_eth, post.reserve_steth, post.reserve_eth),
            Direction::EthToSteth => (p.reserve_eth, p.reserve_steth, post.reserve_eth, post.reserve_steth),
        };
        prop_assert_eq!(p_in, r_in.checked_add(dx).unwrap());
        prop_assert_eq!(p_out, r_out.checked_sub(out).unwrap());
        prop_assert_eq!(gross.checked_sub(out).unwrap(), gross.mul_ceil(p.fee));
        prop_assert!(invariant_d(&post).unwrap() >= invariant_d(&p).unwrap());
    }

    #[test]
    fn feeless_swap_conserves_invariant(p in state(), dir in direction(), share in 1e-6f64..10.0) {
        let p = PoolState { fee: Wad::ZERO, ..p };
        let dx = trade(&p, dir, share);
        let (_, post) = exchange(&p, dir, dx).unwrap();
        let (d0, d1) = (invariant_d(&p).unwrap().to_f64(), invariant_d(&post).unwrap().to_f64());
        prop_assert!(d1 >= d0);
        prop_assert!((d1 - d0) <= 1e-9 * d0 + 1e-15);
    }

    #[test]
    fn selling_steth_never_raises_the_rate(eth in 1e3f64..1e7, imbalance in 0.2f64..5.0, amp in 100u64..=500_000, share in 1e-6f64..2.0) {
        let p = pool(eth, eth * imbalance, amp, DEFAULT_FEE);
        let before = spot_rate(&p).unwrap();
        let (_, post) = exchange(&p, Direction::StethToEth, trade(&p, Direction::StethToEth, share)).unwrap();
        prop_assert!(spot_rate(&post).unwrap() <= before);
    }

    #[test]
    fn sequential_halves_show_convex_impact(eth in 1e3f64..1e7, amp in 100u64..=500_000, size in 1f64..1e5) {
        let p = pool(eth, eth, amp, DEFAULT_FEE);
        let half = Wad::from_f64(size * 0.5).unwrap();
        let (first, mid) = exchange(&p, Direction::StethToEth, half).unwrap();
        let (second, _) = exchange(&mid, Direction::StethToEth, half).unwrap();
        let whole = get_dy(&p, Direction::StethToEth, Wad::from_raw(half.raw() * 2)).unwrap().amount_out;
        prop_assert!(second <= first);
        let slack = whole.to_f64() * DEFAULT_FEE.to_f64() + 1e-15;
        prop_assert!((first.to_f64() + second.to_f64() - whole.to_f64()).abs() <= slack);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn flatter_curve_absorbs_the_dump(a in 100u64..=200_000, b in 100u64..=200_000, dump in 1u64..200_000) {
        let (lo, hi) = (a.min(b), a.max(b));
        let initial = PoolState::mainnet_fork(Amplification::from_scaled(lo));
        let dump = Wad::from_tokens(dump);
        let r_lo = post_dump_rate(&initial, Amplification::from_scaled(lo), dump).unwrap();
        let r_hi = post_dump_rate(&initial, Amplification::from_scaled(hi), dump).unwrap();
        prop_assert!(r_hi >= r_lo - 1.0 / WAD);
    }
}
