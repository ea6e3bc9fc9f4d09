use std::fs::File;
use std::io::BufReader;
use std::path::PathBuf;

use lsd_cascade::detect::{
    count_loops, detect_all, detect_direct, detect_indirect, parse_events, realized_apr, Asset, DetectConfig,
    DetectError, EventKind, EventRecord, Strategy, Tolerance,
};
use lsd_cascade::Wad;
use proptest::prelude::*;

fn fixture(name: &str) -> Vec<EventRecord> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    let parsed = parse_events(BufReader::new(File::open(path).unwrap()), true).unwrap();
    assert!(parsed.errors.is_empty());
    parsed.records
}

fn w(s: &str) -> Wad {
    s.parse().unwrap()
}

#[test]
fn corpus_labels() {
    let reports = detect_all(&fixture("corpus.jsonl"), &DetectConfig::default()).unwrap();
    let got: Vec<(&str, Strategy, u32)> = reports
        .iter()
        .map(|r| (&r.address[..4], r.strategy, r.n_loops))
        .collect();
    assert_eq!(
        got,
        vec![
            ("0x11", Strategy::Indirect, 2),
            ("0x12", Strategy::Indirect, 1),
            ("0xd1", Strategy::Direct, 3),
            ("0xd2", Strategy::Direct, 1),
            ("0xe1", Strategy::None, 0),
            ("0xe2", Strategy::None, 0),
            ("0xe3", Strategy::None, 0),
            ("0xe4", Strategy::None, 0),
        ]
    );
    let d1 = &reports[2];
    assert_eq!(d1.principal, w("100"));
    assert_eq!(d1.total_invested, w("249.460900"));
    assert_eq!(d1.matched_events, 10);
    let d2 = &reports[3];
    assert!((d2.realized_multiplier.unwrap() - 1.691).abs() < 1e-12);
    let i2 = &reports[1];
    assert!((i2.realized_multiplier.unwrap() - 1.69).abs() < 1e-12);
    for r in &reports[4..] {
        assert_eq!(r.realized_multiplier, None);
        assert_eq!(r.matched_events, 0);
    }
}

#[test]
fn reports_are_deterministic() {
    let a = serde_json::to_string(&detect_all(&fixture("corpus.jsonl"), &DetectConfig::default()).unwrap()).unwrap();
    let b = serde_json::to_string(&detect_all(&fixture("corpus.jsonl"), &DetectConfig::default()).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn every_kind_round_trips() {
    let records = fixture("all_kinds.jsonl");
    let kinds: Vec<EventKind> = records.iter().map(|r| r.kind).collect();
    assert_eq!(
        kinds,
        [EventKind::Stake, EventKind::Deposit, EventKind::Borrow, EventKind::Swap, EventKind::Repay, EventKind::Withdraw]
    );
    assert_eq!(records[0].amount_out.unwrap().value, w("1.499999999999999999"));
    assert_eq!(records[5].amount_in.value, Wad::from_raw(1));
    assert_eq!(records[3].amount_out.unwrap().asset, Asset::Steth);
    for (r, line) in records.iter().zip(
        std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/all_kinds.jsonl"))
            .unwrap()
            .lines(),
    ) {
        let original: serde_json::Value = serde_json::from_str(line).unwrap();
        let mut again = serde_json::to_value(r).unwrap();
        for side in ["amount_in", "amount_out"] {
            if let (Some(a), Some(b)) = (again.get_mut(side), original.get(side)) {
                if !b.is_null() {
                    let canonical: Wad = b["value"].as_str().unwrap().parse().unwrap();
                    assert_eq!(a["value"].as_str().unwrap().parse::<Wad>().unwrap(), canonical);
                    a["value"] = b["value"].clone();
                }
            }
        }
        assert_eq!(again, original);
    }
}

#[test]
fn nine_loop_whale() {
    let records = fixture("nine_loops.jsonl");
    let trace = detect_direct(&records[0].address, &records, Tolerance::default());
    assert_eq!(trace.strategy, Strategy::Direct);
    assert_eq!(trace.n_loops, 9);
    assert_eq!(count_loops(&trace), 9);
    assert_eq!(trace.principal, w("5000"));
    assert!((trace.realized_multiplier - 3.239).abs() < 1e-3, "{}", trace.realized_multiplier);
}

#[test]
fn withdraw_breaks_a_run() {
    let records = fixture("withdraw_split.jsonl");
    let trace = detect_direct(&records[0].address, &records, Tolerance::default());
    assert_eq!(trace.strategy, Strategy::Direct);
    assert_eq!(trace.n_loops, 2);
    assert_eq!(trace.matched_sequence.len(), records.len());
}

#[test]
fn realized_apr_of_a_closed_year() {
    let records = fixture("closed_year.jsonl");
    let apr = realized_apr(&records, 1.0, 12.0).unwrap();
    assert!((apr - 0.02).abs() < 1e-12, "{apr}");
    let reports = detect_all(&records, &DetectConfig::default()).unwrap();
    assert_eq!(reports[0].realized_apr, Some(apr));
    assert_eq!(reports[0].strategy, Strategy::None);

    let open: Vec<EventRecord> = records.iter().filter(|e| e.kind != EventKind::Withdraw).cloned().collect();
    assert!(matches!(realized_apr(&open, 1.0, 12.0), Err(DetectError::Domain(_))));
}

#[test]
fn shuffled_lines_parse_identically() {
    let text = std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/corpus.jsonl")).unwrap();
    let mut lines: Vec<&str> = text.lines().collect();
    lines.reverse();
    lines.rotate_left(7);
    let shuffled = lines.join("\n");
    let a = parse_events(text.as_bytes(), true).unwrap();
    let b = parse_events(shuffled.as_bytes(), true).unwrap();
    assert_eq!(a, b);
}

/// The four positive corpus addresses with every amount scaled by its own factor.
fn perturbed(factors: &[f64]) -> Vec<EventRecord> {
    let mut records: Vec<EventRecord> = fixture("corpus.jsonl")
        .into_iter()
        .filter(|r| !r.address.starts_with("0xe"))
        .collect();
    let scale = |v: Wad, f: f64| Wad::from_f64(v.to_f64() * f).unwrap().max(Wad::from_raw(1));
    for (r, f) in records.iter_mut().zip(factors.iter().cycle()) {
        r.amount_in.value = scale(r.amount_in.value, *f);
        if let Some(out) = r.amount_out.as_mut() {
            out.value = scale(out.value, *f);
        }
    }
    records
}

fn verdicts(records: &[EventRecord], tol: Tolerance) -> Vec<Strategy> {
    let mut addresses: Vec<&str> = records.iter().map(|r| r.address.as_str()).collect();
    addresses.dedup();
    addresses
        .into_iter()
        .map(|a| {
            let d = detect_direct(a, records, tol);
            if d.strategy != Strategy::None {
                d.strategy
            } else {
                detect_indirect(a, records, tol).strategy
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1_000))]

    #[test]
    fn widening_tolerance_keeps_verdicts(
        factors in prop::collection::vec(0.94f64..1.06, 7),
        a in 0.0f64..=0.05,
        b in 0.0f64..=0.05,
    ) {
        let (narrow, wide) = (Tolerance::relative(a.min(b)), Tolerance::relative(a.max(b)));
        let records = perturbed(&factors);
        for (n, w) in verdicts(&records, narrow).into_iter().zip(verdicts(&records, wide)) {
            if n != Strategy::None {
                prop_assert_eq!(n, w);
            }
        }
    }
}
