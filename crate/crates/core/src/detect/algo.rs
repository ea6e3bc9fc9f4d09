use serde::{Deserialize, Serialize};

use super::events::{Asset, EventKind, EventRecord};
use super::DetectError;
use crate::wad::Wad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Direct,
    Indirect,
    None,
}

/// Approximate equality used by the amount conditions: `|a - b| <= max(relative * max(a, b), absolute)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    pub relative: f64,
    pub absolute: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { relative: 0.005, absolute: 1e-9 }
    }
}

impl Tolerance {
    pub const MAX_RELATIVE: f64 = 0.05;

    pub fn relative(relative: f64) -> Self {
        Tolerance { relative, ..Tolerance::default() }
    }

    pub fn validate(&self) -> Result<(), DetectError> {
        if !(0.0..=Self::MAX_RELATIVE).contains(&self.relative) {
            return Err(DetectError::Domain(format!(
                "relative tolerance {} is outside [0, {}]",
                self.relative,
                Self::MAX_RELATIVE
            )));
        }
        if !(self.absolute.is_finite() && self.absolute >= 0.0) {
            return Err(DetectError::Domain(format!(
                "absolute tolerance {} must be a non-negative number",
                self.absolute
            )));
        }
        Ok(())
    }

    pub fn approx(&self, a: Wad, b: Wad) -> bool {
        let (a, b) = (a.to_f64(), b.to_f64());
        (a - b).abs() <= (self.relative * a.max(b)).max(self.absolute)
    }
}

/// Detection outcome for one address.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionTrace {
    pub address: String,
    pub strategy: Strategy,
    /// The address's events from the first matched head onward.
    pub matched_sequence: Vec<EventRecord>,
    pub n_loops: u32,
    pub principal: Wad,
    pub total_invested: Wad,
    pub realized_multiplier: f64,
}

impl PositionTrace {
    pub fn none(address: &str) -> Self {
        PositionTrace {
            address: address.to_string(),
            strategy: Strategy::None,
            matched_sequence: Vec::new(),
            n_loops: 0,
            principal: Wad::ZERO,
            total_invested: Wad::ZERO,
            realized_multiplier: 0.0,
        }
    }

    /// Block of the event that opened the matched episode.
    pub fn head_block(&self) -> Option<(u64, u64)> {
        self.matched_sequence.first().map(|e| (e.block, e.log_index))
    }
}

fn is_head(strategy: Strategy, e: &EventRecord) -> bool {
    match strategy {
        Strategy::Direct => e.kind == EventKind::Stake,
        Strategy::Indirect => {
            e.kind == EventKind::Swap
                && e.amount_in.asset == Asset::Eth
                && e.steth_out().is_some()
        }
        Strategy::None => false,
    }
}

fn of_kind(e: &EventRecord, kind: EventKind, asset: Asset) -> Option<Wad> {
    (e.kind == kind && e.amount_in.asset == asset).then_some(e.amount_in.value)
}

/// Earliest (head, deposit, borrow, head) index quadruple in lexicographic order.
pub(crate) fn find_match(
    events: &[EventRecord],
    strategy: Strategy,
    tol: Tolerance,
    from: usize,
) -> Option<[usize; 4]> {
    let n = events.len();
    for h0 in from..n {
        if !is_head(strategy, &events[h0]) {
            continue;
        }
        let Some(received) = events[h0].steth_out() else { continue };
        for d in h0 + 1..n {
            let Some(deposited) = of_kind(&events[d], EventKind::Deposit, Asset::Steth) else {
                continue;
            };
            if !tol.approx(received, deposited) {
                continue;
            }
            for b in d + 1..n {
                let Some(borrowed) = of_kind(&events[b], EventKind::Borrow, Asset::Eth) else {
                    continue;
                };
                if deposited <= borrowed {
                    continue;
                }
                for (h1, head) in events.iter().enumerate().skip(b + 1) {
                    if !is_head(strategy, head) {
                        continue;
                    }
                    if head.eth_in().is_some_and(|spent| tol.approx(borrowed, spent)) {
                        return Some([h0, d, b, h1]);
                    }
                }
            }
        }
    }
    None
}

fn detect(address: &str, events: &[EventRecord], strategy: Strategy, tol: Tolerance) -> PositionTrace {
    let own: Vec<EventRecord> = events.iter().filter(|e| e.address == address).cloned().collect();
    let Some([h0, ..]) = find_match(&own, strategy, tol, 0) else {
        return PositionTrace::none(address);
    };
    let matched_sequence = own[h0..].to_vec();
    let principal = matched_sequence[0].eth_in().unwrap_or(Wad::ZERO);
    let total_invested: Wad = matched_sequence
        .iter()
        .filter(|e| is_head(strategy, e))
        .filter_map(EventRecord::eth_in)
        .sum();
    let mut trace = PositionTrace {
        address: address.to_string(),
        strategy,
        matched_sequence,
        n_loops: 0,
        principal,
        total_invested,
        realized_multiplier: total_invested.to_f64() / principal.to_f64(),
    };
    trace.n_loops = count_loops(&trace);
    trace
}

/// Direct strategy: (stake, deposit, borrow, stake).
///
/// `events` is sorted; records of other addresses are ignored.
pub fn detect_direct(address: &str, events: &[EventRecord], tol: Tolerance) -> PositionTrace {
    detect(address, events, Strategy::Direct, tol)
}

/// Indirect strategy: (swap, deposit, borrow, swap), swaps buying stETH with ETH.
pub fn detect_indirect(address: &str, events: &[EventRecord], tol: Tolerance) -> PositionTrace {
    detect(address, events, Strategy::Indirect, tol)
}

/// Number of adjacent (head, deposit, borrow) windows in the matched sequence.
///
/// A matched trace always reports at least one loop, even when unrelated
/// events interleave the first triple.
pub fn count_loops(trace: &PositionTrace) -> u32 {
    if trace.strategy == Strategy::None {
        return 0;
    }
    let windows = trace
        .matched_sequence
        .windows(3)
        .filter(|w| {
            is_head(trace.strategy, &w[0])
                && of_kind(&w[1], EventKind::Deposit, Asset::Steth).is_some()
                && of_kind(&w[2], EventKind::Borrow, Asset::Eth).is_some()
        })
        .count() as u32;
    windows.max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detect::Amount;

    fn w(s: &str) -> Wad {
        s.parse().unwrap()
    }

    fn ev(kind: EventKind, block: u64, inp: (Asset, &str), out: Option<(Asset, &str)>) -> EventRecord {
        EventRecord {
            address: "0xa".into(),
            kind,
            block,
            log_index: 0,
            amount_in: Amount { asset: inp.0, value: w(inp.1) },
            amount_out: out.map(|(asset, v)| Amount { asset, value: w(v) }),
        }
    }

    fn stake(block: u64, eth: &str, steth: &str) -> EventRecord {
        ev(EventKind::Stake, block, (Asset::Eth, eth), Some((Asset::Steth, steth)))
    }

    fn swap(block: u64, from: (Asset, &str), to: (Asset, &str)) -> EventRecord {
        ev(EventKind::Swap, block, from, Some(to))
    }

    fn deposit(block: u64, v: &str) -> EventRecord {
        ev(EventKind::Deposit, block, (Asset::Steth, v), None)
    }

    fn borrow(block: u64, v: &str) -> EventRecord {
        ev(EventKind::Borrow, block, (Asset::Eth, v), None)
    }

    #[test]
    fn direct_single_loop() {
        let seq = [stake(1, "10", "10"), deposit(2, "10"), borrow(3, "6.9"), stake(4, "6.9", "6.9")];
        let t = detect_direct("0xa", &seq, Tolerance::default());
        assert_eq!(t.strategy, Strategy::Direct);
        assert_eq!(t.n_loops, 1);
        assert_eq!(t.principal, w("10"));
        assert_eq!(t.total_invested, w("16.9"));
        assert!((t.realized_multiplier - 1.69).abs() < 1e-12);
    }

    #[test]
    fn direct_rejects_borrow_above_deposit() {
        let seq = [stake(1, "10", "10"), deposit(2, "10"), borrow(3, "11"), stake(4, "11", "11")];
        assert_eq!(detect_direct("0xa", &seq, Tolerance::default()).strategy, Strategy::None);
    }

    #[test]
    fn direct_rejects_wrong_order() {
        let seq = [deposit(1, "10"), stake(2, "10", "10"), borrow(3, "6.9"), stake(4, "6.9", "6.9")];
        assert_eq!(detect_direct("0xa", &seq, Tolerance::default()).strategy, Strategy::None);
    }

    #[test]
    fn indirect_single_loop() {
        let seq = [
            swap(1, (Asset::Eth, "100"), (Asset::Steth, "103")),
            deposit(2, "103"),
            borrow(3, "69"),
            swap(4, (Asset::Eth, "69"), (Asset::Steth, "71")),
        ];
        let t = detect_indirect("0xa", &seq, Tolerance::default());
        assert_eq!(t.strategy, Strategy::Indirect);
        assert_eq!(t.n_loops, 1);
        assert_eq!(t.total_invested, w("169"));
        assert_eq!(detect_direct("0xa", &seq, Tolerance::default()).strategy, Strategy::None);
    }

    #[test]
    fn indirect_rejects_selling_direction() {
        let seq = [
            swap(1, (Asset::Steth, "100"), (Asset::Eth, "103")),
            deposit(2, "103"),
            borrow(3, "69"),
            swap(4, (Asset::Eth, "69"), (Asset::Steth, "71")),
        ];
        assert_eq!(detect_indirect("0xa", &seq, Tolerance::default()).strategy, Strategy::None);
    }

    #[test]
    fn indirect_rejects_borrow_mismatch() {
        let seq = [
            swap(1, (Asset::Eth, "100"), (Asset::Steth, "103")),
            deposit(2, "103"),
            borrow(3, "69"),
            swap(4, (Asset::Eth, "60"), (Asset::Steth, "62")),
        ];
        assert_eq!(detect_indirect("0xa", &seq, Tolerance::default()).strategy, Strategy::None);
    }

    #[test]
    fn later_candidate_found_after_failed_one() {
        let seq = [
            stake(1, "10", "10"),
            deposit(2, "4"),
            stake(3, "4", "4"),
            deposit(4, "4"),
            borrow(5, "3"),
            stake(6, "3", "3"),
        ];
        let t = detect_direct("0xa", &seq, Tolerance::default());
        assert_eq!(t.strategy, Strategy::Direct);
        assert_eq!(t.matched_sequence[0].block, 3);
    }

    #[test]
    fn tolerance_bounds() {
        assert!(Tolerance::relative(0.06).validate().is_err());
        assert!(Tolerance::relative(-0.01).validate().is_err());
        assert!(Tolerance::relative(0.0).validate().is_ok());
        let t = Tolerance::relative(0.0);
        assert!(t.approx(w("1"), w("1.0000000001")));
        assert!(!t.approx(w("1"), w("1.00001")));
    }
}
