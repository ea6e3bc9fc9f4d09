use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use super::DetectError;
use crate::wad::Wad;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Asset {
    #[serde(rename = "ETH")]
    Eth,
    #[serde(rename = "stETH")]
    Steth,
}

impl fmt::Display for Asset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Asset::Eth => "ETH",
            Asset::Steth => "stETH",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    Stake,
    Deposit,
    Borrow,
    Withdraw,
    Repay,
    Swap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amount {
    pub asset: Asset,
    pub value: Wad,
}

/// One user action. Single-sided actions (deposit, borrow, withdraw, repay)
/// carry their amount in `amount_in`; stake and swap also carry `amount_out`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventRecord {
    pub address: String,
    pub kind: EventKind,
    pub block: u64,
    pub log_index: u64,
    pub amount_in: Amount,
    pub amount_out: Option<Amount>,
}

impl EventRecord {
    fn check(&self) -> Result<(), String> {
        if self.address.is_empty() {
            return Err("empty address".into());
        }
        if self.amount_in.value.is_zero() {
            return Err("amount_in must be positive".into());
        }
        if let Some(out) = &self.amount_out {
            if out.value.is_zero() {
                return Err("amount_out must be positive".into());
            }
        }
        match (self.kind, &self.amount_out) {
            (EventKind::Stake, Some(out)) => {
                if self.amount_in.asset != Asset::Eth || out.asset != Asset::Steth {
                    return Err("stake must convert ETH into stETH".into());
                }
            }
            (EventKind::Swap, Some(out)) => {
                if self.amount_in.asset == out.asset {
                    return Err("swap must exchange two different assets".into());
                }
            }
            (EventKind::Stake | EventKind::Swap, None) => {
                return Err(format!("{:?} requires amount_out", self.kind).to_lowercase());
            }
            (_, Some(_)) => {
                return Err(format!("{:?} carries a single amount", self.kind).to_lowercase());
            }
            (_, None) => {}
        }
        Ok(())
    }

    /// Chronological order, address as the tiebreak for a total order.
    pub fn sort_key(&self) -> (u64, u64, &str) {
        (self.block, self.log_index, &self.address)
    }

    /// ETH paid into a stake, or into an ETH→stETH swap.
    pub fn eth_in(&self) -> Option<Wad> {
        (self.amount_in.asset == Asset::Eth).then_some(self.amount_in.value)
    }

    /// stETH received from a stake or ETH→stETH swap.
    pub fn steth_out(&self) -> Option<Wad> {
        self.amount_out
            .filter(|a| a.asset == Asset::Steth)
            .map(|a| a.value)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LineError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedEvents {
    pub records: Vec<EventRecord>,
    /// Rejected lines (lenient mode only).
    pub errors: Vec<LineError>,
}

/// Reads a JSON-lines event log.
///
/// Lenient mode skips and reports bad lines; strict mode fails on the first.
/// Records come back sorted by `(block, log_index, address)`.
pub fn parse_events<R: BufRead>(reader: R, strict: bool) -> Result<ParsedEvents, DetectError> {
    let mut parsed = ParsedEvents::default();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let outcome = serde_json::from_str::<EventRecord>(&line)
            .map_err(|e| e.to_string())
            .and_then(|rec| rec.check().map(|()| rec))
            .and_then(|rec| {
                if seen.insert((rec.address.clone(), rec.block, rec.log_index)) {
                    Ok(rec)
                } else {
                    Err(format!(
                        "duplicate (block {}, log_index {}) for {}",
                        rec.block, rec.log_index, rec.address
                    ))
                }
            });
        match outcome {
            Ok(rec) => parsed.records.push(rec),
            Err(message) if strict => return Err(DetectError::Schema { line: line_no, message }),
            Err(message) => parsed.errors.push(LineError { line: line_no, message }),
        }
    }
    parsed.records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    Ok(parsed)
}

#[cfg(test)]
mod tests {
    use super::*;

    const STAKE: &str = r#"{"address":"0xa","kind":"stake","block":10,"log_index":0,"amount_in":{"asset":"ETH","value":"10"},"amount_out":{"asset":"stETH","value":"10"}}"#;
    const DEPOSIT: &str = r#"{"address":"0xa","kind":"deposit","block":11,"log_index":2,"amount_in":{"asset":"stETH","value":"10"},"amount_out":null}"#;

    #[test]
    fn empty_input() {
        let parsed = parse_events("".as_bytes(), true).unwrap();
        assert!(parsed.records.is_empty() && parsed.errors.is_empty());
    }

    #[test]
    fn sorted_regardless_of_line_order() {
        let a = parse_events(format!("{DEPOSIT}\n{STAKE}\n").as_bytes(), true).unwrap();
        let b = parse_events(format!("{STAKE}\n\n{DEPOSIT}\n").as_bytes(), true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records[0].kind, EventKind::Stake);
    }

    #[test]
    fn lenient_collects_line_numbers() {
        let input = format!("{STAKE}\nnot json\n{DEPOSIT}\n{STAKE}\n");
        let parsed = parse_events(input.as_bytes(), false).unwrap();
        assert_eq!(parsed.records.len(), 2);
        let lines: Vec<_> = parsed.errors.iter().map(|e| e.line).collect();
        assert_eq!(lines, vec![2, 4]);
        assert!(parsed.errors[1].message.contains("duplicate"));
    }

    #[test]
    fn strict_fails_on_first_bad_line() {
        let input = format!("{STAKE}\n{{\"address\":\"0xa\"}}\n");
        match parse_events(input.as_bytes(), true) {
            Err(DetectError::Schema { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn semantic_checks() {
        let zero = DEPOSIT.replace("\"10\"", "\"0\"");
        let bad_stake = STAKE.replace("\"stETH\"", "\"ETH\"");
        let two_sided_borrow = STAKE.replace("stake", "borrow");
        for line in [zero, bad_stake, two_sided_borrow] {
            assert!(parse_events(line.as_bytes(), true).is_err(), "{line}");
        }
    }
}
