//! Leverage staking detection over exported event logs.
//!
//! Events arrive as JSON lines, one lender/staking/pool action per line.
//! Each address's events are scanned for a (stake, deposit, borrow, stake)
//! pattern (direct) or a (swap, deposit, borrow, swap) pattern through the
//! pool (indirect), after which loops, multiplier and realized APR are
//! derived from the matched trace.

mod algo;
mod events;
mod report;

pub use algo::{count_loops, detect_direct, detect_indirect, PositionTrace, Strategy, Tolerance};
pub use events::{parse_events, Amount, Asset, EventKind, EventRecord, LineError, ParsedEvents};
pub use report::{detect_all, realized_apr, AddressReport, DetectConfig};

use thiserror::Error;

use crate::analytics::AnalyticsError;

#[derive(Debug, Error)]
pub enum DetectError {
    #[error("failed to read event log: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Schema { line: usize, message: String },
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}
