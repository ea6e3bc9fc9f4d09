//! Leveraged liquid-staking positions: closed-form loop analytics, a StableSwap
//! pool model, on-chain loop detection and a cascading-liquidation simulator.

// `!(x > 0.0)` is the NaN-rejecting form used throughout input validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod amm;
pub mod analytics;
pub mod detect;
pub mod sim;
pub mod wad;

pub use wad::Wad;
