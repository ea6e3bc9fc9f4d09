use serde::{Deserialize, Serialize};

use super::{exchange, spot_rate, AmmError, Amplification, Direction, PoolState};
use crate::wad::Wad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationBounds {
    pub min: Amplification,
    pub max: Amplification,
    /// Largest acceptable |achieved − target| for the fit to count as reached.
    pub tolerance: f64,
}

impl Default for CalibrationBounds {
    fn default() -> Self {
        CalibrationBounds {
            min: Amplification::from_integer(1),
            max: Amplification::from_integer(5_000),
            tolerance: 0.005,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub amplification: Amplification,
    pub achieved_rate: f64,
    pub target_rate: f64,
    pub reached: bool,
    pub evaluations: u32,
}

/// Spot rate after selling `dump` stETH into `initial` re-parameterized with `amp`.
pub fn post_dump_rate(initial: &PoolState, amp: Amplification, dump: Wad) -> Result<f64, AmmError> {
    let mut pool = PoolState { amplification: amp, ..*initial };
    if !dump.is_zero() {
        pool = exchange(&pool, Direction::StethToEth, dump)?.1;
    }
    Ok(spot_rate(&pool)?.to_f64())
}

/// Finds the amplification whose post-dump probe rate lands closest to `target_rate`.
///
/// The post-dump rate is nondecreasing in amplification (a flatter curve
/// absorbs the same sale with less price impact), so a bisection for the
/// smallest amplification reaching the target followed by a comparison with
/// its lower neighbour gives the best grid point.
pub fn calibrate_amplification(
    target_rate: f64,
    initial: &PoolState,
    dump: Wad,
    bounds: CalibrationBounds,
) -> Result<Calibration, AmmError> {
    initial.validate()?;
    if !(target_rate > 0.0 && target_rate < 1.0) {
        return Err(AmmError::NonPositiveInput);
    }
    let mut evaluations = 0;
    let mut rate = |scaled: u64| {
        evaluations += 1;
        post_dump_rate(initial, Amplification::from_scaled(scaled), dump)
    };

    let (mut lo, mut hi) = (bounds.min.scaled(), bounds.max.scaled());
    let rate_lo = rate(lo)?;
    let rate_hi = rate(hi)?;
    let (best, achieved) = if rate_lo >= target_rate {
        (lo, rate_lo)
    } else if rate_hi < target_rate {
        (hi, rate_hi)
    } else {
        // invariant: rate(lo) < target <= rate(hi)
        let mut rate_at_hi = rate_hi;
        let mut rate_at_lo = rate_lo;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            let r = rate(mid)?;
            if r >= target_rate {
                hi = mid;
                rate_at_hi = r;
            } else {
                lo = mid;
                rate_at_lo = r;
            }
        }
        if (rate_at_hi - target_rate).abs() <= (target_rate - rate_at_lo).abs() {
            (hi, rate_at_hi)
        } else {
            (lo, rate_at_lo)
        }
    };

    Ok(Calibration {
        amplification: Amplification::from_scaled(best),
        achieved_rate: achieved,
        target_rate,
        reached: (achieved - target_rate).abs() <= bounds.tolerance,
        evaluations,
    })
}
