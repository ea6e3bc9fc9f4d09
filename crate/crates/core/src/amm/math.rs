//! Two-coin StableSwap invariant in exact integer arithmetic.
//!
//! With `A = a / 100` the invariant scaled by `100 * 4xy` reads
//!
//! ```text
//! G(x, y, D) = 16a·xy(x+y) + 400·xyD − 16a·xyD − 100·D³ = 0
//! ```
//!
//! `G` is strictly decreasing in `D` for `A >= 1` and increasing in `y`
//! past the positive root, so both solvers finish Newton's method with an
//! exact sign check: `D` is the floor of the real root and `y` the ceiling,
//! which keeps every rounding error inside the pool.

use ruint::aliases::U512;

use super::{AmmError, A_PRECISION};

pub const MAX_ITERATIONS: u32 = 256;

/// Newton steps for `D` before falling back to bisection. Extreme imbalance
/// makes Newton crawl; bisection over a 128-bit bracket needs at most 129 steps.
const D_NEWTON_BUDGET: u32 = 96;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Solved {
    pub value: u128,
    /// Newton and bisection steps before the ±1 polish.
    pub iterations: u32,
}

fn u(v: u128) -> U512 {
    U512::from(v)
}

/// `(positive part, negative part)` of `G` at `d`.
fn d_residual_parts(x: U512, y: U512, a: U512, d: U512) -> (U512, U512) {
    let xy = x * y;
    let pos = U512::from(16u8) * a * xy * (x + y) + U512::from(400u16) * xy * d;
    let neg = U512::from(16u8) * a * xy * d + U512::from(100u8) * d * d * d;
    (pos, neg)
}

fn d_at_or_below_root(x: U512, y: U512, a: U512, d: U512) -> bool {
    let (pos, neg) = d_residual_parts(x, y, a, d);
    pos >= neg
}

fn y_at_or_above_root(x: U512, d: U512, a: U512, y: U512) -> bool {
    // G as a polynomial in y (x fixed): 16a·x·y² + 16a·x²·y + 400·x·D·y − 16a·D·x·y − 100·D³
    let sixteen_a = U512::from(16u8) * a;
    let pos = sixteen_a * x * y * y + sixteen_a * x * x * y + U512::from(400u16) * x * d * y;
    let neg = sixteen_a * d * x * y + U512::from(100u8) * d * d * d;
    pos >= neg
}

fn to_u128(v: U512) -> Result<u128, AmmError> {
    u128::try_from(v).map_err(|_| AmmError::Overflow)
}

/// Invariant `D` of reserves `(x, y)`, rounded down.
pub fn solve_d(x: u128, y: u128, amp: u64) -> Result<Solved, AmmError> {
    if x == 0 || y == 0 {
        return Err(AmmError::EmptyPool);
    }
    let (xu, yu, a) = (u(x), u(y), U512::from(amp));
    let prec = U512::from(A_PRECISION);
    let ann = a * U512::from(4u8);
    let sum = xu + yu;
    let two = U512::from(2u8);
    let three = U512::from(3u8);

    let mut d = sum;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < D_NEWTON_BUDGET {
        iterations += 1;
        let d_p = d * d / (two * xu) * d / (two * yu);
        let prev = d;
        let num = (ann * sum / prec + two * d_p) * d;
        let den = (ann - prec) * d / prec + three * d_p;
        d = num / den;
        if d.abs_diff(prev) <= U512::from(1u8) {
            converged = true;
            break;
        }
    }
    if !converged {
        // G(0) >= 0 and G(x + y + 1) < 0, so the floor root lies in [lo, hi).
        let (mut lo, mut hi) = (U512::ZERO, sum + U512::from(1u8));
        if !d_at_or_below_root(xu, yu, a, d) {
            hi = hi.min(d);
        }
        while hi - lo > U512::from(1u8) {
            if iterations == MAX_ITERATIONS {
                return Err(AmmError::NoConvergence { solver: "invariant", iterations });
            }
            iterations += 1;
            let mid = (lo + hi) >> 1;
            if d_at_or_below_root(xu, yu, a, mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        d = lo;
    }

    while d > U512::ZERO && !d_at_or_below_root(xu, yu, a, d) {
        d -= U512::from(1u8);
    }
    while d_at_or_below_root(xu, yu, a, d + U512::from(1u8)) {
        d += U512::from(1u8);
    }
    Ok(Solved { value: to_u128(d)?, iterations })
}

/// Smallest reserve `y` that keeps invariant `d` with the other reserve at `x`.
pub fn solve_y(x: u128, d: u128, amp: u64) -> Result<Solved, AmmError> {
    if x == 0 {
        return Err(AmmError::EmptyPool);
    }
    if d == 0 {
        return Ok(Solved { value: 0, iterations: 0 });
    }
    let (xu, du, a) = (u(x), u(d), U512::from(amp));
    let prec = U512::from(A_PRECISION);
    let ann = a * U512::from(4u8);
    let two = U512::from(2u8);

    let c = du * du / (two * xu) * du * prec / (ann * two);
    let b = xu + du * prec / ann;

    let mut y = du;
    let mut iterations = 0;
    loop {
        if iterations == MAX_ITERATIONS {
            return Err(AmmError::NoConvergence { solver: "reserve", iterations });
        }
        iterations += 1;
        let prev = y;
        let den = two * y + b;
        if den <= du {
            return Err(AmmError::NoConvergence { solver: "reserve", iterations });
        }
        y = (y * y + c) / (den - du);
        if y.abs_diff(prev) <= U512::from(1u8) {
            break;
        }
    }

    let one = U512::from(1u8);
    while !y_at_or_above_root(xu, du, a, y) {
        y += one;
    }
    while y > one && y_at_or_above_root(xu, du, a, y - one) {
        y -= one;
    }
    Ok(Solved { value: to_u128(y)?, iterations })
}
