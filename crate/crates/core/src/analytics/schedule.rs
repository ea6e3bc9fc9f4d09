use serde::{Deserialize, Serialize};

use super::{AaveRiskParams, AnalyticsError, PriceFrame};

/// Investment, collateral and debt accumulated by `n_loops` leverage loops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeverageSchedule {
    pub principal: f64,
    pub n_loops: u32,
    /// ETH staked or swapped in total, principal included.
    pub total_invested: f64,
    /// stETH supplied as collateral.
    pub total_collateral: f64,
    /// ETH borrowed.
    pub total_debt: f64,
    pub multiplier: f64,
}

/// Per-loop fractions of the generalized strategy.
///
/// `collateral_fractions[k]` is the share of loop `k+1`'s stETH supplied,
/// `borrow_fractions[k]` the share of borrowing capacity used, and
/// `restake_fractions[k]` the share of the previous loan (or of the
/// principal for `k = 0`) that gets staked at the start of loop `k+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoopPolicy {
    pub collateral_fractions: Vec<f64>,
    pub borrow_fractions: Vec<f64>,
    pub restake_fractions: Vec<f64>,
    pub n_loops: u32,
}

impl LoopPolicy {
    /// Fully reinvested loops; reduces the generalized form to the standard one.
    pub fn full(n_loops: u32) -> Self {
        let n = n_loops as usize;
        LoopPolicy {
            collateral_fractions: vec![1.0; n],
            borrow_fractions: vec![1.0; n],
            restake_fractions: vec![1.0; n + 1],
            n_loops,
        }
    }

    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let n = self.n_loops as usize;
        for (name, seq, needed) in [
            ("collateral_fractions", &self.collateral_fractions, n),
            ("borrow_fractions", &self.borrow_fractions, n),
            ("restake_fractions", &self.restake_fractions, n + 1),
        ] {
            if seq.len() < needed {
                return Err(AnalyticsError::PolicyTooShort {
                    name,
                    len: seq.len(),
                    needed,
                    loops: self.n_loops,
                });
            }
            if let Some((index, &value)) = seq
                .iter()
                .enumerate()
                .find(|(_, v)| !(0.0..=1.0).contains(*v))
            {
                return Err(AnalyticsError::FractionOutOfRange { name, index, value });
            }
        }
        Ok(())
    }
}

/// `1 + r + ... + r^(k-1)`.
///
/// Closed form through `expm1`/`ln` so ratios close to 1 keep their
/// precision; the degenerate ratio 1 is the plain term count.
fn geometric_sum(r: f64, k: u32) -> f64 {
    if k == 0 {
        return 0.0;
    }
    if r == 1.0 {
        return k as f64;
    }
    if r == 0.0 || k == 1 {
        return 1.0;
    }
    (k as f64 * r.ln()).exp_m1() / (r - 1.0)
}

fn check_inputs(principal: f64, prices: &PriceFrame) -> Result<(), AnalyticsError> {
    if !(principal.is_finite() && principal > 0.0) {
        return Err(AnalyticsError::NonPositivePrincipal(principal));
    }
    prices.validate()
}

pub fn build_schedule(
    principal: f64,
    n_loops: u32,
    params: &AaveRiskParams,
    prices: &PriceFrame,
) -> Result<LeverageSchedule, AnalyticsError> {
    check_inputs(principal, prices)?;
    let r = prices.loop_ratio(params);
    let p_m = prices.p_market();

    let total_invested = principal * geometric_sum(r, n_loops + 1);
    let total_collateral = principal / p_m * geometric_sum(r, n_loops);
    let total_debt = principal * r * geometric_sum(r, n_loops);

    Ok(LeverageSchedule {
        principal,
        n_loops,
        total_invested,
        total_collateral,
        total_debt,
        multiplier: total_invested / principal,
    })
}

pub fn build_schedule_generalized(
    principal: f64,
    policy: &LoopPolicy,
    params: &AaveRiskParams,
    prices: &PriceFrame,
) -> Result<LeverageSchedule, AnalyticsError> {
    check_inputs(principal, prices)?;
    policy.validate()?;
    let r = prices.loop_ratio(params);
    let p_m = prices.p_market();
    let n = policy.n_loops as usize;
    let (c, b, s) = (
        &policy.collateral_fractions,
        &policy.borrow_fractions,
        &policy.restake_fractions,
    );

    // Running products carried across k; at the top of iteration k (1-based)
    // `stake_prod = s_1..s_k`, `coll_prev = c_1..c_(k-1)`, `borrow_prev = b_1..b_(k-1)`
    // and `r_pow = r^(k-1)`.
    let mut invested = 0.0;
    let mut collateral = 0.0;
    let mut debt = 0.0;
    let mut stake_prod = 1.0;
    let mut coll_prev = 1.0;
    let mut borrow_prev = 1.0;
    let mut r_pow = 1.0;
    for k in 1..=n + 1 {
        stake_prod *= s[k - 1];
        invested += stake_prod * coll_prev * borrow_prev * r_pow;
        if k <= n {
            let coll_k = coll_prev * c[k - 1];
            collateral += stake_prod * coll_k * borrow_prev * r_pow / p_m;
            let borrow_k = borrow_prev * b[k - 1];
            debt += stake_prod * coll_k * borrow_k * r_pow * r;
            coll_prev = coll_k;
            borrow_prev = borrow_k;
            r_pow *= r;
        }
    }

    let total_invested = principal * invested;
    Ok(LeverageSchedule {
        principal,
        n_loops: policy.n_loops,
        total_invested,
        total_collateral: principal * collateral,
        total_debt: principal * debt,
        multiplier: total_invested / principal,
    })
}

/// Limit of the multiplier as the loop count grows without bound.
pub fn multiplier_limit(params: &AaveRiskParams, prices: &PriceFrame) -> Result<f64, AnalyticsError> {
    prices.validate()?;
    let r = prices.loop_ratio(params);
    if !(r < 1.0) {
        return Err(AnalyticsError::DivergentLeverage(r));
    }
    Ok(1.0 / (1.0 - r))
}
