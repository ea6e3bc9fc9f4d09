use std::io::Read;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;

/// Lender risk configuration for stETH collateral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AaveRiskParams {
    /// Loan-to-value: borrowing capacity per unit of collateral value.
    pub ltv: f64,
    pub liquidation_threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_from_block: Option<u64>,
}

impl AaveRiskParams {
    pub fn new(ltv: f64, liquidation_threshold: f64) -> Result<Self, AnalyticsError> {
        let params = AaveRiskParams { ltv, liquidation_threshold, effective_from_block: None };
        params.validate()?;
        Ok(params)
    }

    /// `0 < ltv < liquidation_threshold <= 1`.
    pub fn validate(&self) -> Result<(), AnalyticsError> {
        let (ltv, lt) = (self.ltv, self.liquidation_threshold);
        if ltv > 0.0 && ltv < lt && lt <= 1.0 {
            Ok(())
        } else {
            Err(AnalyticsError::InvalidRiskParams { ltv, lt })
        }
    }
}

const AAVE_V2_STETH: &str = include_str!("../../data/aave_v2_steth_params.csv");

#[derive(Debug, Deserialize)]
struct Row {
    block: u64,
    ltv: f64,
    lt: f64,
}

/// Historical risk parameters keyed by the block they took effect at.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSchedule {
    entries: Vec<AaveRiskParams>,
}

impl ParamSchedule {
    /// The bundled Aave V2 stETH configuration history.
    pub fn aave_v2_steth() -> Self {
        Self::from_csv(AAVE_V2_STETH.as_bytes()).expect("bundled schedule is well formed")
    }

    /// Reads `block,ltv,lt` rows; rows may come in any order.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, AnalyticsError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let mut entries = Vec::new();
        for (i, row) in rdr.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| AnalyticsError::Schedule(format!("row {}: {e}", i + 1)))?;
            let params = AaveRiskParams {
                ltv: row.ltv,
                liquidation_threshold: row.lt,
                effective_from_block: Some(row.block),
            };
            params
                .validate()
                .map_err(|e| AnalyticsError::Schedule(format!("row {}: {e}", i + 1)))?;
            entries.push(params);
        }
        entries.sort_by_key(|p| p.effective_from_block);
        if entries
            .windows(2)
            .any(|w| w[0].effective_from_block == w[1].effective_from_block)
        {
            return Err(AnalyticsError::Schedule("duplicate block number".into()));
        }
        Ok(ParamSchedule { entries })
    }

    pub fn entries(&self) -> &[AaveRiskParams] {
        &self.entries
    }

    /// Latest entry in effect at `block`, if any took effect by then.
    pub fn at_block(&self, block: u64) -> Option<AaveRiskParams> {
        let idx = self
            .entries
            .partition_point(|p| p.effective_from_block.unwrap_or(0) <= block);
        idx.checked_sub(1).map(|i| self.entries[i])
    }
}
