use std::io::Write;

use serde::Serialize;

use super::compare::Comparison;
use super::engine::SimulationResult;
use super::SimError;
use crate::wad::Wad;

#[derive(Serialize)]
struct RoundRow {
    round: u32,
    price: f64,
    liq_count_lev: u32,
    liq_count_ord: u32,
    liq_volume_eth: Wad,
    delev_repaid_eth: Wad,
}

/// Per-round CSV: `round,price,liq_count_lev,liq_count_ord,liq_volume_eth,delev_repaid_eth`.
pub fn write_rounds_csv<W: Write>(result: &SimulationResult, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    for r in &result.rounds {
        w.serialize(RoundRow {
            round: r.round,
            price: r.steth_price,
            liq_count_lev: r.liquidated_count_leverage,
            liq_count_ord: r.liquidated_count_ordinary,
            liq_volume_eth: r.liquidation_volume_eth,
            delev_repaid_eth: r.deleverage_repaid_eth,
        })?;
    }
    if result.rounds.is_empty() {
        w.write_record(["round", "price", "liq_count_lev", "liq_count_ord", "liq_volume_eth", "delev_repaid_eth"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn rounds_csv(result: &SimulationResult) -> Result<String, SimError> {
    let mut buf = Vec::new();
    write_rounds_csv(result, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is UTF-8"))
}

/// Pretty JSON of the full result with a trailing newline.
pub fn summary_json(result: &SimulationResult) -> Result<String, SimError> {
    let mut s = serde_json::to_string_pretty(result).map_err(|e| SimError::Engine(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Wide CSV with one column group per scenario; rounds a scenario never reached stay empty.
pub fn write_comparison_csv<W: Write>(cmp: &Comparison, out: W) -> Result<(), SimError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["round".to_string()];
    for s in &cmp.scenarios {
        for col in ["price", "liq_count_lev", "liq_count_ord", "liq_volume_eth"] {
            header.push(format!("{}_{col}", s.name));
        }
    }
    w.write_record(&header)?;
    fn cell<T: ToString>(v: &Option<T>) -> String {
        v.as_ref().map(T::to_string).unwrap_or_default()
    }
    for row in &cmp.rows {
        let mut rec = vec![row.round.to_string()];
        for i in 0..cmp.scenarios.len() {
            rec.push(cell(&row.price[i]));
            rec.push(cell(&row.liq_count_lev[i]));
            rec.push(cell(&row.liq_count_ord[i]));
            rec.push(cell(&row.liq_volume_eth[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
