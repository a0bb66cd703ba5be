//! CSV outputs.

use std::io::Write;

use greenhaul_core::dual::IterationRecord;
use greenhaul_core::plan::Summary;
use serde::Serialize;

use crate::error::Result;

/// One summary row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub carbon_kg: f64,
    pub energy_kwh: f64,
    pub distance_km: f64,
    pub time_h: f64,
    pub feasible: bool,
    pub objective: f64,
    pub min_soc_kwh: f64,
}

impl From<&Summary> for SummaryRow {
    fn from(s: &Summary) -> Self {
        Self {
            carbon_kg: s.carbon_kg,
            energy_kwh: s.energy_kwh,
            distance_km: s.distance_km,
            time_h: s.time_h,
            feasible: s.feasible,
            objective: s.objective,
            min_soc_kwh: s.min_soc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct LogRow {
    k: usize,
    dual: f64,
    certified_dual: f64,
    max_residual: f64,
    best_feasible_objective: Option<f64>,
    gap_bound: Option<f64>,
}

/// Writes serialisable rows with a header.
pub fn write_rows<W: Write, R: Serialize>(out: W, rows: &[R]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary<W: Write>(out: W, summary: &Summary) -> Result<()> {
    write_rows(out, &[SummaryRow::from(summary)])
}

/// Iteration log: `k, dual, certified_dual, max_residual,
/// best_feasible_objective, gap_bound`.
pub fn write_iteration_log<W: Write>(out: W, log: &[IterationRecord]) -> Result<()> {
    let rows: Vec<LogRow> = log
        .iter()
        .map(|r| LogRow {
            k: r.k,
            dual: r.dual,
            certified_dual: r.certified_dual,
            max_residual: r.max_residual,
            best_feasible_objective: r.best_feasible,
            gap_bound: r.gap_bound,
        })
        .collect();
    if rows.is_empty() {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "dual", "certified_dual", "max_residual", "best_feasible_objective", "gap_bound"])?;
        w.flush().map_err(csv::Error::from)?;
        return Ok(());
    }
    write_rows(out, &rows)
}
