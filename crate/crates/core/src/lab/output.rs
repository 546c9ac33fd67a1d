use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lab::config::{ErrorNorm, ErrorPoints};
use crate::lab::ladder::LadderReport;
use crate::lab::rates::RateFamily;

/// Header of the per-level results table.
pub const LEVELS_HEADER: [&str; 6] = [
    "seed",
    "level",
    "error",
    "mesh_term",
    "path_term",
    "integral_term",
];

/// One row per (seed, level) in sorted order; failed seeds contribute no rows.
pub fn write_levels_csv<W: Write>(report: &LadderReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(LEVELS_HEADER)?;
    for s in &report.seeds {
        for l in &s.levels {
            w.write_record([
                s.seed.to_string(),
                l.level.to_string(),
                l.error.to_string(),
                l.mesh_term.to_string(),
                l.path_term.to_string(),
                l.integral_term.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// The compact result of a ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadderSummary {
    /// Median over seeds of the fitted slope.
    pub slope: Option<f64>,
    pub theoretical: Option<f64>,
    pub threshold: Option<f64>,
    /// `None` when no rate is claimed for the driver.
    pub pass: Option<bool>,
    pub family: RateFamily,
    pub norm: ErrorNorm,
    pub error_points: ErrorPoints,
    pub monotone_fraction: f64,
    pub k_stable_fraction: f64,
    pub failed_seeds: Vec<u64>,
}

impl LadderSummary {
    pub fn of(report: &LadderReport) -> Self {
        let a = &report.aggregate;
        LadderSummary {
            slope: a.median_slope,
            theoretical: report.theoretical,
            threshold: report.threshold,
            pass: report.pass,
            family: report.family,
            norm: report.norm,
            error_points: report.error_points,
            monotone_fraction: a.monotone_fraction,
            k_stable_fraction: a.k_stable_fraction,
            failed_seeds: a.failed_seeds.clone(),
        }
    }
}

pub fn write_summary_json<W: Write>(report: &LadderReport, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, &LadderSummary::of(report))?;
    writeln!(out)?;
    Ok(())
}

/// Two whitespace-separated columns `n log2(median error)`; levels without a finite positive median are skipped.
pub fn write_plot_data<W: Write>(report: &LadderReport, mut out: W) -> Result<()> {
    writeln!(out, "# n log2_median_error")?;
    let a = &report.aggregate;
    for (n, e) in a.levels.iter().zip(&a.median_errors) {
        if *e > 0.0 && e.is_finite() {
            writeln!(out, "{n} {}", e.log2())?;
        }
    }
    Ok(())
}
