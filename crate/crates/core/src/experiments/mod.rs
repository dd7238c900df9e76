//! Configuration, sweeps and result emission.

pub mod config;
pub mod output;
pub mod sweep;

pub use config::{default_snr_grid, load_config, parse_config, ExperimentConfig, SweepAxis, SweepSpec};
pub use output::{emit_csv, emit_plot_data, emit_svg, read_csv, CSV_HEADER};
pub use sweep::{evaluate_point, run_sweep, sweep_points, ResultRow, RunOptions, SweepOutput, SweepPoint};

use crate::error::{Error, Result};

/// Relative tolerance for comparing a CSV row against a fresh evaluation;
/// values in the CSV carry 9 significant digits.
pub const CSV_AUDIT_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSummary {
    pub checked: usize,
    pub mismatches: Vec<String>,
}

/// Re-evaluate every row of a sweep CSV under `cfg` and compare.
pub fn audit_csv(cfg: &ExperimentConfig, text: &str) -> Result<AuditSummary> {
    let rows = read_csv(text)?;
    let mut mismatches = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let fresh = evaluate_point(cfg, &row.point(), row.seed)?;
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (None, None) => true,
            (Some(x), Some(y)) => (x - y).abs() <= CSV_AUDIT_RTOL * x.abs().max(y.abs()).max(1.0e-300),
            _ => false,
        };
        let logdet_close = match (row.logdet, fresh.logdet) {
            (Some(x), Some(y)) => (x - y).abs() <= CSV_AUDIT_RTOL * x.abs().max(1.0),
            (a, b) => a.is_none() && b.is_none(),
        };
        if !close(row.peb_m, fresh.peb_m) || !logdet_close {
            mismatches.push(format!(
                "row {}: {} {} axis={} snr={}: file peb={:?} logdet={:?}, recomputed peb={:?} logdet={:?}",
                i + 2,
                row.scenario.tag(),
                row.method.tag(),
                row.axis_value,
                row.snr_db,
                row.peb_m,
                row.logdet,
                fresh.peb_m,
                fresh.logdet
            ));
        }
    }
    Ok(AuditSummary {
        checked: rows.len(),
        mismatches,
    })
}

impl AuditSummary {
    pub fn into_result(self) -> Result<usize> {
        if self.mismatches.is_empty() {
            Ok(self.checked)
        } else {
            Err(Error::Audit(format!(
                "{} of {} rows disagree:\n{}",
                self.mismatches.len(),
                self.checked,
                self.mismatches.join("\n")
            )))
        }
    }
}
