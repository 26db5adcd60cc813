//! Result tables.

use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::gpa::SolveReport;
use crate::io::write_atomic;
use crate::model::Instance;

/// Signed gap between two solutions, in percent of the baseline profit:
/// `100 (z_b - z_a) / |z_base|`.
pub fn adjusted_gap(z_base: f64, z_a: f64, z_b: f64) -> Result<f64> {
    if z_base == 0.0 {
        return Err(Error::UndefinedMetric("adjusted gap needs a nonzero baseline profit".into()));
    }
    Ok(100.0 * (z_b - z_a) / z_base.abs())
}

/// Percent improvement of `z` over `z_base`; `None` when the baseline is 0.
pub fn improvement_pct(z_base: f64, z: f64) -> Option<f64> {
    (z_base != 0.0).then(|| 100.0 * (z - z_base) / z_base.abs())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    /// One JSON object per line.
    Lines,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "lines" => Ok(ReportFormat::Lines),
            _ => Err(Error::validation("format", format!("expected csv or lines, got {s:?}"))),
        }
    }
}

pub const REPORT_COLUMNS: [&str; 12] = [
    "instance_id",
    "n",
    "k",
    "delta_mode",
    "bounds_mode",
    "start_id",
    "final_profit",
    "improvement_pct_vs_base",
    "iterations",
    "wall_time_s",
    "stationary",
    "bound_ii",
];

/// One row per solver run. Empty cells mean "not available".
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub instance_id: String,
    pub n: usize,
    pub k: usize,
    pub delta_mode: String,
    pub bounds_mode: String,
    pub start_id: usize,
    pub final_profit: f64,
    pub improvement_pct_vs_base: Option<f64>,
    pub iterations: usize,
    pub wall_time_s: Option<f64>,
    pub stationary: u8,
    pub bound_ii: Option<f64>,
}

/// How an instance is labelled in reports.
#[derive(Debug, Clone, PartialEq)]
pub struct RunLabel {
    pub instance_id: String,
    pub delta_mode: String,
    pub bounds_mode: String,
}

impl RunLabel {
    /// Labels inferred from the data: `const:X` when every delta agrees,
    /// and `bounded` or `none` for the bounds.
    pub fn describe(instance_id: &str, instance: &Instance) -> RunLabel {
        let d = instance.delta();
        let delta_mode = if d.iter().all(|&x| x == d[0]) {
            format!("const:{}", d[0])
        } else {
            "varied".to_string()
        };
        let bounds_mode = if instance.bounds().is_some() { "bounded" } else { "none" }.to_string();
        RunLabel { instance_id: instance_id.to_string(), delta_mode, bounds_mode }
    }
}

impl ReportRow {
    /// `base_profit` is the profit at the baseline prices. Wall time is
    /// recorded only with `timing`, so untimed reports are reproducible byte
    /// for byte.
    pub fn new(label: &RunLabel, instance: &Instance, base_profit: f64, report: &SolveReport, timing: bool) -> ReportRow {
        ReportRow {
            instance_id: label.instance_id.clone(),
            n: instance.n(),
            k: instance.k(),
            delta_mode: label.delta_mode.clone(),
            bounds_mode: label.bounds_mode.clone(),
            start_id: report.start_id,
            final_profit: report.final_profit,
            improvement_pct_vs_base: improvement_pct(base_profit, report.final_profit),
            iterations: report.iterations,
            wall_time_s: timing.then_some(report.wall_time.as_secs_f64()),
            stationary: u8::from(report.stationary),
            bound_ii: report.bound_ii,
        }
    }
}

/// Renders rows; CSV always carries the header line.
pub fn render_rows<T: Serialize>(rows: &[T], header: &[&str], format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
            w.write_record(header)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.into_inner().map_err(|e| Error::Numeric(format!("csv buffer: {e}")))
        }
        ReportFormat::Lines => {
            let mut out = Vec::new();
            for row in rows {
                serde_json::to_writer(&mut out, row).map_err(|e| Error::Numeric(format!("json row: {e}")))?;
                out.push(b'\n');
            }
            Ok(out)
        }
    }
}

pub fn write_report(rows: &[ReportRow], path: &Path, format: ReportFormat) -> Result<()> {
    write_atomic(path, &render_rows(rows, &REPORT_COLUMNS, format)?)
}

pub const SWEEP_COLUMNS: [&str; 8] = [
    "instance_id",
    "k_fraction",
    "k",
    "best_start_id",
    "best_profit",
    "improvement_pct_vs_base",
    "iterations",
    "stationary",
];

/// One point of a profit-versus-k curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub instance_id: String,
    pub k_fraction: f64,
    pub k: usize,
    pub best_start_id: Option<usize>,
    pub best_profit: f64,
    pub improvement_pct_vs_base: Option<f64>,
    pub iterations: usize,
    /// Empty for the baseline point.
    pub stationary: Option<u8>,
}

pub fn write_sweep(rows: &[SweepRow], path: &Path) -> Result<()> {
    write_atomic(path, &render_rows(rows, &SWEEP_COLUMNS, ReportFormat::Csv)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_values() {
        assert_eq!(adjusted_gap(100.0, 110.0, 110.0).unwrap(), 0.0);
        assert!((adjusted_gap(100.0, 100.0, 129.37).unwrap() - 29.37).abs() < 1e-12);
        assert_eq!(adjusted_gap(-50.0, 10.0, 5.0).unwrap(), -10.0);
        assert!(matches!(adjusted_gap(0.0, 1.0, 2.0), Err(Error::UndefinedMetric(_))));
    }

    #[test]
    fn gap_is_antisymmetric() {
        for (b, x, y) in [(3.0, 1.0, 2.0), (-7.5, 4.0, -1.0), (1e-3, 5.0, 5.5)] {
            assert_eq!(adjusted_gap(b, x, y).unwrap(), -adjusted_gap(b, y, x).unwrap());
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        let bytes = render_rows::<ReportRow>(&[], &REPORT_COLUMNS, ReportFormat::Csv).unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), REPORT_COLUMNS.join(",") + "\n");
        assert!(render_rows::<ReportRow>(&[], &REPORT_COLUMNS, ReportFormat::Lines).unwrap().is_empty());
    }

    #[test]
    fn row_fields_in_column_order() {
        let row = ReportRow {
            instance_id: "x".into(),
            n: 2,
            k: 1,
            delta_mode: "const:0.5".into(),
            bounds_mode: "none".into(),
            start_id: 3,
            final_profit: 12.5,
            improvement_pct_vs_base: Some(25.0),
            iterations: 7,
            wall_time_s: None,
            stationary: 1,
            bound_ii: None,
        };
        let text = String::from_utf8(render_rows(std::slice::from_ref(&row), &REPORT_COLUMNS, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(text.lines().nth(1).unwrap(), "x,2,1,const:0.5,none,3,12.5,25.0,7,,1,");
        let lines = String::from_utf8(render_rows(&[row], &REPORT_COLUMNS, ReportFormat::Lines).unwrap()).unwrap();
        assert!(lines.starts_with("{\"instance_id\":\"x\""));
    }
}
