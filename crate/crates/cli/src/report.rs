//! CSV and text outputs of the commands.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use stlf_core::eval::{median, EvalReport, MedianRow, ModelKind, TaskFailure, MAX_LEAD};

use crate::error::{CliError, Result};

pub const REPORT_HEADER: [&str; 9] = [
    "series_id",
    "dataset",
    "model",
    "week",
    "horizon",
    "mape",
    "excluded_pairs",
    "train_seconds",
    "forecast_seconds",
];

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>> {
    let file = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    CliError::io(path, std::io::Error::other(e))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

/// One row per (series, window, model, horizon) that had any target pair.
pub fn write_report(path: &Path, reports: &[EvalReport], record_timing: bool) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record(REPORT_HEADER).map_err(err)?;
    for r in reports {
        let (train, forecast) = if record_timing {
            (r.train_seconds.to_string(), r.forecast_seconds.to_string())
        } else {
            (String::new(), String::new())
        };
        for k in 0..MAX_LEAD {
            if r.mape.count[k] + r.mape.excluded[k] == 0 {
                continue;
            }
            w.write_record([
                r.series_id.as_str(),
                &r.dataset,
                r.model.name(),
                &r.week.to_string(),
                &(k + 1).to_string(),
                &opt(r.mape.mape[k]),
                &r.mape.excluded[k].to_string(),
                &train,
                &forecast,
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_failures(path: &Path, failures: &[TaskFailure]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record(["series_id", "model", "week", "message"]).map_err(err)?;
    for f in failures {
        let week = f.week.map_or_else(String::new, |w| w.to_string());
        w.write_record([f.series_id.as_str(), f.model.name(), &week, &f.message])
            .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Long format for plotting median MAPE against horizon, one line per model.
pub fn write_plot(path: &Path, rows: &[MedianRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record(["dataset", "model", "horizon", "aggregation", "median_mape", "n_series"])
        .map_err(err)?;
    for r in rows {
        for (agg, v) in [("per_window", r.per_window), ("pooled", r.pooled)] {
            w.write_record([
                r.dataset.as_str(),
                r.model.name(),
                &r.horizon.to_string(),
                agg,
                &opt(v),
                &r.n_series.to_string(),
            ])
            .map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Plain-text tables of median MAPE per dataset, horizon and model.
pub fn summary_text(rows: &[MedianRow], reports: &[EvalReport], failures: usize, record_timing: bool) -> String {
    let mut by_dataset: BTreeMap<&str, BTreeMap<ModelKind, Vec<&MedianRow>>> = BTreeMap::new();
    for r in rows {
        by_dataset
            .entry(&r.dataset)
            .or_default()
            .entry(r.model)
            .or_default()
            .push(r);
    }
    let mut out = String::new();
    for (dataset, models) in &by_dataset {
        let n_series = models.values().flatten().map(|r| r.n_series).max().unwrap_or(0);
        let _ = writeln!(out, "dataset {dataset}: {n_series} series");
        for (title, pick) in [
            ("median MAPE (%) over (series, window)", (|r: &MedianRow| r.per_window) as fn(&MedianRow) -> Option<f64>),
            ("median MAPE (%) over series, windows pooled", |r: &MedianRow| r.pooled),
        ] {
            let _ = writeln!(out, "\n{title}");
            let _ = write!(out, "{:>3}", "h");
            for m in models.keys() {
                let _ = write!(out, " {:>9}", m.name());
            }
            out.push('\n');
            for k in 0..MAX_LEAD {
                let _ = write!(out, "{:>3}", k + 1);
                for rs in models.values() {
                    let v = rs.iter().find(|r| r.horizon == k + 1).and_then(|r| pick(r));
                    let _ = match v {
                        Some(v) => write!(out, " {v:>9.3}"),
                        None => write!(out, " {:>9}", "-"),
                    };
                }
                out.push('\n');
            }
        }
        if record_timing {
            let _ = writeln!(out, "\nmedian seconds per fit / per window forecast");
            for m in models.keys() {
                let pick = |f: fn(&EvalReport) -> f64| {
                    let v: Vec<f64> = reports
                        .iter()
                        .filter(|r| r.dataset == *dataset && r.model == *m)
                        .map(f)
                        .collect();
                    median(&v).unwrap_or(f64::NAN)
                };
                let _ = writeln!(
                    out,
                    "{:>9} {:>10.4} {:>10.4}",
                    m.name(),
                    pick(|r| r.train_seconds),
                    pick(|r| r.forecast_seconds)
                );
            }
        }
        out.push('\n');
    }
    let _ = writeln!(out, "failed tasks: {failures}");
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestRow {
    pub series_id: String,
    pub dataset: String,
    pub start: String,
    pub end: String,
    pub length: usize,
    pub gap_runs: usize,
    pub repaired_hours: usize,
    pub temp_repaired_hours: usize,
    pub trailing_unobserved: usize,
    pub nonpositive_hours: usize,
    pub min: f64,
    pub max: f64,
    /// `ok` or the error that stopped ingestion.
    pub status: String,
}

pub fn write_manifest(path: &Path, rows: &[ManifestRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record([
        "series_id",
        "dataset",
        "start",
        "end",
        "length",
        "gap_runs",
        "repaired_hours",
        "temp_repaired_hours",
        "trailing_unobserved",
        "nonpositive_hours",
        "min",
        "max",
        "status",
    ])
    .map_err(err)?;
    for r in rows {
        let num = |v: f64| if v.is_finite() { v.to_string() } else { String::new() };
        w.write_record([
            r.series_id.as_str(),
            &r.dataset,
            &r.start,
            &r.end,
            &r.length.to_string(),
            &r.gap_runs.to_string(),
            &r.repaired_hours.to_string(),
            &r.temp_repaired_hours.to_string(),
            &r.trailing_unobserved.to_string(),
            &r.nonpositive_hours.to_string(),
            &num(r.min),
            &num(r.max),
            &r.status,
        ])
        .map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_forecast(path: &Path, rows: &[(usize, String, f64)]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let err = |e| csv_err(path, e);
    w.write_record(["horizon", "timestamp", "forecast_kwh"]).map_err(err)?;
    for (k, ts, v) in rows {
        w.write_record([k.to_string(), ts.clone(), v.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}
