//! The `ingest`, `evaluate`, `fit` and `forecast` commands.

use std::path::{Path, PathBuf};

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};
use log::{info, warn};
use stlf_core::eval::{
    aggregate_medians, benchmark, fit_model, task_seed, BenchmarkConfig, FittedModel, ModelKind, SeriesInput, View,
    MAX_LEAD,
};
use stlf_core::series::{hour_index, hour_to_datetime};
use stlf_core::{Error, HourlySeries};

use crate::config::{DataEntry, RunConfig};
use crate::data::{ingest, Ingested};
use crate::error::{CliError, Result};
use crate::model_file::{load_model, save_model, SavedModel};
use crate::report::{
    summary_text, write_failures, write_forecast, write_manifest, write_plot, write_report, ManifestRow,
};

/// Window tag used for models fitted outside the benchmark.
const OPERATIONAL_WEEK: u32 = 0;

/// Command-line overrides shared by every command.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub series: Option<String>,
    pub origin: Option<String>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut RunConfig) -> Result<()> {
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(jobs) = self.jobs {
            if jobs == 0 {
                return Err(CliError::Config("--jobs must be at least 1".into()));
            }
            cfg.jobs = Some(jobs);
        }
        if let Some(id) = &self.series {
            let entry = cfg.entry(id)?.clone();
            cfg.data = vec![entry];
        }
        Ok(())
    }
}

fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| CliError::io(path, e))
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n);
    }
    let pool = b
        .build()
        .map_err(|e| CliError::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn iso(hour: i64) -> String {
    hour_to_datetime(hour).to_rfc3339_opts(SecondsFormat::Secs, true)
}

pub fn model_path(cfg: &RunConfig, series_id: &str, kind: ModelKind) -> PathBuf {
    cfg.output_dir.join("models").join(format!("{series_id}.{}.stlfm", kind.name()))
}

pub fn forecast_path(cfg: &RunConfig, series_id: &str, kind: ModelKind) -> PathBuf {
    cfg.output_dir
        .join("forecasts")
        .join(format!("{series_id}.{}.csv", kind.name()))
}

fn manifest_row(entry: &DataEntry, result: &Result<Ingested>) -> ManifestRow {
    let mut row = ManifestRow {
        series_id: entry.id.clone(),
        dataset: entry.dataset.clone(),
        start: String::new(),
        end: String::new(),
        length: 0,
        gap_runs: 0,
        repaired_hours: 0,
        temp_repaired_hours: 0,
        trailing_unobserved: 0,
        nonpositive_hours: 0,
        min: f64::NAN,
        max: f64::NAN,
        status: "ok".into(),
    };
    match result {
        Ok(ing) => {
            let s = &ing.series;
            let v = s.values();
            row.start = iso(s.start_hour());
            row.end = iso(s.hour_at(s.len() - 1));
            row.length = s.len();
            row.gap_runs = s.meta().gap_runs;
            row.repaired_hours = s.meta().repaired.len();
            row.temp_repaired_hours = s.meta().temp_repaired;
            row.trailing_unobserved = ing.trailing_unobserved;
            row.nonpositive_hours = ing.nonpositive_hours();
            row.min = v.iter().copied().fold(f64::INFINITY, f64::min);
            row.max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        }
        Err(e) => row.status = format!("error: {e}"),
    }
    row
}

/// Parses, repairs and summarizes every series; writes `manifest.csv` and a
/// repaired long CSV per series under `cache/`.
pub fn cmd_ingest(cfg: &RunConfig) -> Result<Vec<ManifestRow>> {
    let cache = cfg.output_dir.join("cache");
    ensure_dir(&cache)?;
    let results = with_pool(cfg.jobs, || {
        use rayon::prelude::*;
        cfg.data.par_iter().map(|e| ingest(e, cfg.max_gap)).collect::<Vec<_>>()
    })?;
    let mut rows = Vec::new();
    let mut failed = 0;
    for (entry, result) in cfg.data.iter().zip(&results) {
        match result {
            Ok(ing) => {
                let path = cache.join(format!("{}.csv", entry.id));
                ing.series.save_long_csv(&path)?;
            }
            Err(e) => {
                warn!("{}: {e}", entry.id);
                failed += 1;
            }
        }
        rows.push(manifest_row(entry, result));
    }
    write_manifest(&cfg.output_dir.join("manifest.csv"), &rows)?;
    info!("ingested {} of {} series", rows.len() - failed, rows.len());
    if failed > 0 {
        return Err(CliError::PartialFailure {
            failed,
            total: rows.len(),
        });
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluateOutcome {
    pub reports: usize,
    pub report_path: PathBuf,
    pub summary_path: PathBuf,
}

/// Runs the full benchmark and writes `report.csv`, `failures.csv`,
/// `summary.txt` and `plot.csv`.
pub fn cmd_evaluate(cfg: &RunConfig) -> Result<EvaluateOutcome> {
    ensure_dir(&cfg.output_dir)?;
    let mut inputs = Vec::new();
    let mut failures = Vec::new();
    for entry in &cfg.data {
        match ingest(entry, cfg.max_gap) {
            Ok(ing) => inputs.push(SeriesInput {
                id: entry.id.clone(),
                dataset: entry.dataset.clone(),
                series: ing.series,
            }),
            Err(e) => failures.extend(cfg.models.iter().map(|&m| stlf_core::eval::TaskFailure {
                series_id: entry.id.clone(),
                model: m,
                week: None,
                message: e.to_string(),
            })),
        }
    }
    let config = BenchmarkConfig {
        seed: cfg.seed,
        fit: cfg.fit.clone(),
    };
    let out = with_pool(cfg.jobs, || benchmark(&inputs, &cfg.models, &config))?;
    failures.extend(out.failures);
    for f in &failures {
        warn!("{} {} week {:?}: {}", f.series_id, f.model, f.week, f.message);
    }
    let rows = aggregate_medians(&out.reports);
    let report_path = cfg.output_dir.join("report.csv");
    let summary_path = cfg.output_dir.join("summary.txt");
    write_report(&report_path, &out.reports, cfg.record_timing)?;
    write_failures(&cfg.output_dir.join("failures.csv"), &failures)?;
    write_plot(&cfg.output_dir.join("plot.csv"), &rows)?;
    let summary = summary_text(&rows, &out.reports, failures.len(), cfg.record_timing);
    std::fs::write(&summary_path, summary).map_err(|e| CliError::io(&summary_path, e))?;
    let total = out.reports.len() + failures.len();
    if !failures.is_empty() {
        return Err(CliError::PartialFailure {
            failed: failures.len(),
            total,
        });
    }
    Ok(EvaluateOutcome {
        reports: out.reports.len(),
        report_path,
        summary_path,
    })
}

fn fit_saved(cfg: &RunConfig, id: &str, series: &HourlySeries, kind: ModelKind, train_end: usize) -> Result<SavedModel> {
    let seed = task_seed(cfg.seed, id, OPERATIONAL_WEEK, kind);
    let model = fit_model(kind, series, train_end, &cfg.fit, seed)?;
    Ok(SavedModel {
        series_id: id.to_string(),
        start_hour: series.start_hour(),
        train_end,
        seed,
        model,
    })
}

/// Fits every configured model on all of each series and saves it under `models/`.
pub fn cmd_fit(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    ensure_dir(&cfg.output_dir.join("models"))?;
    let mut paths = Vec::new();
    for entry in &cfg.data {
        let ing = ingest(entry, cfg.max_gap)?;
        let n = ing.series.len();
        let fitted = with_pool(cfg.jobs, || {
            use rayon::prelude::*;
            cfg.models
                .par_iter()
                .map(|&kind| fit_saved(cfg, &entry.id, &ing.series, kind, n))
                .collect::<Vec<_>>()
        })?;
        for (kind, saved) in cfg.models.iter().zip(fitted) {
            let path = model_path(cfg, &entry.id, *kind);
            save_model(&path, &saved?)?;
            info!("saved {}", path.display());
            paths.push(path);
        }
    }
    Ok(paths)
}

/// Parses an ISO-8601 timestamp; naive times are UTC. Must be on the hour.
pub fn parse_origin(raw: &str) -> Result<i64> {
    let ts = DateTime::parse_from_rfc3339(raw)
        .map(|t| t.with_timezone(&Utc))
        .or_else(|_| {
            ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M"]
                .iter()
                .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
                .map(|n| n.and_utc())
                .ok_or(())
        })
        .map_err(|_| CliError::Config(format!("--origin {raw:?} is not an ISO-8601 timestamp")))?;
    hour_index(ts).ok_or_else(|| CliError::Config(format!("--origin {raw:?} is not on the hour")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub model: ModelKind,
    pub path: PathBuf,
    /// `(lead, target timestamp, value)`.
    pub rows: Vec<(usize, String, f64)>,
}

/// 24-hour forecasts from `origin` (default: the last observed hour) for
/// every configured model, from saved models or fitted on demand.
pub fn cmd_forecast(cfg: &RunConfig, series_id: Option<&str>, origin: Option<&str>) -> Result<Vec<Forecast>> {
    let entry = match series_id {
        Some(id) => cfg.entry(id)?,
        None if cfg.data.len() == 1 => &cfg.data[0],
        None => return Err(CliError::Config("several series configured: pass --series".into())),
    };
    let ing = ingest(entry, cfg.max_gap)?;
    let series = &ing.series;
    let last = series.len() - 1;
    let origin_idx = match origin {
        None => last,
        Some(raw) => {
            let hour = parse_origin(raw)?;
            match series.index_of_hour(hour) {
                Some(i) => i,
                None => {
                    return Err(Error::InsufficientData {
                        needed: (hour - series.start_hour() + 1).max(1) as usize,
                        available: series.len(),
                    }
                    .into())
                }
            }
        }
    };
    let exo = ing.exogenous();
    let view = View {
        start_hour: series.start_hour(),
        loads: series.values(),
        exo: exo.as_ref(),
    };
    ensure_dir(&cfg.output_dir.join("forecasts"))?;
    let mut out = Vec::new();
    for &kind in &cfg.models {
        let mpath = model_path(cfg, &entry.id, kind);
        let saved = if mpath.exists() {
            load_model(&mpath)?
        } else if cfg.fit_on_demand {
            info!("no saved {kind} model for {}, fitting through the origin", entry.id);
            fit_saved(cfg, &entry.id, series, kind, origin_idx + 1)?
        } else {
            return Err(CliError::io(
                &mpath,
                std::io::Error::new(std::io::ErrorKind::NotFound, "no saved model and fit_on_demand = false"),
            ));
        };
        if saved.series_id != entry.id || saved.start_hour != series.start_hour() {
            return Err(CliError::ModelMismatch {
                expected: format!("{} from {}", saved.series_id, iso(saved.start_hour)),
                got: format!("{} from {}", entry.id, iso(series.start_hour())),
            });
        }
        if origin_idx + 1 < saved.train_end {
            return Err(CliError::InSampleOrigin {
                origin: iso(series.hour_at(origin_idx)),
                train_end: iso(series.start_hour() + saved.train_end as i64 - 1),
            });
        }
        let mut model: FittedModel = saved.model;
        for t in saved.train_end..=origin_idx {
            model.observe(&view, t)?;
        }
        let values = model.forecast_path(&view, origin_idx, MAX_LEAD)?;
        let rows: Vec<_> = values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i + 1, iso(series.hour_at(origin_idx) + i as i64 + 1), v))
            .collect();
        let path = forecast_path(cfg, &entry.id, kind);
        write_forecast(&path, &rows)?;
        out.push(Forecast {
            model: kind,
            path,
            rows,
        });
    }
    Ok(out)
}
