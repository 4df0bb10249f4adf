//! Rolling-origin evaluation: test windows, hourly origins without refitting,
//! per-horizon MAPE and the batch benchmark.

mod model;
mod windows;

pub use model::{fit_model, FitOptions, FittedModel, ModelKind, View, MAX_LEAD, THREE_MONTHS};
pub use windows::{make_test_windows, TestWindow, MIN_SPAN_HOURS, TEST_WEEKS};

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::narxrf::Exogenous;
use crate::seed::{derive_seed, hash_str};
use crate::series::HourlySeries;

/// Actuals with smaller magnitude are left out of MAPE.
pub const MAPE_EPSILON: f64 = 1e-3;

/// Forecasts per origin, with the actuals they target.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ForecastMatrix {
    pub origins: Vec<usize>,
    /// `values[i][k-1]` is the lead-`k` forecast from `origins[i]`.
    pub values: Vec<Vec<f64>>,
    pub actuals: Vec<Vec<f64>>,
}

impl ForecastMatrix {
    pub fn len(&self) -> usize {
        self.origins.len()
    }

    pub fn is_empty(&self) -> bool {
        self.origins.is_empty()
    }

    /// Total (origin, lead) pairs.
    pub fn n_pairs(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }
}

/// Runs `model` through window `w` of `series`: forecasts from every origin,
/// then absorbs the next actual. Returns the matrix and the model at the end.
pub fn rolling_forecast_with_state(
    model: &FittedModel,
    series: &HourlySeries,
    exo: Option<&Exogenous>,
    w: &TestWindow,
) -> Result<(ForecastMatrix, FittedModel)> {
    if w.start == 0 || w.len == 0 || w.end() > series.len() {
        return Err(Error::InvalidArgument(format!(
            "window {}..{} outside series of length {}",
            w.start,
            w.end(),
            series.len()
        )));
    }
    if series.values()[w.start - 1..w.end()].iter().any(|v| v.is_nan()) {
        return Err(Error::MissingValues);
    }
    let view = View::new(series, exo);
    let mut m = model.clone();
    let mut fm = ForecastMatrix::default();
    for t in w.origins() {
        let h = w.horizons_at(t, MAX_LEAD);
        fm.values.push(m.forecast_path(&view, t, h)?);
        fm.actuals.push(series.values()[t + 1..=t + h].to_vec());
        fm.origins.push(t);
        m.observe(&view, t + 1)?;
    }
    Ok((fm, m))
}

pub fn rolling_forecast(
    model: &FittedModel,
    series: &HourlySeries,
    exo: Option<&Exogenous>,
    w: &TestWindow,
) -> Result<ForecastMatrix> {
    rolling_forecast_with_state(model, series, exo, w).map(|(fm, _)| fm)
}

/// Per-horizon absolute-percentage-error tallies.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonMape {
    /// MAPE in percent; `None` where every pair was excluded or none exist.
    pub mape: Vec<Option<f64>>,
    /// Pairs left out because `|actual| < MAPE_EPSILON`.
    pub excluded: Vec<usize>,
    /// Sum of `|y − ŷ| / |y|` over the included pairs.
    pub ape_sum: Vec<f64>,
    pub count: Vec<usize>,
}

impl HorizonMape {
    fn from_sums(ape_sum: Vec<f64>, count: Vec<usize>, excluded: Vec<usize>) -> Self {
        let mape = ape_sum
            .iter()
            .zip(&count)
            .map(|(&s, &c)| (c > 0).then(|| 100.0 * s / c as f64))
            .collect();
        Self {
            mape,
            excluded,
            ape_sum,
            count,
        }
    }

    pub fn total_excluded(&self) -> usize {
        self.excluded.iter().sum()
    }

    /// Pools several tallies into one, as if their origins formed one matrix.
    pub fn pooled<'a>(parts: impl IntoIterator<Item = &'a HorizonMape>) -> HorizonMape {
        let mut sum = vec![0.0; MAX_LEAD];
        let mut count = vec![0; MAX_LEAD];
        let mut excluded = vec![0; MAX_LEAD];
        for p in parts {
            for k in 0..MAX_LEAD.min(p.count.len()) {
                sum[k] += p.ape_sum[k];
                count[k] += p.count[k];
                excluded[k] += p.excluded[k];
            }
        }
        HorizonMape::from_sums(sum, count, excluded)
    }
}

pub fn mape_per_horizon(fm: &ForecastMatrix) -> Result<HorizonMape> {
    if fm.is_empty() {
        return Err(Error::EmptyForecastMatrix);
    }
    let mut sum = vec![0.0; MAX_LEAD];
    let mut count = vec![0; MAX_LEAD];
    let mut excluded = vec![0; MAX_LEAD];
    for (f, y) in fm.values.iter().zip(&fm.actuals) {
        if f.len() != y.len() {
            return Err(Error::DimensionMismatch {
                expected: y.len(),
                got: f.len(),
            });
        }
        for (k, (&f, &y)) in f.iter().zip(y).enumerate().take(MAX_LEAD) {
            if y.abs() < MAPE_EPSILON {
                excluded[k] += 1;
            } else {
                sum[k] += (y - f).abs() / y.abs();
                count[k] += 1;
            }
        }
    }
    Ok(HorizonMape::from_sums(sum, count, excluded))
}

/// One series entering the benchmark.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesInput {
    pub id: String,
    pub dataset: String,
    pub series: HourlySeries,
}

/// Outcome of one (series, window, model) task.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub series_id: String,
    pub dataset: String,
    pub model: ModelKind,
    pub week: u32,
    pub mape: HorizonMape,
    pub train_seconds: f64,
    pub forecast_seconds: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskFailure {
    pub series_id: String,
    pub model: ModelKind,
    /// `None` when the series itself could not be windowed.
    pub week: Option<u32>,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkOutput {
    /// In (series, window, model) order regardless of scheduling.
    pub reports: Vec<EvalReport>,
    pub failures: Vec<TaskFailure>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchmarkConfig {
    pub seed: u64,
    pub fit: FitOptions,
}

/// Seed of one task, independent of task order and worker count.
pub fn task_seed(master: u64, series_id: &str, week: u32, model: ModelKind) -> u64 {
    derive_seed(master, &[hash_str(series_id), u64::from(week), u64::from(model.code())])
}

fn run_task(
    input: &SeriesInput,
    exo: Option<&Exogenous>,
    w: &TestWindow,
    kind: ModelKind,
    config: &BenchmarkConfig,
) -> Result<EvalReport> {
    let seed = task_seed(config.seed, &input.id, w.week, kind);
    let t0 = Instant::now();
    let model = fit_model(kind, &input.series, w.start, &config.fit, seed)?;
    let train_seconds = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let fm = rolling_forecast(&model, &input.series, exo, w)?;
    let forecast_seconds = t1.elapsed().as_secs_f64();
    Ok(EvalReport {
        series_id: input.id.clone(),
        dataset: input.dataset.clone(),
        model: kind,
        week: w.week,
        mape: mape_per_horizon(&fm)?,
        train_seconds,
        forecast_seconds,
    })
}

/// Evaluates every model on every test window of every series. Tasks run on
/// the current rayon pool; failures are collected, not propagated.
pub fn benchmark(inputs: &[SeriesInput], models: &[ModelKind], config: &BenchmarkConfig) -> BenchmarkOutput {
    let mut out = BenchmarkOutput::default();
    let mut tasks = Vec::new();
    let mut exos = Vec::with_capacity(inputs.len());
    for (i, input) in inputs.iter().enumerate() {
        exos.push(Exogenous::from_series(&input.series).ok());
        match make_test_windows(&input.series) {
            Ok(ws) => {
                for w in ws {
                    tasks.extend(models.iter().map(|&m| (i, w, m)));
                }
            }
            Err(e) => out.failures.extend(models.iter().map(|&m| TaskFailure {
                series_id: input.id.clone(),
                model: m,
                week: None,
                message: e.to_string(),
            })),
        }
    }
    let results: Vec<_> = tasks
        .par_iter()
        .map(|&(i, w, m)| run_task(&inputs[i], exos[i].as_ref(), &w, m, config))
        .collect();
    for ((i, w, m), r) in tasks.into_iter().zip(results) {
        match r {
            Ok(rep) => out.reports.push(rep),
            Err(e) => out.failures.push(TaskFailure {
                series_id: inputs[i].id.clone(),
                model: m,
                week: Some(w.week),
                message: e.to_string(),
            }),
        }
    }
    out
}

/// Median of the defined values; the mean of the two middle ones for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Cross-series medians for one (dataset, model, horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct MedianRow {
    pub dataset: String,
    pub model: ModelKind,
    pub horizon: usize,
    /// Median over every (series, window) MAPE.
    pub per_window: Option<f64>,
    /// Median over series of the MAPE pooled across that series' windows.
    pub pooled: Option<f64>,
    pub n_series: usize,
}

/// Aggregates reports into median MAPEs, sorted by dataset, model and horizon.
pub fn aggregate_medians(reports: &[EvalReport]) -> Vec<MedianRow> {
    use std::collections::BTreeMap;
    let mut groups: BTreeMap<(&str, ModelKind), BTreeMap<&str, Vec<&HorizonMape>>> = BTreeMap::new();
    for r in reports {
        groups
            .entry((&r.dataset, r.model))
            .or_default()
            .entry(&r.series_id)
            .or_default()
            .push(&r.mape);
    }
    let mut rows = Vec::new();
    for ((dataset, model), by_series) in groups {
        let pooled: Vec<HorizonMape> = by_series
            .values()
            .map(|parts| HorizonMape::pooled(parts.iter().copied()))
            .collect();
        for k in 0..MAX_LEAD {
            let windows: Vec<f64> = by_series
                .values()
                .flatten()
                .filter_map(|m| m.mape.get(k).copied().flatten())
                .collect();
            let series: Vec<f64> = pooled.iter().filter_map(|m| m.mape[k]).collect();
            rows.push(MedianRow {
                dataset: dataset.to_string(),
                model,
                horizon: k + 1,
                per_window: median(&windows),
                pooled: median(&series),
                n_series: by_series.len(),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(values: Vec<Vec<f64>>, actuals: Vec<Vec<f64>>) -> ForecastMatrix {
        ForecastMatrix {
            origins: (0..values.len()).collect(),
            values,
            actuals,
        }
    }

    #[test]
    fn mape_hand_example() {
        let fm = matrix(vec![vec![110.0], vec![190.0]], vec![vec![100.0], vec![200.0]]);
        let m = mape_per_horizon(&fm).unwrap();
        assert!((m.mape[0].unwrap() - 7.5).abs() < 1e-12);
        assert_eq!(m.mape[1], None);
    }

    #[test]
    fn mape_exact_forecasts_are_zero() {
        let row: Vec<f64> = (1..=24).map(f64::from).collect();
        let fm = matrix(vec![row.clone(); 3], vec![row; 3]);
        let m = mape_per_horizon(&fm).unwrap();
        assert!(m.mape.iter().all(|v| *v == Some(0.0)));
    }

    #[test]
    fn zero_actual_is_excluded_and_counted() {
        let fm = matrix(vec![vec![5.0], vec![110.0]], vec![vec![0.0], vec![100.0]]);
        let m = mape_per_horizon(&fm).unwrap();
        assert_eq!(m.excluded[0], 1);
        assert!((m.mape[0].unwrap() - 10.0).abs() < 1e-12);
        let all_zero = matrix(vec![vec![1.0]], vec![vec![0.0]]);
        let m = mape_per_horizon(&all_zero).unwrap();
        assert_eq!(m.mape[0], None);
        assert_eq!(m.total_excluded(), 1);
        assert!(matches!(mape_per_horizon(&ForecastMatrix::default()), Err(Error::EmptyForecastMatrix)));
    }

    #[test]
    fn median_of_odd_and_even_counts() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn model_names_round_trip() {
        for k in ModelKind::ALL {
            assert_eq!(k.name().parse::<ModelKind>().unwrap(), k);
            assert_eq!(ModelKind::from_code(k.code()), Some(k));
        }
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
