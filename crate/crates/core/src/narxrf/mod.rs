//! NARX random forest: one forest per lead time over load lags, temperature
//! channels and calendar features of the target hour.
//!
//! Lags are offsets back from the forecast origin `t`; for lead `h` they are
//! `1, 2, 3, 24−h, 48−h, 72−h, 168−h, 336−h`, so at `h = 24` the origin
//! observation itself enters through offset 0.

mod forest;
mod tree;

pub use forest::{fit_forest, Forest, ForestParams};
pub use tree::{grow_tree, Dataset, Node, RegressionTree, TreeParams, LEAF};

use crate::error::{Error, Result};
use crate::seed::derive_seed;
use crate::series::{calendar, HourlySeries, HOURS_PER_DAY, HOURS_PER_WEEK};

/// Features per row: 8 load lags, 2 temperature channels, 2 calendar fields.
pub const N_FEATURES: usize = 12;
pub const MAX_LEAD: usize = 24;

/// Which lead time a forest predicts; determines the lag offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureRecipe {
    h: usize,
}

impl FeatureRecipe {
    pub fn new(h: usize) -> Result<Self> {
        if h == 0 || h > MAX_LEAD {
            return Err(Error::LeadOutOfRange(h));
        }
        Ok(Self { h })
    }

    pub fn lead(&self) -> usize {
        self.h
    }

    pub fn load_lags(&self) -> [usize; 8] {
        let (d, w, h) = (HOURS_PER_DAY, HOURS_PER_WEEK, self.h);
        [1, 2, 3, d - h, 2 * d - h, 3 * d - h, w - h, 2 * w - h]
    }

    /// Deepest lag offset; the first usable origin.
    pub fn max_lag(&self) -> usize {
        2 * HOURS_PER_WEEK - self.h
    }

    /// Feature row for origin `t`. Reads `loads[..=t]` only; temperature and
    /// calendar are taken at the target hour `t + h`.
    pub fn row(&self, loads: &[f64], exo: &Exogenous, origin: usize) -> Result<[f64; N_FEATURES]> {
        if origin < self.max_lag() || origin >= loads.len() {
            return Err(Error::InsufficientData {
                needed: self.max_lag() + 1,
                available: loads.len().min(origin + 1),
            });
        }
        let target = origin + self.h;
        if target >= exo.temp.len() {
            return Err(Error::MissingExogenous);
        }
        let mut row = [0.0; N_FEATURES];
        for (slot, lag) in row.iter_mut().zip(self.load_lags()) {
            *slot = loads[origin - lag];
        }
        let cal = calendar(exo.start_hour + target as i64);
        row[8] = exo.temp[target];
        row[9] = exo.smooth[target];
        row[10] = f64::from(cal.hour_of_day);
        row[11] = f64::from(cal.day_of_week);
        Ok(row)
    }
}

/// Temperature and smoothed temperature aligned with a series.
#[derive(Debug, Clone, PartialEq)]
pub struct Exogenous {
    start_hour: i64,
    temp: Vec<f64>,
    smooth: Vec<f64>,
}

impl Exogenous {
    pub fn from_series(series: &HourlySeries) -> Result<Self> {
        let smooth = series.smoothed_temp()?;
        Ok(Self {
            start_hour: series.start_hour(),
            temp: series.temp().ok_or(Error::MissingExogenous)?.to_vec(),
            smooth,
        })
    }

    pub fn len(&self) -> usize {
        self.temp.len()
    }

    pub fn is_empty(&self) -> bool {
        self.temp.is_empty()
    }
}

/// Training rows for lead `h`: one per origin with a known target, chronological.
pub fn build_dataset(series: &HourlySeries, h: usize) -> Result<(Dataset, Vec<f64>)> {
    let exo = Exogenous::from_series(series)?;
    build_dataset_with(series.values(), &exo, h)
}

fn build_dataset_with(loads: &[f64], exo: &Exogenous, h: usize) -> Result<(Dataset, Vec<f64>)> {
    let recipe = FeatureRecipe::new(h)?;
    if loads.iter().any(|v| v.is_nan()) {
        return Err(Error::MissingValues);
    }
    let first = recipe.max_lag();
    let n = loads.len();
    if n < first + h + 1 {
        return Err(Error::InsufficientData {
            needed: first + h + 1,
            available: n,
        });
    }
    let mut data = Dataset::new(N_FEATURES);
    let mut targets = Vec::with_capacity(n - first - h);
    for t in first..n - h {
        data.push(&recipe.row(loads, exo, t)?);
        targets.push(loads[t + h]);
    }
    Ok((data, targets))
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeadForest {
    pub recipe: FeatureRecipe,
    pub forest: Forest,
}

/// One forest per lead time `1..=24`.
#[derive(Debug, Clone, PartialEq)]
pub struct NarxRfModel {
    pub forests: Vec<LeadForest>,
}

impl NarxRfModel {
    pub fn forecast(&self, loads: &[f64], exo: &Exogenous, origin: usize, k: usize) -> Result<f64> {
        if k == 0 || k > self.forests.len() {
            return Err(Error::LeadOutOfRange(k));
        }
        let lf = &self.forests[k - 1];
        lf.forest.predict(&lf.recipe.row(loads, exo, origin)?)
    }

    pub fn forecast_path(&self, loads: &[f64], exo: &Exogenous, origin: usize, horizons: usize) -> Result<Vec<f64>> {
        (1..=horizons)
            .map(|k| self.forecast(loads, exo, origin, k))
            .collect()
    }
}

/// Fits the 24 per-lead forests on all of `series`.
pub fn fit_narx(series: &HourlySeries, seed: u64) -> Result<NarxRfModel> {
    fit_narx_with(series, seed, &ForestParams::default())
}

pub fn fit_narx_with(series: &HourlySeries, seed: u64, params: &ForestParams) -> Result<NarxRfModel> {
    let exo = Exogenous::from_series(series)?;
    let forests = (1..=MAX_LEAD)
        .map(|h| {
            let (data, targets) = build_dataset_with(series.values(), &exo, h)?;
            let forest = fit_forest(&data, &targets, params, derive_seed(seed, &[h as u64]))?;
            Ok(LeadForest {
                recipe: FeatureRecipe::new(h)?,
                forest,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NarxRfModel { forests })
}

/// Direct `k`-step forecast from origin `t` of `series`.
pub fn narx_forecast(model: &NarxRfModel, series: &HourlySeries, origin: usize, k: usize) -> Result<f64> {
    let exo = Exogenous::from_series(series)?;
    model.forecast(series.values(), &exo, origin, k)
}
