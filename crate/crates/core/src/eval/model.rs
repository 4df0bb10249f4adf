//! The model set under evaluation behind a single fitted-model type.

use std::fmt;
use std::str::FromStr;

use crate::arima::AvgArimaModel;
use crate::baseline::avg_forecast;
use crate::dshw::{self, DshwModel, DshwVariant};
use crate::error::{Error, Result};
use crate::narxrf::{fit_narx_with, Exogenous, ForestParams, NarxRfModel};
use crate::optimize::NelderMeadOptions;
use crate::series::{HourlySeries, HOURS_PER_DAY, LOAD_FLOOR};

/// Forecast horizon in hours.
pub const MAX_LEAD: usize = 24;

/// Default training span for the DSHW variants and the residual ARMA (90 days).
pub const THREE_MONTHS: usize = 90 * HOURS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Avg,
    AvgArima,
    OrigDshw,
    ModDshw,
    NarxRf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Avg,
        ModelKind::AvgArima,
        ModelKind::OrigDshw,
        ModelKind::ModDshw,
        ModelKind::NarxRf,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Avg => "avg",
            ModelKind::AvgArima => "avgarima",
            ModelKind::OrigDshw => "origdshw",
            ModelKind::ModDshw => "moddshw",
            ModelKind::NarxRf => "narxrf",
        }
    }

    /// Stable small integer used in seed derivation and file tags.
    pub fn code(self) -> u8 {
        match self {
            ModelKind::Avg => 0,
            ModelKind::AvgArima => 1,
            ModelKind::OrigDshw => 2,
            ModelKind::ModDshw => 3,
            ModelKind::NarxRf => 4,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.code() == code)
    }

    /// Hours of history before the window used for fitting; `None` means all.
    pub fn default_train_hours(self) -> Option<usize> {
        match self {
            ModelKind::Avg | ModelKind::NarxRf => None,
            ModelKind::AvgArima | ModelKind::OrigDshw | ModelKind::ModDshw => Some(THREE_MONTHS),
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::InvalidArgument(format!("unknown model {s:?}")))
    }
}

/// Fitting knobs shared by all tasks of a run.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FitOptions {
    /// Per-model override of [`ModelKind::default_train_hours`], indexed by code.
    pub train_hours: [Option<Option<usize>>; 5],
    pub forest: ForestParams,
    pub dshw_optimizer: NelderMeadOptions,
}

impl FitOptions {
    pub fn train_hours(&self, kind: ModelKind) -> Option<usize> {
        self.train_hours[kind.code() as usize].unwrap_or_else(|| kind.default_train_hours())
    }

    pub fn set_train_hours(&mut self, kind: ModelKind, hours: Option<usize>) {
        self.train_hours[kind.code() as usize] = Some(hours);
    }
}

/// What a forecaster may see at an origin: loads up to and including it,
/// plus the exogenous channels over the whole series.
#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    pub start_hour: i64,
    pub loads: &'a [f64],
    pub exo: Option<&'a Exogenous>,
}

impl<'a> View<'a> {
    pub fn new(series: &'a HourlySeries, exo: Option<&'a Exogenous>) -> Self {
        Self {
            start_hour: series.start_hour(),
            loads: series.values(),
            exo,
        }
    }

    /// The view with loads cut after `origin`.
    pub fn truncated(&self, origin: usize) -> View<'a> {
        View {
            loads: &self.loads[..=origin],
            ..*self
        }
    }
}

/// A fitted forecaster with frozen parameters and (for the recursive
/// models) a running state.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedModel {
    Avg,
    AvgArima(AvgArimaModel),
    Dshw(DshwModel),
    NarxRf(Box<NarxRfModel>),
}

impl FittedModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            FittedModel::Avg => ModelKind::Avg,
            FittedModel::AvgArima(_) => ModelKind::AvgArima,
            FittedModel::Dshw(m) => match m.params.variant {
                DshwVariant::Original => ModelKind::OrigDshw,
                DshwVariant::Modified => ModelKind::ModDshw,
            },
            FittedModel::NarxRf(_) => ModelKind::NarxRf,
        }
    }

    /// Index of the last observation absorbed by the state, for stateful models.
    pub fn synced_to(&self, start_hour: i64) -> Option<i64> {
        match self {
            FittedModel::AvgArima(m) => Some(m.synced_to as i64),
            FittedModel::Dshw(m) => Some(m.state.origin_hour() - start_hour),
            FittedModel::Avg | FittedModel::NarxRf(_) => None,
        }
    }

    fn check_sync(&self, view: &View<'_>, origin: usize) -> Result<()> {
        match self.synced_to(view.start_hour) {
            Some(s) if s != origin as i64 => Err(Error::StateOutOfSync {
                state: s.max(0) as usize,
                origin,
            }),
            _ => Ok(()),
        }
    }

    /// Forecasts for leads `1..=horizons` from `origin`, reading loads only
    /// through `origin`.
    pub fn forecast_path(&self, view: &View<'_>, origin: usize, horizons: usize) -> Result<Vec<f64>> {
        if horizons == 0 || horizons > MAX_LEAD {
            return Err(Error::LeadOutOfRange(horizons));
        }
        if origin >= view.loads.len() {
            return Err(Error::InsufficientData {
                needed: origin + 1,
                available: view.loads.len(),
            });
        }
        self.check_sync(view, origin)?;
        let v = view.truncated(origin);
        match self {
            FittedModel::Avg => (1..=horizons).map(|k| avg_forecast(v.loads, origin, k)).collect(),
            FittedModel::AvgArima(m) => m.forecast_path(v.loads, horizons),
            FittedModel::Dshw(m) => m.forecast_path(horizons),
            FittedModel::NarxRf(m) => m.forecast_path(v.loads, v.exo.ok_or(Error::MissingExogenous)?, origin, horizons),
        }
    }

    /// Feeds observation `t` (the hour after the current origin) to the state.
    /// DSHW sees the value floored at [`LOAD_FLOOR`].
    pub fn observe(&mut self, view: &View<'_>, t: usize) -> Result<()> {
        if t == 0 || t >= view.loads.len() {
            return Err(Error::InsufficientData {
                needed: t + 1,
                available: view.loads.len(),
            });
        }
        self.check_sync(view, t - 1)?;
        let v = view.truncated(t);
        match self {
            FittedModel::Avg | FittedModel::NarxRf(_) => Ok(()),
            FittedModel::AvgArima(m) => m.observe(v.loads, t),
            FittedModel::Dshw(m) => m.observe(v.loads[t].max(LOAD_FLOOR)),
        }
    }

    /// Whether both models carry the same fitted parameters, ignoring running state.
    pub fn same_parameters(&self, other: &FittedModel) -> bool {
        match (self, other) {
            (FittedModel::Avg, FittedModel::Avg) => true,
            (FittedModel::AvgArima(a), FittedModel::AvgArima(b)) => a.fit.reset() == b.fit.reset(),
            (FittedModel::Dshw(a), FittedModel::Dshw(b)) => a.params == b.params,
            (FittedModel::NarxRf(a), FittedModel::NarxRf(b)) => a == b,
            _ => false,
        }
    }
}

/// Fits `kind` on the hours of `series` before `train_end`.
pub fn fit_model(
    kind: ModelKind,
    series: &HourlySeries,
    train_end: usize,
    opts: &FitOptions,
    seed: u64,
) -> Result<FittedModel> {
    if train_end > series.len() || train_end == 0 {
        return Err(Error::InvalidArgument(format!(
            "training end {train_end} outside series of length {}",
            series.len()
        )));
    }
    let from = opts
        .train_hours(kind)
        .map_or(0, |h| train_end.saturating_sub(h));
    let history = &series.values()[..train_end];
    if history[from..].iter().any(|v| v.is_nan()) {
        return Err(Error::MissingValues);
    }
    match kind {
        ModelKind::Avg => {
            avg_forecast(history, train_end - 1, 1)?;
            Ok(FittedModel::Avg)
        }
        ModelKind::AvgArima => {
            let hours = train_end - from;
            AvgArimaModel::fit(history, train_end, hours).map(FittedModel::AvgArima)
        }
        ModelKind::OrigDshw | ModelKind::ModDshw => {
            let variant = if kind == ModelKind::OrigDshw {
                DshwVariant::Original
            } else {
                DshwVariant::Modified
            };
            let train = series.slice(from..train_end).clamp_floor(LOAD_FLOOR);
            let (m, _) = dshw::fit_with(&train, variant, opts.dshw_optimizer)?;
            Ok(FittedModel::Dshw(m))
        }
        ModelKind::NarxRf => {
            let train = series.slice(from..train_end);
            fit_narx_with(&train, seed, &opts.forest).map(|m| FittedModel::NarxRf(Box::new(m)))
        }
    }
}
