//! Multiplicative double-seasonal Holt-Winters with intraday (24 h) and
//! intraweek (168 h) indices and a first-order error-autocorrelation term.
//!
//! Two fitting objectives are supported: the in-sample one-step squared error
//! ([`DshwVariant::Original`], φ ≤ 0.9) and the squared error summed over all
//! 24 in-sample horizons ([`DshwVariant::Modified`], φ ≤ 0.99).

use crate::error::{Error, Result};
use crate::optimize::{minimize, BoxBounds, NelderMeadOptions};
use crate::series::{calendar, HourlySeries, HOURS_PER_DAY, HOURS_PER_WEEK};

/// Longest lead time the forecast equation supports without extrapolating the rings.
pub const MAX_LEAD: usize = 24;
/// Hours used to initialize level and indices.
pub const INIT_HOURS: usize = 2 * HOURS_PER_WEEK;
/// Margin keeping the smoothing constants inside (0, 1).
pub const SMOOTHING_MARGIN: f64 = 1e-4;
/// Optimizer start point (α, θ, ω, φ).
pub const START: [f64; 4] = [0.1, 0.1, 0.1, 0.5];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DshwVariant {
    /// One-step objective, φ ≤ 0.9.
    Original,
    /// 24-horizon objective, φ ≤ 0.99.
    Modified,
}

impl DshwVariant {
    pub fn phi_max(self) -> f64 {
        match self {
            DshwVariant::Original => 0.9,
            DshwVariant::Modified => 0.99,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DshwParams {
    pub alpha: f64,
    pub theta: f64,
    pub omega: f64,
    pub phi: f64,
    pub variant: DshwVariant,
}

impl DshwParams {
    pub fn new(alpha: f64, theta: f64, omega: f64, phi: f64, variant: DshwVariant) -> Self {
        Self {
            alpha,
            theta,
            omega,
            phi,
            variant,
        }
    }

    fn from_vec(x: &[f64], variant: DshwVariant) -> Self {
        Self::new(x[0], x[1], x[2], x[3], variant)
    }

    pub fn in_bounds(&self) -> bool {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        unit(self.alpha)
            && unit(self.theta)
            && unit(self.omega)
            && (0.0..=self.variant.phi_max()).contains(&self.phi)
    }
}

fn daily_slot(hour: i64) -> usize {
    hour.rem_euclid(HOURS_PER_DAY as i64) as usize
}

fn weekly_slot(hour: i64) -> usize {
    calendar(hour).hour_of_week()
}

/// Level, seasonal rings and the pieces of the last step needed by the
/// autocorrelation term. Ring slots are hour-of-day and hour-of-week.
#[derive(Debug, Clone, PartialEq)]
pub struct DshwState {
    pub level: f64,
    pub daily: Vec<f64>,
    pub weekly: Vec<f64>,
    pub last_y: f64,
    /// `l_{t-1}·d_{t-24}·w_{t-168}` for the last absorbed observation.
    pub last_fitted: f64,
    /// Absolute hour (since the epoch) of the next observation to absorb.
    pub next_hour: i64,
}

fn check_positive(values: &[f64], offset: usize) -> Result<()> {
    match values.iter().position(|v| v.is_nan() || *v <= 0.0) {
        Some(i) => Err(Error::NonPositiveValue {
            index: offset + i,
            value: values[i],
        }),
        None => Ok(()),
    }
}

/// Initializes the state from the first two weeks of `train`.
pub fn init_state(train: &HourlySeries) -> Result<DshwState> {
    if train.len() < INIT_HOURS {
        return Err(Error::InsufficientData {
            needed: INIT_HOURS,
            available: train.len(),
        });
    }
    let y = &train.values()[..INIT_HOURS];
    check_positive(y, 0)?;
    let hour = |i: usize| train.hour_at(i);

    let mut level = y.iter().sum::<f64>() / INIT_HOURS as f64;

    let mut daily = vec![0.0; HOURS_PER_DAY];
    let mut counts = vec![0usize; HOURS_PER_DAY];
    for (b, day) in y.chunks(HOURS_PER_DAY).enumerate() {
        let mean = day.iter().sum::<f64>() / day.len() as f64;
        for (j, v) in day.iter().enumerate() {
            let slot = daily_slot(hour(b * HOURS_PER_DAY + j));
            daily[slot] += v / mean;
            counts[slot] += 1;
        }
    }
    for (d, c) in daily.iter_mut().zip(&counts) {
        *d /= *c as f64;
    }
    let dm = daily.iter().sum::<f64>() / HOURS_PER_DAY as f64;
    daily.iter_mut().for_each(|d| *d /= dm);

    let mut weekly = vec![0.0; HOURS_PER_WEEK];
    let mut counts = vec![0usize; HOURS_PER_WEEK];
    for (i, v) in y.iter().enumerate() {
        let h = hour(i);
        weekly[weekly_slot(h)] += v / (level * daily[daily_slot(h)]);
        counts[weekly_slot(h)] += 1;
    }
    for (w, c) in weekly.iter_mut().zip(&counts) {
        *w /= *c as f64;
    }
    // Normalizing the weekly ring moves its scale into the level so that
    // level·daily·weekly still reproduces the initialization window.
    let wm = weekly.iter().sum::<f64>() / HOURS_PER_WEEK as f64;
    weekly.iter_mut().for_each(|w| *w /= wm);
    level *= wm;

    let last = INIT_HOURS - 1;
    let h = hour(last);
    Ok(DshwState {
        level,
        last_fitted: level * daily[daily_slot(h)] * weekly[weekly_slot(h)],
        daily,
        weekly,
        last_y: y[last],
        next_hour: hour(INIT_HOURS),
    })
}

impl DshwState {
    /// Index of the last absorbed observation as an absolute hour.
    pub fn origin_hour(&self) -> i64 {
        self.next_hour - 1
    }

    /// Applies the level, daily and weekly recursions for observation `y`.
    pub fn update(&mut self, p: &DshwParams, y: f64) -> Result<()> {
        if y.is_nan() || y <= 0.0 {
            return Err(Error::NonPositiveValue {
                index: 0,
                value: y,
            });
        }
        let (ds, ws) = (daily_slot(self.next_hour), weekly_slot(self.next_hour));
        let d_prev = self.daily[ds];
        let w_prev = self.weekly[ws];
        self.last_fitted = self.level * d_prev * w_prev;
        let level = p.alpha * (y / (d_prev * w_prev)) + (1.0 - p.alpha) * self.level;
        self.daily[ds] = p.theta * (y / (level * w_prev)) + (1.0 - p.theta) * d_prev;
        self.weekly[ws] = p.omega * (y / (level * d_prev)) + (1.0 - p.omega) * w_prev;
        self.level = level;
        self.last_y = y;
        self.next_hour += 1;
        Ok(())
    }

    pub fn updated(&self, p: &DshwParams, y: f64) -> Result<DshwState> {
        let mut next = self.clone();
        next.update(p, y)?;
        Ok(next)
    }

    /// Seasonal part of the `k`-step forecast, without the φ adjustment.
    fn seasonal(&self, k: usize) -> f64 {
        let target = self.origin_hour() + k as i64;
        self.level * self.daily[daily_slot(target)] * self.weekly[weekly_slot(target)]
    }

    /// `k`-step forecast from the last absorbed observation.
    pub fn forecast(&self, p: &DshwParams, k: usize) -> Result<f64> {
        if k == 0 || k > MAX_LEAD {
            return Err(Error::LeadOutOfRange(k));
        }
        let phi_k = (0..k).fold(1.0, |acc, _| acc * p.phi);
        Ok(self.seasonal(k) + phi_k * (self.last_y - self.last_fitted))
    }

    /// Forecasts for leads `1..=horizons`.
    pub fn forecast_path(&self, p: &DshwParams, horizons: usize) -> Result<Vec<f64>> {
        if horizons > MAX_LEAD {
            return Err(Error::LeadOutOfRange(horizons));
        }
        let err = self.last_y - self.last_fitted;
        let mut pk = 1.0;
        Ok((1..=horizons)
            .map(|k| {
                pk *= p.phi;
                self.seasonal(k) + pk * err
            })
            .collect())
    }
}

/// Runs the state through `train` after initialization and sums squared
/// errors over leads `1..=max_lead` at every in-sample origin.
fn in_sample_sse(p: &DshwParams, train: &HourlySeries, max_lead: usize) -> Result<f64> {
    let mut state = init_state(train)?;
    let y = train.values();
    check_positive(&y[INIT_HOURS..], INIT_HOURS)?;
    let n = y.len();
    let mut powers = [0.0; MAX_LEAD + 1];
    powers[0] = 1.0;
    for k in 1..=MAX_LEAD {
        powers[k] = powers[k - 1] * p.phi;
    }
    let mut sse = 0.0;
    for origin in INIT_HOURS - 1..n - 1 {
        let err = state.last_y - state.last_fitted;
        let leads = max_lead.min(n - 1 - origin);
        for k in 1..=leads {
            let e = y[origin + k] - (state.seasonal(k) + powers[k] * err);
            sse += e * e;
        }
        state.update(p, y[origin + 1])?;
    }
    Ok(sse)
}

/// Sum of squared in-sample one-step errors.
pub fn objective_1step(p: &DshwParams, train: &HourlySeries) -> Result<f64> {
    in_sample_sse(p, train, 1)
}

/// Sum of squared in-sample errors over all 24 horizons at every origin.
pub fn objective_multih(p: &DshwParams, train: &HourlySeries) -> Result<f64> {
    in_sample_sse(p, train, MAX_LEAD)
}

/// A fitted model: frozen parameters plus the running state.
#[derive(Debug, Clone, PartialEq)]
pub struct DshwModel {
    pub params: DshwParams,
    pub state: DshwState,
}

/// Fit diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct DshwFitInfo {
    pub objective: f64,
    pub evals: usize,
    pub converged: bool,
}

impl DshwModel {
    pub fn observe(&mut self, y: f64) -> Result<()> {
        self.state.update(&self.params, y)
    }

    pub fn forecast(&self, k: usize) -> Result<f64> {
        self.state.forecast(&self.params, k)
    }

    pub fn forecast_path(&self, horizons: usize) -> Result<Vec<f64>> {
        self.state.forecast_path(&self.params, horizons)
    }
}

/// Fits (α, θ, ω, φ) on `train` and returns the end-of-training state.
pub fn fit(train: &HourlySeries, variant: DshwVariant) -> Result<(DshwModel, DshwFitInfo)> {
    fit_with(train, variant, NelderMeadOptions::default())
}

pub fn fit_with(
    train: &HourlySeries,
    variant: DshwVariant,
    opts: NelderMeadOptions,
) -> Result<(DshwModel, DshwFitInfo)> {
    if train.len() < INIT_HOURS + 1 {
        return Err(Error::InsufficientData {
            needed: INIT_HOURS + 1,
            available: train.len(),
        });
    }
    check_positive(train.values(), 0)?;
    let max_lead = match variant {
        DshwVariant::Original => 1,
        DshwVariant::Modified => MAX_LEAD,
    };
    let lo = SMOOTHING_MARGIN;
    let hi = 1.0 - SMOOTHING_MARGIN;
    let bounds = BoxBounds::new(vec![lo, lo, lo, 0.0], vec![hi, hi, hi, variant.phi_max()])?;
    let best = minimize(
        |x| in_sample_sse(&DshwParams::from_vec(x, variant), train, max_lead).unwrap_or(f64::INFINITY),
        &START,
        &bounds,
        opts,
    )?;
    let params = DshwParams::from_vec(&best.x, variant);
    let mut state = init_state(train)?;
    for &y in &train.values()[INIT_HOURS..] {
        state.update(&params, y)?;
    }
    Ok((
        DshwModel { params, state },
        DshwFitInfo {
            objective: best.f,
            evals: best.evals,
            converged: best.converged,
        },
    ))
}
