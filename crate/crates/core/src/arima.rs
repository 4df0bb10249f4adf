//! Non-seasonal ARIMA(p, d, q) with `d ∈ {0, 1}`, fit by conditional sum of
//! squares, plus the averaging+ARMA residual-correction model.
//!
//! Coefficients are optimized through partial autocorrelations in
//! `(-PACF_LIMIT, PACF_LIMIT)`, so every fitted AR polynomial is stationary and
//! every MA polynomial invertible.

use std::collections::{HashMap, VecDeque};

use crate::baseline::{avg_forecast, avg_residuals, WEEKS};
use crate::error::{Error, Result};
use crate::optimize::{minimize, BoxBounds, NelderMeadOptions};
use crate::series::HOURS_PER_WEEK;

/// Largest AR or MA order searched.
pub const MAX_ORDER: usize = 5;
/// Bound on partial autocorrelations during fitting.
pub const PACF_LIMIT: f64 = 0.999;
/// Lag-1 autocorrelation above which the series is differenced once.
pub const DIFFERENCING_THRESHOLD: f64 = 0.95;
/// Order selection skips fits with an AR or MA root closer to the unit circle than this.
pub const MIN_ROOT_MODULUS: f64 = 1.01;
/// Minimum series length accepted by [`stepwise_select`].
pub const MIN_STEPWISE_LEN: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ArmaSpec {
    pub p: usize,
    pub d: usize,
    pub q: usize,
    pub include_mean: bool,
}

impl ArmaSpec {
    pub fn new(p: usize, d: usize, q: usize, include_mean: bool) -> Self {
        Self {
            p,
            d,
            q,
            include_mean,
        }
    }

    /// Number of estimated parameters including the innovation variance.
    pub fn n_params(&self) -> usize {
        self.p + self.q + usize::from(self.include_mean) + 1
    }

    fn validate(&self) -> Result<()> {
        if self.p > MAX_ORDER || self.q > MAX_ORDER || self.d > 1 {
            return Err(Error::InvalidArgument(format!("unsupported order {self}")));
        }
        Ok(())
    }
}

impl std::fmt::Display for ArmaSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{},{})", self.p, self.d, self.q)?;
        if self.include_mean {
            write!(f, "+mean")?;
        }
        Ok(())
    }
}

/// Recursion state: recent differenced values and innovations, newest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ArmaState {
    /// Last undifferenced observation (used when `d = 1`).
    pub last_raw: Option<f64>,
    pub recent: VecDeque<f64>,
    pub innovations: VecDeque<f64>,
    /// Differenced values absorbed so far.
    pub seen: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmaFit {
    pub spec: ArmaSpec,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub mean: f64,
    pub sigma2: f64,
    pub css: f64,
    pub n_eff: usize,
    /// False when the optimizer hit its evaluation budget.
    pub converged: bool,
    pub state: ArmaState,
}

impl ArmaFit {
    /// A model with given coefficients and an empty (pre-sample) state.
    pub fn from_parts(spec: ArmaSpec, ar: Vec<f64>, ma: Vec<f64>, mean: f64, sigma2: f64) -> Result<Self> {
        spec.validate()?;
        if ar.len() != spec.p {
            return Err(Error::DimensionMismatch {
                expected: spec.p,
                got: ar.len(),
            });
        }
        if ma.len() != spec.q {
            return Err(Error::DimensionMismatch {
                expected: spec.q,
                got: ma.len(),
            });
        }
        Ok(Self {
            spec,
            ar,
            ma,
            mean: if spec.include_mean { mean } else { 0.0 },
            sigma2,
            css: 0.0,
            n_eff: 0,
            converged: true,
            state: ArmaState::default(),
        })
    }

    /// Whether all AR and MA roots lie outside the circle of radius [`MIN_ROOT_MODULUS`].
    pub fn is_admissible(&self) -> bool {
        let ma: Vec<f64> = self.ma.iter().map(|v| -v).collect();
        roots_beyond(&self.ar, MIN_ROOT_MODULUS) && roots_beyond(&ma, MIN_ROOT_MODULUS)
    }

    /// Smallest modulus among the AR and MA roots (infinite for a white-noise model),
    /// located by bisection to about 1e-9.
    pub fn min_root_modulus(&self) -> f64 {
        let ma: Vec<f64> = self.ma.iter().map(|v| -v).collect();
        let clear = |r: f64| roots_beyond(&self.ar, r) && roots_beyond(&ma, r);
        if self.ar.iter().chain(&self.ma).all(|&v| v == 0.0) {
            return f64::INFINITY;
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while clear(hi) {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            if clear(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// The same coefficients with the state reset to pre-sample.
    pub fn reset(&self) -> Self {
        Self {
            state: ArmaState::default(),
            ..self.clone()
        }
    }

    fn conditioning(&self) -> usize {
        self.spec.p.max(self.spec.q)
    }

    fn predict_next(&self) -> f64 {
        let s = &self.state;
        let ar: f64 = self
            .ar
            .iter()
            .zip(&s.recent)
            .map(|(a, w)| a * (w - self.mean))
            .sum();
        let ma: f64 = self.ma.iter().zip(&s.innovations).map(|(b, e)| b * e).sum();
        self.mean + ar + ma
    }

    /// Absorbs one observation with frozen coefficients and returns its
    /// innovation (`None` while the first value of a differenced model is
    /// being consumed).
    pub fn update(&mut self, y: f64) -> Option<f64> {
        let w = if self.spec.d == 1 {
            let prev = self.state.last_raw.replace(y);
            y - prev?
        } else {
            y
        };
        let e = if self.state.seen >= self.conditioning() {
            w - self.predict_next()
        } else {
            0.0
        };
        let s = &mut self.state;
        if self.spec.p > 0 {
            s.recent.push_front(w);
            s.recent.truncate(self.spec.p);
        }
        if self.spec.q > 0 {
            s.innovations.push_front(e);
            s.innovations.truncate(self.spec.q);
        }
        s.seen += 1;
        Some(e)
    }

    /// Functional form of [`ArmaFit::update`].
    pub fn updated(&self, y: f64) -> (ArmaFit, Option<f64>) {
        let mut next = self.clone();
        let e = next.update(y);
        (next, e)
    }

    /// Expected values of the next `k` observations.
    pub fn forecast(&self, k: usize) -> Vec<f64> {
        let mut recent: Vec<f64> = self.state.recent.iter().copied().collect();
        let mut innov: Vec<f64> = self.state.innovations.iter().copied().collect();
        let mut level = self.state.last_raw.unwrap_or(0.0);
        let mut out = Vec::with_capacity(k);
        for _ in 0..k {
            let ar: f64 = self
                .ar
                .iter()
                .zip(&recent)
                .map(|(a, w)| a * (w - self.mean))
                .sum();
            let ma: f64 = self.ma.iter().zip(&innov).map(|(b, e)| b * e).sum();
            let w = self.mean + ar + ma;
            if self.spec.p > 0 {
                recent.insert(0, w);
                recent.truncate(self.spec.p);
            }
            if self.spec.q > 0 {
                innov.insert(0, 0.0);
                innov.truncate(self.spec.q);
            }
            if self.spec.d == 1 {
                level += w;
                out.push(level);
            } else {
                out.push(w);
            }
        }
        out
    }

    /// Corrected AIC `n·ln σ² + 2k·n / (n − k − 1)`.
    pub fn aicc(&self) -> Result<f64> {
        let k = self.spec.n_params();
        if self.n_eff <= k + 1 {
            return Err(Error::DegenerateSampleSize {
                n_eff: self.n_eff,
                k,
            });
        }
        let n = self.n_eff as f64;
        let kf = k as f64;
        Ok(n * self.sigma2.ln() + 2.0 * kf * n / (n - kf - 1.0))
    }
}

/// True when every root of `1 − Σ c_i z^i` has modulus above `r`: the
/// polynomial rescaled by `z → r·z` must still be stationary.
fn roots_beyond(c: &[f64], r: f64) -> bool {
    let mut scale = 1.0;
    let scaled: Vec<f64> = c
        .iter()
        .map(|v| {
            scale *= r;
            v * scale
        })
        .collect();
    ar_to_pacf(&scaled).is_some()
}

/// Maps partial autocorrelations to AR coefficients (Durbin–Levinson).
pub fn pacf_to_ar(pacf: &[f64]) -> Vec<f64> {
    let mut phi: Vec<f64> = Vec::with_capacity(pacf.len());
    for (k, &r) in pacf.iter().enumerate() {
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - r * prev[k - 1 - j];
        }
        phi.push(r);
    }
    phi
}

/// Inverse of [`pacf_to_ar`]; `None` when the polynomial is not stationary.
pub fn ar_to_pacf(ar: &[f64]) -> Option<Vec<f64>> {
    let mut phi = ar.to_vec();
    let mut pacf = vec![0.0; ar.len()];
    for k in (0..ar.len()).rev() {
        let r = phi[k];
        if r.abs() >= 1.0 || !r.is_finite() {
            return None;
        }
        pacf[k] = r;
        let denom = 1.0 - r * r;
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = (prev[j] + r * prev[k - 1 - j]) / denom;
        }
        phi.truncate(k);
    }
    Some(pacf)
}

/// Sample autocorrelations at lags `1..=max_lag`.
pub fn acf(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let mean = x.iter().sum::<f64>() / n as f64;
    let c0: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
    (1..=max_lag)
        .map(|lag| {
            if lag >= n || c0 == 0.0 {
                return 0.0;
            }
            let c: f64 = (lag..n).map(|t| (x[t] - mean) * (x[t - lag] - mean)).sum();
            c / c0
        })
        .collect()
}

/// Ljung–Box portmanteau statistic over `lags` autocorrelations.
pub fn ljung_box(x: &[f64], lags: usize) -> f64 {
    let n = x.len() as f64;
    acf(x, lags)
        .iter()
        .enumerate()
        .map(|(i, r)| r * r / (n - (i + 1) as f64))
        .sum::<f64>()
        * n
        * (n + 2.0)
}

fn difference(x: &[f64], d: usize) -> Vec<f64> {
    if d == 0 {
        x.to_vec()
    } else {
        x.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

/// Sample partial autocorrelations via Durbin–Levinson, clamped for use as a start point.
fn sample_pacf(x: &[f64], p: usize) -> Vec<f64> {
    let r = acf(x, p);
    let mut phi: Vec<f64> = Vec::new();
    let mut out = Vec::with_capacity(p);
    let mut v = 1.0;
    for k in 0..p {
        let num = r[k] - (0..k).map(|j| phi[j] * r[k - 1 - j]).sum::<f64>();
        let a = if v > 0.0 { num / v } else { 0.0 };
        let a = a.clamp(-0.9, 0.9);
        let prev = phi.clone();
        for j in 0..k {
            phi[j] = prev[j] - a * prev[k - 1 - j];
        }
        phi.push(a);
        v *= 1.0 - a * a;
        out.push(a);
    }
    out
}

/// Runs the CSS recursion over `x`, returning the filled model.
fn run_css(mut fit: ArmaFit, x: &[f64]) -> ArmaFit {
    let m = fit.conditioning();
    let mut css = 0.0;
    let mut count = 0;
    for &y in x {
        if let Some(e) = fit.update(y) {
            if fit.state.seen > m {
                css += e * e;
                count += 1;
            }
        }
    }
    fit.css = css;
    fit.n_eff = count;
    fit.sigma2 = if count > 0 {
        (css / count as f64).max(f64::MIN_POSITIVE)
    } else {
        f64::NAN
    };
    fit
}

/// Innovations produced by the CSS recursion after the conditioning prefix.
pub fn css_residuals(fit: &ArmaFit, x: &[f64]) -> Vec<f64> {
    let mut f = fit.reset();
    let m = f.conditioning();
    x.iter()
        .filter_map(|&y| {
            let e = f.update(y)?;
            (f.state.seen > m).then_some(e)
        })
        .collect()
}

/// Fits `spec` to `x` by minimizing the conditional sum of squares.
pub fn css_fit(x: &[f64], spec: ArmaSpec) -> Result<ArmaFit> {
    spec.validate()?;
    let w = difference(x, spec.d);
    let needed = 10 * (spec.p + spec.q + 1);
    if w.len() < needed || w.len() <= spec.p.max(spec.q) {
        return Err(Error::InsufficientData {
            needed: needed + spec.d,
            available: x.len(),
        });
    }
    let n = w.len() as f64;
    let mean0 = w.iter().sum::<f64>() / n;
    let sd = (w.iter().map(|v| (v - mean0).powi(2)).sum::<f64>() / n).sqrt();

    let dim = spec.p + spec.q + usize::from(spec.include_mean);
    let mut lower = vec![-PACF_LIMIT; spec.p + spec.q];
    let mut upper = vec![PACF_LIMIT; spec.p + spec.q];
    let mut x0 = sample_pacf(&w, spec.p);
    x0.extend(std::iter::repeat_n(0.0, spec.q));
    if spec.include_mean {
        let half = 10.0 * sd + 1.0;
        lower.push(mean0 - half);
        upper.push(mean0 + half);
        x0.push(mean0);
    }
    let bounds = BoxBounds::new(lower, upper)?;

    let build = |params: &[f64]| -> ArmaFit {
        let ar = pacf_to_ar(&params[..spec.p]);
        let ma: Vec<f64> = pacf_to_ar(&params[spec.p..spec.p + spec.q])
            .into_iter()
            .map(|v| -v)
            .collect();
        let mean = if spec.include_mean { params[dim - 1] } else { 0.0 };
        ArmaFit::from_parts(spec, ar, ma, mean, f64::NAN).expect("orders validated")
    };

    let opts = NelderMeadOptions {
        tol: 1e-7,
        max_evals: 600 * (dim + 1),
        ..NelderMeadOptions::default()
    };
    let best = minimize(|p| run_css(build(p), x).css, &x0, &bounds, opts)?;
    let mut fit = run_css(build(&best.x), x);
    fit.converged = best.converged;
    Ok(fit)
}

fn better(a: &(ArmaSpec, f64), b: &(ArmaSpec, f64)) -> bool {
    let key = |(s, v): &(ArmaSpec, f64)| (*v, s.p + s.q, s.p);
    let (va, sa, pa) = key(a);
    let (vb, sb, pb) = key(b);
    match va.total_cmp(&vb) {
        std::cmp::Ordering::Less => true,
        std::cmp::Ordering::Greater => false,
        std::cmp::Ordering::Equal => (sa, pa) < (sb, pb),
    }
}

/// Differencing order chosen from the lag-1 autocorrelation.
pub fn choose_differencing(x: &[f64]) -> usize {
    usize::from(acf(x, 1)[0] > DIFFERENCING_THRESHOLD)
}

/// Stepwise order search minimizing AICc over admissible fits.
pub fn stepwise_select(x: &[f64]) -> Result<ArmaFit> {
    if x.len() < MIN_STEPWISE_LEN {
        return Err(Error::InsufficientData {
            needed: MIN_STEPWISE_LEN,
            available: x.len(),
        });
    }
    let d = choose_differencing(x);
    let mean = d == 0;
    let mut cache: HashMap<ArmaSpec, Option<(ArmaFit, f64)>> = HashMap::new();
    let mut score = |spec: ArmaSpec| -> Option<f64> {
        cache
            .entry(spec)
            .or_insert_with(|| {
                let fit = css_fit(x, spec).ok().filter(ArmaFit::is_admissible)?;
                let a = fit.aicc().ok()?;
                a.is_finite().then_some((fit, a))
            })
            .as_ref()
            .map(|(_, a)| *a)
    };

    let starts = [
        ArmaSpec::new(2, d, 2, mean),
        ArmaSpec::new(1, d, 0, mean),
        ArmaSpec::new(0, d, 1, mean),
        ArmaSpec::new(0, d, 0, mean),
    ];
    let mut best: Option<(ArmaSpec, f64)> = None;
    for s in starts {
        if let Some(a) = score(s) {
            if best.as_ref().is_none_or(|b| better(&(s, a), b)) {
                best = Some((s, a));
            }
        }
    }
    let mut best = best.ok_or(Error::InsufficientData {
        needed: MIN_STEPWISE_LEN,
        available: x.len(),
    })?;

    loop {
        let (s, _) = best;
        let mut neighbours = Vec::with_capacity(5);
        if s.p > 0 {
            neighbours.push(ArmaSpec { p: s.p - 1, ..s });
        }
        if s.p < MAX_ORDER {
            neighbours.push(ArmaSpec { p: s.p + 1, ..s });
        }
        if s.q > 0 {
            neighbours.push(ArmaSpec { q: s.q - 1, ..s });
        }
        if s.q < MAX_ORDER {
            neighbours.push(ArmaSpec { q: s.q + 1, ..s });
        }
        neighbours.push(ArmaSpec {
            include_mean: !s.include_mean,
            ..s
        });
        let mut step: Option<(ArmaSpec, f64)> = None;
        for n in neighbours {
            if let Some(a) = score(n) {
                let cand = (n, a);
                if a < best.1 && step.as_ref().is_none_or(|b| better(&cand, b)) {
                    step = Some(cand);
                }
            }
        }
        match step {
            Some(s) => best = s,
            None => break,
        }
    }
    let (fit, _) = cache
        .remove(&best.0)
        .flatten()
        .expect("best spec was scored");
    Ok(fit)
}

/// Averaging forecast corrected by an ARMA model of its one-step residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct AvgArimaModel {
    pub fit: ArmaFit,
    /// Index of the last observation absorbed into the ARMA state.
    pub synced_to: usize,
}

impl AvgArimaModel {
    /// Fits the residual ARMA on up to `residual_hours` residuals ending at
    /// `train_end` (exclusive).
    pub fn fit(history: &[f64], train_end: usize, residual_hours: usize) -> Result<Self> {
        let earliest = WEEKS * HOURS_PER_WEEK;
        let start = train_end.saturating_sub(residual_hours).max(earliest);
        if train_end < start + MIN_STEPWISE_LEN {
            return Err(Error::InsufficientData {
                needed: earliest + MIN_STEPWISE_LEN,
                available: train_end,
            });
        }
        let residuals = avg_residuals(history, start..train_end)?;
        let fit = stepwise_select(&residuals)?;
        Ok(Self {
            fit,
            synced_to: train_end - 1,
        })
    }

    pub fn from_fit(fit: ArmaFit, synced_to: usize) -> Self {
        Self { fit, synced_to }
    }

    /// Absorbs `history[t]`, which must be the observation right after the current state.
    pub fn observe(&mut self, history: &[f64], t: usize) -> Result<()> {
        if t != self.synced_to + 1 {
            return Err(Error::StateOutOfSync {
                state: self.synced_to,
                origin: t,
            });
        }
        let r = history[t] - avg_forecast(history, t - 1, 1)?;
        self.fit.update(r);
        self.synced_to = t;
        Ok(())
    }

    pub fn forecast(&self, history: &[f64], origin: usize, k: usize) -> Result<f64> {
        if origin != self.synced_to {
            return Err(Error::StateOutOfSync {
                state: self.synced_to,
                origin,
            });
        }
        if k == 0 || k > 24 {
            return Err(Error::LeadOutOfRange(k));
        }
        Ok(avg_forecast(history, origin, k)? + self.fit.forecast(k)[k - 1])
    }

    /// Forecasts for leads `1..=horizons` at the synchronized origin.
    pub fn forecast_path(&self, history: &[f64], horizons: usize) -> Result<Vec<f64>> {
        let origin = self.synced_to;
        let correction = self.fit.forecast(horizons);
        (1..=horizons)
            .map(|k| Ok(avg_forecast(history, origin, k)? + correction[k - 1]))
            .collect()
    }
}

/// Averaging forecast plus the ARMA correction at lead `k`.
pub fn avg_arima_forecast(model: &AvgArimaModel, history: &[f64], origin: usize, k: usize) -> Result<f64> {
    model.forecast(history, origin, k)
}
