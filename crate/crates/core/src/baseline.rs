//! Four-week averaging predictor: the forecast for a target hour is the mean
//! of the loads at the same hour of the four preceding weeks.

use crate::error::{Error, Result};
use crate::series::HOURS_PER_WEEK;

/// Number of weekly lags averaged.
pub const WEEKS: usize = 4;

/// Averaging predictor over a borrowed load history.
#[derive(Debug, Clone, Copy)]
pub struct AveragingModel<'a> {
    history: &'a [f64],
}

impl<'a> AveragingModel<'a> {
    pub fn new(history: &'a [f64]) -> Self {
        Self { history }
    }

    /// Forecast of `y[origin + k]` from the four weekly lags.
    ///
    /// Only indices at or before `origin` are read because `k < 168`.
    pub fn forecast(&self, origin: usize, k: usize) -> Result<f64> {
        avg_forecast(self.history, origin, k)
    }

    /// One-step residuals `y[t] - forecast(t - 1, 1)` for `t` in `window`.
    pub fn residuals(&self, window: std::ops::Range<usize>) -> Result<Vec<f64>> {
        avg_residuals(self.history, window)
    }
}

pub fn avg_forecast(history: &[f64], origin: usize, k: usize) -> Result<f64> {
    if k == 0 || k >= HOURS_PER_WEEK {
        return Err(Error::LeadOutOfRange(k));
    }
    let target = origin + k;
    if target < WEEKS * HOURS_PER_WEEK {
        return Err(Error::InsufficientData {
            needed: WEEKS * HOURS_PER_WEEK,
            available: target,
        });
    }
    if origin >= history.len() {
        return Err(Error::InsufficientData {
            needed: origin + 1,
            available: history.len(),
        });
    }
    let sum: f64 = (1..=WEEKS).map(|j| history[target - j * HOURS_PER_WEEK]).sum();
    Ok(sum / WEEKS as f64)
}

pub fn avg_residuals(history: &[f64], window: std::ops::Range<usize>) -> Result<Vec<f64>> {
    if window.start < WEEKS * HOURS_PER_WEEK {
        return Err(Error::InsufficientData {
            needed: WEEKS * HOURS_PER_WEEK,
            available: window.start,
        });
    }
    if window.end > history.len() {
        return Err(Error::InsufficientData {
            needed: window.end,
            available: history.len(),
        });
    }
    window
        .map(|t| avg_forecast(history, t - 1, 1).map(|f| history[t] - f))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn weekly(n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 100.0 + 30.0 * ((i % HOURS_PER_WEEK) as f64 / 11.0).sin())
            .collect()
    }

    #[test]
    fn periodic_series_is_forecast_exactly() {
        let y = weekly(6 * HOURS_PER_WEEK);
        let m = AveragingModel::new(&y);
        let origin = 5 * HOURS_PER_WEEK - 1;
        for k in 1..=24 {
            assert!((m.forecast(origin, k).unwrap() - y[origin + k]).abs() < 1e-12);
        }
    }

    #[test]
    fn mean_of_four_lags() {
        let mut y = vec![0.0; 5 * HOURS_PER_WEEK];
        let target = 4 * HOURS_PER_WEEK + 10;
        for (j, v) in [100.0, 110.0, 90.0, 100.0].into_iter().enumerate() {
            y[target - (j + 1) * HOURS_PER_WEEK] = v;
        }
        assert_eq!(avg_forecast(&y, target - 3, 3).unwrap(), 100.0);
    }

    #[test]
    fn constant_series() {
        let y = vec![7.5; 5 * HOURS_PER_WEEK];
        assert_eq!(avg_forecast(&y, 4 * HOURS_PER_WEEK, 24).unwrap(), 7.5);
    }

    #[test]
    fn insufficient_history() {
        let y = vec![1.0; 5 * HOURS_PER_WEEK];
        assert!(matches!(
            avg_forecast(&y, 4 * HOURS_PER_WEEK - 3, 2),
            Err(Error::InsufficientData { .. })
        ));
        assert!(avg_forecast(&y, 4 * HOURS_PER_WEEK - 3, 3).is_ok());
        assert!(matches!(avg_forecast(&y, 700, 0), Err(Error::LeadOutOfRange(0))));
    }

    #[test]
    fn residuals_of_periodic_series_vanish() {
        let y = weekly(6 * HOURS_PER_WEEK);
        let r = avg_residuals(&y, 4 * HOURS_PER_WEEK..6 * HOURS_PER_WEEK).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn residuals_pick_up_a_last_week_offset() {
        let mut y = weekly(5 * HOURS_PER_WEEK);
        let c = 12.5;
        for v in &mut y[4 * HOURS_PER_WEEK..] {
            *v += c;
        }
        let r = avg_residuals(&y, 4 * HOURS_PER_WEEK..5 * HOURS_PER_WEEK).unwrap();
        assert!(r.iter().all(|v| (v - c).abs() < 1e-12));
    }

    #[test]
    fn single_point_residual() {
        let y: Vec<f64> = (0..5 * HOURS_PER_WEEK).map(|i| (i * i % 97) as f64).collect();
        let t = 4 * HOURS_PER_WEEK + 17;
        let r = avg_residuals(&y, t..t + 1).unwrap();
        let mean = (1..=4).map(|j| y[t - j * HOURS_PER_WEEK]).sum::<f64>() / 4.0;
        assert_eq!(r, vec![y[t] - mean]);
    }

    proptest! {
        #[test]
        fn forecast_is_linear(
            a in -3.0f64..3.0, b in -3.0f64..3.0,
            seed in 0u64..1000, k in 1usize..=24,
        ) {
            let n = 5 * HOURS_PER_WEEK;
            let y: Vec<f64> = (0..n).map(|i| ((i as u64 * 31 + seed) % 113) as f64).collect();
            let z: Vec<f64> = (0..n).map(|i| ((i as u64 * 17 + seed * 7) % 89) as f64).collect();
            let mix: Vec<f64> = y.iter().zip(&z).map(|(p, q)| a * p + b * q).collect();
            let origin = n - 30;
            let lhs = avg_forecast(&mix, origin, k).unwrap();
            let rhs = a * avg_forecast(&y, origin, k).unwrap() + b * avg_forecast(&z, origin, k).unwrap();
            prop_assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
        }

        #[test]
        fn only_weekly_lags_matter(idx in 0usize..(5 * HOURS_PER_WEEK - 30), k in 1usize..=24, bump in 1.0f64..50.0) {
            let n = 5 * HOURS_PER_WEEK;
            let origin = n - 30;
            let target = origin + k;
            let y: Vec<f64> = (0..n).map(|i| (i % 37) as f64).collect();
            let mut z = y.clone();
            z[idx] += bump;
            let is_lag = (1..=WEEKS).any(|j| target - j * HOURS_PER_WEEK == idx);
            let same = avg_forecast(&y, origin, k).unwrap() == avg_forecast(&z, origin, k).unwrap();
            prop_assert_eq!(same, !is_lag);
        }
    }
}
