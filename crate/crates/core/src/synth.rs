//! Seeded synthetic load and temperature generators for tests, benches and demos.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::series::{calendar, HourlySeries, HOURS_PER_DAY, HOURS_PER_WEEK};

/// 2013-01-07 00:00 UTC, a Monday.
pub const MONDAY: i64 = 377_088;

/// Intraday profile with mean 1.
pub fn daily_profile() -> Vec<f64> {
    let d: Vec<f64> = (0..HOURS_PER_DAY)
        .map(|h| 1.0 + 0.3 * (2.0 * PI * (h as f64 - 6.0) / 24.0).sin())
        .collect();
    normalized(d)
}

/// Intraweek profile with mean 1: a weekday trend plus an hourly ripple.
pub fn weekly_profile() -> Vec<f64> {
    let w: Vec<f64> = (0..HOURS_PER_WEEK)
        .map(|j| 1.0 + 0.2 * ((j / 24) as f64 - 3.0) / 3.0 + 0.05 * (j as f64 * 0.7).cos())
        .collect();
    normalized(w)
}

fn normalized(v: Vec<f64>) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.into_iter().map(|x| x / m).collect()
}

/// `level · D[hour of day] · W[hour of week]` over `n` hours from `start_hour`.
pub fn multiplicative(start_hour: i64, n: usize, level: f64, daily: &[f64], weekly: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let c = calendar(start_hour + i as i64);
            level * daily[usize::from(c.hour_of_day)] * weekly[c.hour_of_week()]
        })
        .collect()
}

pub fn gaussian(n: usize, sd: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            sd * z
        })
        .collect()
}

/// Zero-mean AR(1) with unit-variance innovations scaled by `sd`, after a burn-in.
pub fn ar1(n: usize, phi: f64, sd: f64, seed: u64) -> Vec<f64> {
    let burn = 200;
    let e = gaussian(n + burn, sd, seed);
    let mut x = vec![0.0; n + burn];
    for t in 1..x.len() {
        x[t] = phi * x[t - 1] + e[t];
    }
    x.split_off(burn)
}

/// Zero-mean AR(p) with standard normal innovations, after a burn-in.
pub fn ar(n: usize, coeffs: &[f64], seed: u64) -> Vec<f64> {
    let burn = 500;
    let e = gaussian(n + burn, 1.0, seed);
    let mut x = vec![0.0; n + burn];
    for t in 0..x.len() {
        x[t] = e[t]
            + coeffs
                .iter()
                .enumerate()
                .filter(|(i, _)| t > *i)
                .map(|(i, a)| a * x[t - 1 - i])
                .sum::<f64>();
    }
    x.split_off(burn)
}

/// Temperature with yearly and daily cycles in °C.
pub fn temperature(start_hour: i64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let h = (start_hour + i as i64) as f64;
            10.0 - 8.0 * (2.0 * PI * h / 8766.0).cos() + 3.0 * (2.0 * PI * (h - 9.0) / 24.0).sin()
        })
        .collect()
}

/// A strictly positive weekly-periodic load with temperature, useful as a
/// noiseless forecasting target.
pub fn periodic_series(start_hour: i64, n: usize) -> HourlySeries {
    let v = multiplicative(start_hour, n, 100.0, &daily_profile(), &weekly_profile());
    HourlySeries::new(start_hour, v, Some(temperature(start_hour, n))).expect("valid series")
}
