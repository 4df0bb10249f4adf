//! Independent reference computations used as test oracles.
#![allow(dead_code)]

use stlf_core::arima::{css_fit, ArmaFit, ArmaSpec};
use stlf_core::dshw::DshwParams;

/// Hour of day and hour of week (Monday 00:00 = 0) of an absolute hour.
fn slots(hour: i64) -> (usize, usize) {
    let day = hour.div_euclid(24);
    let hod = hour.rem_euclid(24) as usize;
    let dow = (day + 3).rem_euclid(7) as usize;
    (hod, dow * 24 + hod)
}

/// The DSHW multi-horizon in-sample SSE recomputed with time-indexed arrays
/// `l[t]`, `d[t]`, `w[t]` and a fresh forecast for every (origin, lead) pair.
pub fn naive_multih_sse(y: &[f64], start_hour: i64, p: &DshwParams, max_lead: usize) -> f64 {
    let n = y.len();
    let init = 336;

    // Initialization over the first two weeks.
    let l0 = y[..init].iter().sum::<f64>() / init as f64;
    let mut dsum = [0.0; 24];
    let mut dcnt = [0.0; 24];
    for day in 0..14 {
        let block = &y[day * 24..day * 24 + 24];
        let m = block.iter().sum::<f64>() / 24.0;
        for (j, v) in block.iter().enumerate() {
            let (hod, _) = slots(start_hour + (day * 24 + j) as i64);
            dsum[hod] += v / m;
            dcnt[hod] += 1.0;
        }
    }
    let mut dinit: Vec<f64> = (0..24).map(|h| dsum[h] / dcnt[h]).collect();
    let dm = dinit.iter().sum::<f64>() / 24.0;
    dinit.iter_mut().for_each(|v| *v /= dm);
    let mut wsum = vec![0.0; 168];
    let mut wcnt = vec![0.0; 168];
    for (i, v) in y[..init].iter().enumerate() {
        let (hod, how) = slots(start_hour + i as i64);
        wsum[how] += v / (l0 * dinit[hod]);
        wcnt[how] += 1.0;
    }
    let mut winit: Vec<f64> = (0..168).map(|j| wsum[j] / wcnt[j]).collect();
    let wm = winit.iter().sum::<f64>() / 168.0;
    winit.iter_mut().for_each(|v| *v /= wm);
    let l_init = l0 * wm;

    // Time-indexed trajectories; entries before `init` hold the initial rings.
    let mut l = vec![f64::NAN; n];
    let mut d = vec![f64::NAN; n];
    let mut w = vec![f64::NAN; n];
    for t in init - 168..init {
        let (hod, how) = slots(start_hour + t as i64);
        d[t] = dinit[hod];
        w[t] = winit[how];
    }
    l[init - 1] = l_init;
    let mut e = vec![f64::NAN; n];
    e[init - 1] = y[init - 1] - l_init * d[init - 1] * w[init - 1];
    for t in init..n {
        let fitted = l[t - 1] * d[t - 24] * w[t - 168];
        e[t] = y[t] - fitted;
        l[t] = p.alpha * y[t] / (d[t - 24] * w[t - 168]) + (1.0 - p.alpha) * l[t - 1];
        d[t] = p.theta * y[t] / (l[t] * w[t - 168]) + (1.0 - p.theta) * d[t - 24];
        w[t] = p.omega * y[t] / (l[t] * d[t - 24]) + (1.0 - p.omega) * w[t - 168];
    }

    let mut per_lead = vec![0.0; max_lead];
    for (k, acc) in per_lead.iter_mut().enumerate().map(|(i, a)| (i + 1, a)) {
        for t in init - 1..n.saturating_sub(k) {
            let yhat = l[t] * d[t + k - 24] * w[t + k - 168] + p.phi.powi(k as i32) * e[t];
            *acc += (y[t + k] - yhat).powi(2);
        }
    }
    per_lead.iter().sum()
}

/// Lag-`k` sample autocorrelation.
pub fn autocorr(x: &[f64], k: usize) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let c0: f64 = x.iter().map(|v| (v - m).powi(2)).sum();
    let ck: f64 = x.windows(k + 1).map(|w| (w[0] - m) * (w[k] - m)).sum();
    ck / c0
}

/// Yule-Walker AR(1) estimate.
pub fn yule_walker_ar1(x: &[f64]) -> f64 {
    autocorr(x, 1)
}

/// Invertible MA(1) coefficient matching lag-1 autocorrelation `rho`.
pub fn ma1_from_rho(rho: f64) -> f64 {
    // rho = θ / (1 + θ²)  =>  θ = (1 − sqrt(1 − 4ρ²)) / (2ρ)
    (1.0 - (1.0 - 4.0 * rho * rho).sqrt()) / (2.0 * rho)
}

/// Lowest AICc over every (p, q) ≤ (5, 5) with and without a mean, skipping
/// fits with a root modulus below 1.01 as the stepwise search does.
pub fn grid_best_aicc(x: &[f64], d: usize) -> f64 {
    let mut best = f64::INFINITY;
    for p in 0..=5 {
        for q in 0..=5 {
            for mean in [false, true] {
                if d == 1 && mean {
                    continue;
                }
                let Ok(fit) = css_fit(x, ArmaSpec::new(p, d, q, mean)) else {
                    continue;
                };
                if min_root_modulus(&fit) < 1.01 {
                    continue;
                }
                if let Ok(a) = fit.aicc() {
                    best = best.min(a);
                }
            }
        }
    }
    best
}

/// Complex roots of `1 − c1·z − c2·z² − …` (sign = −1) or `1 + c1·z + …`
/// (sign = +1) by Durand–Kerner iteration; returns their moduli.
pub fn poly_root_moduli(coeffs: &[f64], sign: f64) -> Vec<f64> {
    let n = coeffs.len();
    if n == 0 {
        return Vec::new();
    }
    // Monic polynomial in z: divide by the leading coefficient.
    let lead = sign * coeffs[n - 1];
    // a[i] is the coefficient of z^i.
    let mut a = vec![1.0];
    a.extend(coeffs.iter().map(|c| sign * c));
    let a: Vec<(f64, f64)> = a.iter().map(|v| (v / lead, 0.0)).collect();
    let eval = |z: (f64, f64)| {
        let mut acc = (0.0, 0.0);
        for c in a.iter().rev() {
            acc = (acc.0 * z.0 - acc.1 * z.1 + c.0, acc.0 * z.1 + acc.1 * z.0 + c.1);
        }
        acc
    };
    let mut roots: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let ang = 0.4 + 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            (1.3 * ang.cos(), 1.3 * ang.sin())
        })
        .collect();
    for _ in 0..2000 {
        for i in 0..n {
            let zi = roots[i];
            let mut den = (1.0, 0.0);
            for (j, zj) in roots.iter().enumerate() {
                if j != i {
                    let diff = (zi.0 - zj.0, zi.1 - zj.1);
                    den = (den.0 * diff.0 - den.1 * diff.1, den.0 * diff.1 + den.1 * diff.0);
                }
            }
            let num = eval(zi);
            let norm = den.0 * den.0 + den.1 * den.1;
            let q = ((num.0 * den.0 + num.1 * den.1) / norm, (num.1 * den.0 - num.0 * den.1) / norm);
            roots[i] = (zi.0 - q.0, zi.1 - q.1);
        }
    }
    roots.iter().map(|r| r.0.hypot(r.1)).collect()
}

pub fn min_root_modulus(fit: &ArmaFit) -> f64 {
    poly_root_moduli(&fit.ar, -1.0)
        .into_iter()
        .chain(poly_root_moduli(&fit.ma, 1.0))
        .fold(f64::INFINITY, f64::min)
}

/// Checks stationarity and invertibility of a fit through its root moduli.
pub fn roots_outside_unit_circle(fit: &ArmaFit) -> bool {
    poly_root_moduli(&fit.ar, -1.0)
        .into_iter()
        .chain(poly_root_moduli(&fit.ma, 1.0))
        .all(|m| m > 1.0 + 1e-6)
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}
