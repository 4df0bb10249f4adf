//! Acceptance suite: one PASS/FAIL/SKIP line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! Exits nonzero when a criterion fails that is not listed in
//! `KNOWN_FAILURES`; known failures are still printed as FAIL.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use stlf_cli::config::{DataEntry, DataFormat};
use stlf_cli::data::ingest;
use stlf_cli::report::write_report;
use stlf_core::arima::{css_fit, ljung_box, stepwise_select, ArmaSpec};
use stlf_core::dshw::{objective_multih, DshwParams, DshwVariant};
use stlf_core::eval::{
    aggregate_medians, benchmark, fit_model, make_test_windows, mape_per_horizon, rolling_forecast, BenchmarkConfig,
    EvalReport, FitOptions, ForecastMatrix, ModelKind, SeriesInput, TestWindow,
};
use stlf_core::narxrf::{fit_forest, Dataset, Exogenous, ForestParams};
use stlf_core::synth::{ar, ar1, daily_profile, gaussian, multiplicative, periodic_series, weekly_profile, MONDAY};
use stlf_core::HourlySeries;

/// Criteria measured to fail; see the decisions ledger for the analysis.
const KNOWN_FAILURES: &[u32] = &[4];

enum Outcome {
    Pass(String),
    Fail(String),
    Skip(String),
}

use Outcome::{Fail, Pass, Skip};

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn within(limit: Duration, t: Instant) -> (bool, String) {
    let e = t.elapsed();
    (e <= limit, format!("{:.1}s of {}s", e.as_secs_f64(), limit.as_secs()))
}

fn noisy(base: &[f64], noise: &[f64]) -> Vec<f64> {
    base.iter().zip(noise).map(|(a, b)| a + b).collect()
}

// 1. GEFCom2012 zone 1, all five models, four test weeks.
fn gefcom_zone1() -> Outcome {
    let Some(dir) = std::env::var_os("STLF_GEFCOM_DIR").map(PathBuf::from) else {
        return Skip("STLF_GEFCOM_DIR not set".into());
    };
    let load = dir.join("Load_history.csv");
    let temp = dir.join("temperature_history.csv");
    if !load.is_file() || !temp.is_file() {
        return Skip(format!("Load_history.csv or temperature_history.csv missing in {}", dir.display()));
    }
    let station = std::env::var("STLF_GEFCOM_STATION")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1);
    let entry = DataEntry {
        id: "zone1".into(),
        dataset: "gefcom".into(),
        format: DataFormat::Gefcom,
        path: load,
        tz: "UTC".into(),
        temp_path: Some(temp),
        zone: Some(1),
        station: Some(station),
    };
    let t0 = Instant::now();
    let series = match ingest(&entry, stlf_core::series::DEFAULT_MAX_GAP) {
        Ok(i) => i.series,
        Err(e) => return Fail(format!("ingestion failed: {e}")),
    };
    let input = SeriesInput {
        id: entry.id,
        dataset: entry.dataset,
        series,
    };
    let out = benchmark(&[input], &ModelKind::ALL, &BenchmarkConfig::default());
    if !out.failures.is_empty() {
        return Fail(format!("{} tasks failed: {}", out.failures.len(), out.failures[0].message));
    }
    let rows = aggregate_medians(&out.reports);
    let med = |m: ModelKind, k: usize| {
        rows.iter()
            .find(|r| r.model == m && r.horizon == k)
            .and_then(|r| r.per_window)
            .unwrap_or(f64::NAN)
    };
    let mod_wins = (1..=24)
        .filter(|&k| med(ModelKind::ModDshw, k) <= med(ModelKind::OrigDshw, k))
        .count();
    let arima_best = (1..=24)
        .filter(|&k| {
            let best = ModelKind::ALL.iter().map(|&m| med(m, k)).fold(f64::INFINITY, f64::min);
            med(ModelKind::AvgArima, k) <= best
        })
        .count();
    let train = |m: ModelKind| {
        let v: Vec<f64> = out.reports.iter().filter(|r| r.model == m).map(|r| r.train_seconds).collect();
        stlf_core::eval::median(&v).unwrap_or(f64::NAN)
    };
    let ratio = train(ModelKind::NarxRf) / train(ModelKind::ModDshw);
    let (fast, time) = within(Duration::from_secs(30 * 60), t0);
    verdict(
        mod_wins >= 20 && arima_best == 0 && ratio >= 10.0 && fast,
        format!(
            "(a) modDSHW <= origDSHW at {mod_wins}/24 horizons; (b) avgARIMA best at {arima_best} horizons; \
             (c) NARX-RF/modDSHW training time {ratio:.1}x; {time}"
        ),
    )
}

// 2. Noiseless multiplicative series recovered by modDSHW.
fn dshw_exact_recovery() -> Outcome {
    let t0 = Instant::now();
    let train = 2160;
    let v = multiplicative(MONDAY, train + 168, 100.0, &daily_profile(), &weekly_profile());
    let s = HourlySeries::new(MONDAY, v, None).unwrap();
    let m = fit_model(ModelKind::ModDshw, &s, train, &FitOptions::default(), 0).unwrap();
    let w = TestWindow {
        week: 0,
        start: train,
        len: 168,
    };
    let mape = mape_per_horizon(&rolling_forecast(&m, &s, None, &w).unwrap()).unwrap();
    let worst = mape.mape.iter().map(|m| m.unwrap()).fold(0.0, f64::max);
    let (fast, time) = within(Duration::from_secs(10), t0);
    verdict(worst < 0.1 && fast, format!("worst horizon MAPE {worst:.2e}%; {time}"))
}

// 3. objective_multih against an independent double loop.
fn dshw_recursion_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let y: Vec<f64> = (0..2160).map(|_| rng.gen_range(10.0..200.0)).collect();
    let s = HourlySeries::new(MONDAY + 5, y.clone(), None).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..5 {
        let p = DshwParams::new(
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            rng.gen_range(0.0..1.0),
            DshwVariant::Modified,
        );
        let fast = objective_multih(&p, &s).unwrap();
        let slow = common::naive_multih_sse(&y, s.start_hour(), &p, 24);
        worst = worst.max((fast - slow).abs() / slow);
    }
    verdict(worst <= 1e-9, format!("max relative difference {worst:.1e} over 5 parameter draws"))
}

// 4. AR(1) recovery and stepwise search against the exhaustive grid.
fn arma_recovery() -> Outcome {
    let t0 = Instant::now();
    let x = ar1(5000, 0.8, 1.0, 1);
    let phi = css_fit(&x, ArmaSpec::new(1, 0, 0, false)).unwrap().ar[0];
    let n = 1000;
    let stepwise_nanos = AtomicU64::new(0);
    // draws are independent, so they run in parallel
    let close = (0..20u64)
        .into_par_iter()
        .filter(|&seed| {
            let x = ar(n, &[0.5, 0.3], 300 + seed);
            let t = Instant::now();
            let fit = stepwise_select(&x).unwrap();
            stepwise_nanos.fetch_add(t.elapsed().as_nanos() as u64, Ordering::Relaxed);
            fit.aicc().unwrap() <= common::grid_best_aicc(&x, fit.spec.d) + 2.0
        })
        .count();
    let (fast, time) = within(Duration::from_secs(60), t0);
    let stepwise = stepwise_nanos.into_inner() as f64 * 1e-9;
    verdict(
        (phi - 0.8).abs() <= 0.05 && close >= 18 && fast,
        format!(
            "AR(1) phi {phi:.3}; stepwise within 2 AICc of the grid on {close}/20 AR(2) draws (n={n}); \
             {time}, of which stepwise search {stepwise:.1}s and the grid oracle the rest"
        ),
    )
}

// 5. avgARIMA residuals are whiter than plain averaging residuals.
fn avg_arima_whitening() -> Outcome {
    let n = 672 + 2160 + 168;
    let base = multiplicative(MONDAY, n, 100.0, &daily_profile(), &weekly_profile());
    let w = TestWindow {
        week: 0,
        start: n - 168,
        len: 168,
    };
    let one_step = |kind, s: &HourlySeries| -> Vec<f64> {
        let m = fit_model(kind, s, w.start, &FitOptions::default(), 0).unwrap();
        let fm = rolling_forecast(&m, s, None, &w).unwrap();
        fm.values.iter().zip(&fm.actuals).map(|(f, y)| y[0] - f[0]).collect()
    };
    let mut wins = 0;
    let mut detail = Vec::new();
    for seed in 0..10 {
        let s = HourlySeries::new(MONDAY, noisy(&base, &ar1(n, 0.8, 1.0, 900 + seed)), None).unwrap();
        let a = ljung_box(&one_step(ModelKind::AvgArima, &s), 20);
        let b = ljung_box(&one_step(ModelKind::Avg, &s), 20);
        wins += usize::from(a < b);
        detail.push(format!("{a:.0}<{b:.0}"));
    }
    verdict(wins == 10, format!("{wins}/10 seeds; Q(20) avgARIMA<avg: {}", detail.join(" ")))
}

// 6. Forest sanity checks.
fn forest_sanity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let rows: Vec<Vec<f64>> = (0..3000).map(|_| (0..12).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
    let data = Dataset::from_rows(12, &rows);
    let y: Vec<f64> = rows.iter().map(|r| r[0] * r[3] + r[5].sin() + rng.gen::<f64>()).collect();
    let params = ForestParams::default();

    let flat = fit_forest(&data, &vec![7.25; rows.len()], &params, 1).unwrap();
    let queries: Vec<Vec<f64>> = (0..10_000).map(|_| (0..12).map(|_| rng.gen_range(-100.0..100.0)).collect()).collect();
    let constant = queries.iter().all(|q| flat.predict(q).unwrap() == 7.25);

    let f = fit_forest(&data, &y, &params, 2).unwrap();
    let lo = y.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let bounded = queries.iter().all(|q| (lo..=hi).contains(&f.predict(q).unwrap()));

    let rerun = fit_forest(&data, &y, &params, 2).unwrap() == f;
    let on = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| fit_forest(&data, &y, &params, 2).unwrap())
    };
    let workers = on(1) == on(8);
    verdict(
        constant && bounded && rerun && workers,
        format!(
            "constant target exact: {constant}; 10^4 queries in range: {bounded}; \
             identical rerun: {rerun}; 1 vs 8 workers identical: {workers}"
        ),
    )
}

// 7. Forecasts from origin t never depend on loads after t.
fn causality_audit() -> Outcome {
    let start = 359_400; // 2011-01-01
    let base = periodic_series(start, 8761);
    let s = HourlySeries::new(
        start,
        noisy(base.values(), &gaussian(8761, 2.0, 7)),
        base.temp().map(<[f64]>::to_vec),
    )
    .unwrap();
    let exo = Exogenous::from_series(&s).unwrap();
    let w = make_test_windows(&s).unwrap()[1];
    let opts = FitOptions {
        forest: ForestParams {
            ntree: 50,
            ..ForestParams::default()
        },
        ..FitOptions::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(70);
    let mut origins: Vec<usize> = w.origins().collect();
    for i in (1..origins.len()).rev() {
        origins.swap(i, rng.gen_range(0..=i));
    }
    origins.truncate(100);
    let mut violations = Vec::new();
    for kind in ModelKind::ALL {
        let m = fit_model(kind, &s, w.start, &opts, 9).unwrap();
        for &t in &origins {
            // run the window up to origin t only
            let upto = TestWindow {
                len: t + 2 - w.start,
                ..w
            };
            let clean = last_path(rolling_forecast(&m, &s, Some(&exo), &upto).unwrap());
            let mut tail = s.values().to_vec();
            for v in &mut tail[t + 1..] {
                *v = rng.gen_range(0.5..500.0);
            }
            let mut single = s.values().to_vec();
            let j = rng.gen_range(t + 1..single.len());
            single[j] *= 10.0;
            for v in [tail, single] {
                let poisoned = s.with_values(v).unwrap();
                let got = last_path(rolling_forecast(&m, &poisoned, Some(&exo), &upto).unwrap());
                if got != clean {
                    violations.push(format!("{kind}@{t}"));
                }
            }
        }
    }
    verdict(
        violations.is_empty(),
        format!(
            "{} origins x {} models x 2 perturbations; violations: {}",
            origins.len(),
            ModelKind::ALL.len(),
            if violations.is_empty() { "none".into() } else { violations.join(" ") }
        ),
    )
}

fn last_path(fm: ForecastMatrix) -> Vec<f64> {
    fm.values.last().cloned().unwrap_or_default()
}

// 8. Hand-computed MAPE and zero-actual exclusion.
fn mape_arithmetic() -> Outcome {
    let fm = ForecastMatrix {
        origins: vec![0, 1, 2],
        values: vec![vec![110.0, 5.0], vec![190.0, 3.0], vec![1.0, 2.0]],
        actuals: vec![vec![100.0, 0.0], vec![200.0, 0.0], vec![0.0, 0.0]],
    };
    let m = mape_per_horizon(&fm).unwrap();
    let h1 = m.mape[0].unwrap();
    let exact = (h1 - 7.5).abs() <= 1e-12;
    let counted = m.excluded[..2] == [1, 3] && m.mape[1].is_none();

    let report = EvalReport {
        series_id: "s".into(),
        dataset: "d".into(),
        model: ModelKind::Avg,
        week: 16,
        mape: m,
        train_seconds: 0.0,
        forecast_seconds: 0.0,
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.csv");
    write_report(&path, &[report], false).unwrap();
    let csv = std::fs::read_to_string(&path).unwrap();
    let rows: Vec<Vec<String>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    let reported = rows.len() == 2
        && rows[0][5].parse::<f64>().is_ok_and(|v| (v - 7.5).abs() <= 1e-12)
        && rows[0][6] == "1"
        && rows[1][5].is_empty()
        && rows[1][6] == "3";
    verdict(
        exact && counted && reported,
        format!("MAPE_1 = {h1} (|error| {:.1e}); exclusions counted: {counted}; in report: {reported}", (h1 - 7.5).abs()),
    )
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        (1, "GEFCom2012 zone-1 ordinal claims", gefcom_zone1),
        (2, "DSHW exact recovery", dshw_exact_recovery),
        (3, "DSHW recursion oracle", dshw_recursion_oracle),
        (4, "ARMA recovery", arma_recovery),
        (5, "avgARIMA whitening", avg_arima_whitening),
        (6, "forest sanity", forest_sanity),
        (7, "harness causality audit", causality_audit),
        (8, "MAPE arithmetic", mape_arithmetic),
    ];
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let t0 = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Fail(format!("panicked: {msg}"))
        });
        let secs = t0.elapsed().as_secs_f64();
        let known = KNOWN_FAILURES.contains(&id);
        let (tag, detail) = match outcome {
            Pass(d) if known => ("PASS", format!("{d} (listed as a known failure)")),
            Pass(d) => ("PASS", d),
            Skip(d) => ("SKIP", d),
            Fail(d) if known => ("FAIL", format!("{d} (known failure)")),
            Fail(d) => {
                unexpected.push(id);
                ("FAIL", d)
            }
        };
        println!("criterion {id} {tag}: {name}: {detail} [{secs:.1}s]");
    }
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("unexpected failures: {unexpected:?}");
        ExitCode::FAILURE
    }
}
