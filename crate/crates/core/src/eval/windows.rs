//! Test-week selection in the final year of a series.

use std::ops::Range;

use chrono::{Datelike, NaiveDate};

use crate::baseline::WEEKS;
use crate::error::{Error, Result};
use crate::series::{hour_index, HourlySeries, HOURS_PER_DAY, HOURS_PER_WEEK};

/// Weeks of the year used as test periods. The last one runs to the end of
/// the year, so it absorbs the one or two trailing days of week 53.
pub const TEST_WEEKS: [u32; 4] = [16, 28, 40, 52];

/// Shortest series accepted (one non-leap year).
pub const MIN_SPAN_HOURS: usize = 365 * HOURS_PER_DAY;

/// A block of consecutive target hours forecast without refitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TestWindow {
    pub week: u32,
    /// Index of the first target hour in the series.
    pub start: usize,
    /// Number of target hours (shorter than nominal when the series ends early).
    pub len: usize,
}

impl TestWindow {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }

    pub fn end(&self) -> usize {
        self.start + self.len
    }

    /// Forecast origins: the hour before the window through its penultimate hour.
    pub fn origins(&self) -> Range<usize> {
        self.start - 1..self.end() - 1
    }

    /// Number of leads emitted at `origin` (capped by the window end).
    pub fn horizons_at(&self, origin: usize, max_lead: usize) -> usize {
        max_lead.min(self.end() - 1 - origin)
    }
}

/// First and one-past-last absolute hour of week `week` of `year`, where week
/// `n` is days `7(n−1)+1 ..= 7n` of the year and the last test week runs to
/// December 31.
fn week_hours(year: i32, week: u32) -> (i64, i64) {
    let jan1 = NaiveDate::from_ymd_opt(year, 1, 1).expect("valid year");
    let start_day = jan1 + chrono::Days::new(u64::from(7 * (week - 1)));
    let end_day = if week == TEST_WEEKS[TEST_WEEKS.len() - 1] {
        NaiveDate::from_ymd_opt(year + 1, 1, 1).expect("valid year")
    } else {
        start_day + chrono::Days::new(7)
    };
    let h = |d: NaiveDate| hour_index(d.and_hms_opt(0, 0, 0).expect("midnight").and_utc()).expect("on the hour");
    (h(start_day), h(end_day))
}

/// Test windows of the final year: the calendar year of the last observation,
/// or the year before when the series stops before week 40 of that year
/// begins. Windows past the end of the series are dropped; one that the series
/// enters but does not finish is truncated.
pub fn make_test_windows(series: &HourlySeries) -> Result<Vec<TestWindow>> {
    if series.len() < MIN_SPAN_HOURS {
        return Err(Error::SpanTooShort(format!(
            "{} hours, need at least {MIN_SPAN_HOURS}",
            series.len()
        )));
    }
    let first = series.start_hour();
    let last = series.hour_at(series.len() - 1);
    let mut year = series.timestamp(series.len() - 1).year();
    if week_hours(year, TEST_WEEKS[2]).0 > last {
        year -= 1;
    }
    let min_start = first + (WEEKS * HOURS_PER_WEEK) as i64 + 1;
    let mut windows = Vec::new();
    for &week in &TEST_WEEKS {
        let (a, b) = week_hours(year, week);
        if a > last {
            break;
        }
        if a < min_start {
            return Err(Error::SpanTooShort(format!(
                "week {week} of {year} starts before the required training history"
            )));
        }
        let b = b.min(last + 1);
        windows.push(TestWindow {
            week,
            start: (a - first) as usize,
            len: (b - a) as usize,
        });
    }
    Ok(windows)
}
