//! Hourly load series: ingestion, gap repair, calendar features and the
//! temperature smoothing shared by the feature builders.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Timelike, Utc};
use chrono_tz::Tz;

use crate::error::{Error, Result};

/// Intraday cycle length in hours.
pub const HOURS_PER_DAY: usize = 24;
/// Intraweek cycle length in hours.
pub const HOURS_PER_WEEK: usize = 7 * HOURS_PER_DAY;
/// Yearly cycle length in hours (24 · 365.25). Not used by any model.
pub const HOURS_PER_YEAR: usize = 8766;

/// Default longest gap that is linearly interpolated.
pub const DEFAULT_MAX_GAP: usize = 6;

/// Floor applied to loads before fitting multiplicative models.
pub const LOAD_FLOOR: f64 = 1e-3;

/// Smoothing coefficient for the building-inertia temperature channel.
pub const TEMPERATURE_SMOOTHING: f64 = 0.85;

/// Bookkeeping about what ingestion changed.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SeriesMeta {
    /// Load indices filled by [`HourlySeries::repair_gaps`].
    pub repaired: Vec<usize>,
    /// Number of gap runs found in the load channel before repair.
    pub gap_runs: usize,
    /// Temperature indices filled by repair.
    pub temp_repaired: usize,
    /// Load indices raised to [`LOAD_FLOOR`].
    pub clamped: Vec<usize>,
}

/// Equally spaced hourly observations. Missing entries are `NaN`.
///
/// Index `i` corresponds to `start_hour + i` hours since the Unix epoch (UTC).
#[derive(Debug, Clone, PartialEq)]
pub struct HourlySeries {
    start_hour: i64,
    values: Vec<f64>,
    temp: Option<Vec<f64>>,
    meta: SeriesMeta,
}

/// Hour of day and day of week (0 = Monday) of a timestamp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CalendarFeatures {
    pub hour_of_day: u8,
    pub day_of_week: u8,
}

impl CalendarFeatures {
    /// Hour within the week, Monday 00:00 = 0.
    pub fn hour_of_week(self) -> usize {
        self.day_of_week as usize * HOURS_PER_DAY + self.hour_of_day as usize
    }
}

/// Calendar features of an absolute hour (hours since the Unix epoch, UTC).
pub fn calendar(hour: i64) -> CalendarFeatures {
    // 1970-01-01 was a Thursday.
    let day = hour.div_euclid(24);
    CalendarFeatures {
        hour_of_day: hour.rem_euclid(24) as u8,
        day_of_week: (day + 3).rem_euclid(7) as u8,
    }
}

/// Calendar features of a timestamp.
pub fn calendar_of(ts: DateTime<Utc>) -> CalendarFeatures {
    calendar(ts.timestamp().div_euclid(3600))
}

/// Converts a timestamp on the hour to hours since the epoch.
pub fn hour_index(ts: DateTime<Utc>) -> Option<i64> {
    let secs = ts.timestamp();
    (secs.rem_euclid(3600) == 0).then_some(secs / 3600)
}

/// The timestamp at `hour` hours since the epoch.
pub fn hour_to_datetime(hour: i64) -> DateTime<Utc> {
    DateTime::from_timestamp(hour * 3600, 0).expect("hour index within chrono range")
}

/// Exponential smoothing `out[t] = (1 - coeff)·x[t] + coeff·out[t-1]`, seeded with `x[0]`.
pub fn exp_smooth(x: &[f64], coeff: f64) -> Result<Vec<f64>> {
    let (&first, rest) = x.split_first().ok_or(Error::EmptyInput)?;
    if !(0.0..1.0).contains(&coeff) {
        return Err(Error::InvalidArgument(format!(
            "smoothing coefficient {coeff} outside [0, 1)"
        )));
    }
    let mut out = Vec::with_capacity(x.len());
    out.push(first);
    let mut prev = first;
    for &v in rest {
        prev = (1.0 - coeff) * v + coeff * prev;
        out.push(prev);
    }
    Ok(out)
}

impl HourlySeries {
    pub fn new(start_hour: i64, values: Vec<f64>, temp: Option<Vec<f64>>) -> Result<Self> {
        if let Some(t) = &temp {
            if t.len() != values.len() {
                return Err(Error::DimensionMismatch {
                    expected: values.len(),
                    got: t.len(),
                });
            }
        }
        Ok(Self {
            start_hour,
            values,
            temp,
            meta: SeriesMeta::default(),
        })
    }

    pub fn start_hour(&self) -> i64 {
        self.start_hour
    }

    pub fn start(&self) -> DateTime<Utc> {
        hour_to_datetime(self.start_hour)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn temp(&self) -> Option<&[f64]> {
        self.temp.as_deref()
    }

    pub fn meta(&self) -> &SeriesMeta {
        &self.meta
    }

    /// Absolute hour of index `i`.
    pub fn hour_at(&self, i: usize) -> i64 {
        self.start_hour + i as i64
    }

    pub fn timestamp(&self, i: usize) -> DateTime<Utc> {
        hour_to_datetime(self.hour_at(i))
    }

    /// Index of an absolute hour, if it lies inside the series.
    pub fn index_of_hour(&self, hour: i64) -> Option<usize> {
        let off = hour - self.start_hour;
        (off >= 0 && (off as usize) < self.len()).then_some(off as usize)
    }

    pub fn calendar_at(&self, i: usize) -> CalendarFeatures {
        calendar(self.hour_at(i))
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    /// True when neither the load nor the temperature channel has gaps.
    pub fn is_complete(&self) -> bool {
        self.missing_count() == 0
            && self
                .temp
                .as_ref()
                .is_none_or(|t| t.iter().all(|v| !v.is_nan()))
    }

    /// Sub-series covering `range`, keeping metadata empty.
    pub fn slice(&self, range: std::ops::Range<usize>) -> HourlySeries {
        HourlySeries {
            start_hour: self.hour_at(range.start),
            values: self.values[range.clone()].to_vec(),
            temp: self.temp.as_ref().map(|t| t[range].to_vec()),
            meta: SeriesMeta::default(),
        }
    }

    /// Same timestamps with the load channel replaced.
    pub fn with_values(&self, values: Vec<f64>) -> Result<HourlySeries> {
        let mut out = HourlySeries::new(self.start_hour, values, self.temp.clone())?;
        out.meta = self.meta.clone();
        Ok(out)
    }

    /// Drops the temperature channel.
    pub fn without_temp(mut self) -> HourlySeries {
        self.temp = None;
        self
    }

    /// Smoothed temperature channel (coefficient 0.85).
    pub fn smoothed_temp(&self) -> Result<Vec<f64>> {
        let temp = self.temp.as_ref().ok_or(Error::MissingExogenous)?;
        if temp.iter().any(|v| v.is_nan()) {
            return Err(Error::MissingValues);
        }
        exp_smooth(temp, TEMPERATURE_SMOOTHING)
    }

    /// Fills missing entries: runs no longer than `max_gap` are linearly
    /// interpolated, longer runs copy the value one week earlier (or one week
    /// later when the series starts inside the gap's week).
    pub fn repair_gaps(&self, max_gap: usize) -> Result<HourlySeries> {
        let mut values = self.values.clone();
        let (repaired, runs) = repair_channel(&mut values, max_gap)?;
        let mut temp_repaired = 0;
        let temp = match &self.temp {
            Some(t) => {
                let mut t = t.clone();
                temp_repaired = repair_channel(&mut t, max_gap)?.0.len();
                Some(t)
            }
            None => None,
        };
        let mut meta = self.meta.clone();
        meta.repaired.extend(repaired);
        meta.repaired.sort_unstable();
        meta.gap_runs += runs;
        meta.temp_repaired += temp_repaired;
        Ok(HourlySeries {
            start_hour: self.start_hour,
            values,
            temp,
            meta,
        })
    }

    /// Raises loads below `floor` to `floor`, recording the touched indices.
    pub fn clamp_floor(&self, floor: f64) -> HourlySeries {
        let mut out = self.clone();
        for (i, v) in out.values.iter_mut().enumerate() {
            if *v < floor {
                *v = floor;
                out.meta.clamped.push(i);
            }
        }
        out
    }

    /// Writes the long CSV format `timestamp,load[,temperature]`.
    pub fn write_long_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let fmt = |v: f64| if v.is_nan() { String::new() } else { v.to_string() };
        let csv_err = |e: csv::Error| Error::Parse {
            row: 0,
            message: e.to_string(),
        };
        if self.temp.is_some() {
            w.write_record(["timestamp", "load", "temperature"])
                .map_err(csv_err)?;
        } else {
            w.write_record(["timestamp", "load"]).map_err(csv_err)?;
        }
        for i in 0..self.len() {
            let ts = self.timestamp(i).format("%Y-%m-%dT%H:%M:%SZ").to_string();
            let load = fmt(self.values[i]);
            match &self.temp {
                Some(t) => w.write_record([ts, load, fmt(t[i])]),
                None => w.write_record([ts, load]),
            }
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<writer>".into(),
            source: e,
        })
    }

    pub fn save_long_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| io_err(path, e))?;
        self.write_long_csv(std::io::BufWriter::new(file))
    }
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Returns the repaired indices and the number of gap runs.
fn repair_channel(values: &mut [f64], max_gap: usize) -> Result<(Vec<usize>, usize)> {
    let n = values.len();
    if n == 0 {
        return Ok((Vec::new(), 0));
    }
    if values.iter().all(|v| v.is_nan()) {
        return Err(Error::EmptyInput);
    }
    let mut repaired = Vec::new();
    let mut runs = 0;
    let mut i = 0;
    while i < n {
        if !values[i].is_nan() {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && values[i].is_nan() {
            i += 1;
        }
        let end = i;
        let len = end - start;
        runs += 1;
        if start == 0 || end == n {
            if len > max_gap {
                return Err(Error::UnrepairableBoundaryGap { len, max_gap });
            }
            let fill = if start == 0 { values[end] } else { values[start - 1] };
            values[start..end].fill(fill);
        } else if len <= max_gap {
            let (a, b) = (values[start - 1], values[end]);
            let span = (len + 1) as f64;
            for (j, v) in values[start..end].iter_mut().enumerate() {
                let frac = (j + 1) as f64 / span;
                *v = a + (b - a) * frac;
            }
        } else {
            for j in start..end {
                let earlier = j.checked_sub(HOURS_PER_WEEK).map(|k| values[k]);
                let later = values.get(j + HOURS_PER_WEEK).copied();
                values[j] = match (earlier, later) {
                    (Some(v), _) if !v.is_nan() => v,
                    (_, Some(v)) if !v.is_nan() => v,
                    _ => return Err(Error::UnrepairableGap { start }),
                };
            }
        }
        repaired.extend(start..end);
    }
    Ok((repaired, runs))
}

fn parse_timezone(tz: &str) -> Result<Option<Tz>> {
    if tz.eq_ignore_ascii_case("utc") || tz.is_empty() {
        return Ok(None);
    }
    Tz::from_str(tz)
        .map(Some)
        .map_err(|_| Error::UnknownTimezone(tz.to_string()))
}

/// Parses an ISO-8601 timestamp. Offsets are honoured; naive times are read in `tz`.
fn parse_timestamp(raw: &str, tz: Option<Tz>) -> Option<DateTime<Utc>> {
    let raw = raw.trim();
    if let Ok(ts) = DateTime::parse_from_rfc3339(raw) {
        return Some(ts.with_timezone(&Utc));
    }
    const NAIVE: [&str; 4] = [
        "%Y-%m-%dT%H:%M:%S",
        "%Y-%m-%d %H:%M:%S",
        "%Y-%m-%dT%H:%M",
        "%Y-%m-%d %H:%M",
    ];
    let naive = NAIVE
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
        .or_else(|| {
            NaiveDate::parse_from_str(raw, "%Y-%m-%d")
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
        })?;
    match tz {
        None => Some(Utc.from_utc_datetime(&naive)),
        Some(tz) => tz
            .from_local_datetime(&naive)
            .earliest()
            .map(|t| t.with_timezone(&Utc)),
    }
}

fn parse_value(raw: &str, row: usize, what: &str) -> Result<f64> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
        return Ok(f64::NAN);
    }
    let cleaned: String = raw.chars().filter(|c| *c != ',').collect();
    cleaned.parse::<f64>().map_err(|_| Error::Parse {
        row,
        message: format!("invalid {what} {raw:?}"),
    })
}

/// Reads `timestamp,load[,temperature]` rows. Rows may be out of order;
/// absent hours become missing entries.
pub fn read_long_csv<R: Read>(reader: R, tz: &str) -> Result<HourlySeries> {
    let tz = parse_timezone(tz)?;
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut rows: BTreeMap<i64, (f64, f64)> = BTreeMap::new();
    let mut has_temp = false;
    for (i, rec) in rdr.records().enumerate() {
        // header is row 1
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if rec.len() < 2 {
            return Err(Error::Parse {
                row,
                message: "expected at least timestamp and load".into(),
            });
        }
        let ts = parse_timestamp(&rec[0], tz).ok_or_else(|| Error::Parse {
            row,
            message: format!("invalid timestamp {:?}", &rec[0]),
        })?;
        if ts.minute() != 0 || ts.second() != 0 || ts.nanosecond() != 0 {
            return Err(Error::NonHourlySpacing(ts.to_rfc3339()));
        }
        let load = parse_value(&rec[1], row, "load")?;
        let temp = match rec.get(2) {
            Some(t) => {
                has_temp = true;
                parse_value(t, row, "temperature")?
            }
            None => f64::NAN,
        };
        let hour = ts.timestamp() / 3600;
        if rows.insert(hour, (load, temp)).is_some() {
            return Err(Error::DuplicateTimestamp(ts.to_rfc3339()));
        }
    }
    let (&first, _) = rows.first_key_value().ok_or(Error::EmptyInput)?;
    let (&last, _) = rows.last_key_value().expect("non-empty");
    let n = (last - first + 1) as usize;
    let mut values = vec![f64::NAN; n];
    let mut temp = vec![f64::NAN; n];
    for (h, (l, t)) in rows {
        let i = (h - first) as usize;
        values[i] = l;
        temp[i] = t;
    }
    HourlySeries::new(first, values, has_temp.then_some(temp))
}

pub fn load_long_csv(path: &Path, tz: &str) -> Result<HourlySeries> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    read_long_csv(std::io::BufReader::new(file), tz)
}

/// One day of 24 hourly values keyed by (id, date).
type WideTable = BTreeMap<NaiveDate, [f64; 24]>;

fn read_wide<R: Read>(reader: R, wanted_id: u32) -> Result<(WideTable, bool)> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut table = WideTable::new();
    let mut seen = false;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if rec.len() < 28 {
            return Err(Error::Parse {
                row,
                message: format!("expected 28 fields, found {}", rec.len()),
            });
        }
        let int = |k: usize| -> Result<u32> {
            rec[k].trim().parse::<u32>().map_err(|_| Error::Parse {
                row,
                message: format!("invalid integer {:?}", &rec[k]),
            })
        };
        if int(0)? != wanted_id {
            continue;
        }
        seen = true;
        let date = NaiveDate::from_ymd_opt(int(1)? as i32, int(2)?, int(3)?).ok_or_else(|| {
            Error::Parse {
                row,
                message: "invalid calendar date".into(),
            }
        })?;
        let mut day = [f64::NAN; 24];
        for (h, slot) in day.iter_mut().enumerate() {
            *slot = parse_value(&rec[4 + h], row, "hourly value")?;
        }
        if table.insert(date, day).is_some() {
            return Err(Error::DuplicateTimestamp(date.to_string()));
        }
    }
    Ok((table, seen))
}

fn date_hour(date: NaiveDate) -> i64 {
    date.and_hms_opt(0, 0, 0)
        .expect("midnight exists")
        .and_utc()
        .timestamp()
        / 3600
}

/// Reads the competition's wide layout (`id,year,month,day,h1..h24`) for one
/// zone and aligns one temperature station to it. Column `h1` is hour 00:00.
pub fn read_gefcom_wide<R1: Read, R2: Read>(
    load: R1,
    temp: R2,
    zone: u32,
    station: u32,
) -> Result<HourlySeries> {
    let (loads, seen) = read_wide(load, zone)?;
    if !seen {
        return Err(Error::ZoneNotFound(zone));
    }
    let (temps, seen) = read_wide(temp, station)?;
    if !seen {
        return Err(Error::StationNotFound(station));
    }
    let (&first, _) = loads.first_key_value().ok_or(Error::EmptyInput)?;
    let (&last, _) = loads.last_key_value().expect("non-empty");
    let start = date_hour(first);
    let n = (date_hour(last) - start + 24) as usize;
    let mut values = vec![f64::NAN; n];
    let mut temp = vec![f64::NAN; n];
    for (date, day) in &loads {
        let off = (date_hour(*date) - start) as usize;
        values[off..off + 24].copy_from_slice(day);
    }
    for (date, day) in &temps {
        let off = date_hour(*date) - start;
        if off < 0 || off as usize >= n {
            continue;
        }
        let off = off as usize;
        temp[off..off + 24].copy_from_slice(day);
    }
    HourlySeries::new(start, values, Some(temp))
}

pub fn load_gefcom_wide(
    load_path: &Path,
    temp_path: &Path,
    zone: u32,
    station: u32,
) -> Result<HourlySeries> {
    let l = File::open(load_path).map_err(|e| io_err(load_path, e))?;
    let t = File::open(temp_path).map_err(|e| io_err(temp_path, e))?;
    read_gefcom_wide(
        std::io::BufReader::new(l),
        std::io::BufReader::new(t),
        zone,
        station,
    )
}
