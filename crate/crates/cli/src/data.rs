//! Loading and repairing configured series.

use stlf_core::narxrf::Exogenous;
use stlf_core::series::{load_gefcom_wide, load_long_csv};
use stlf_core::{Error, HourlySeries};

use crate::config::{DataEntry, DataFormat};
use crate::error::Result;

/// A repaired series plus temperature that runs past the last observed load.
#[derive(Debug, Clone)]
pub struct Ingested {
    /// Loads through the last observed hour, gaps repaired.
    pub series: HourlySeries,
    /// Repaired temperature over the whole file, which may extend beyond the
    /// loads (temperature known ahead of time).
    pub temp: Option<Vec<f64>>,
    /// Hours after the last observed load that carry only temperature.
    pub trailing_unobserved: usize,
    /// Missing load hours before repair.
    pub missing_hours: usize,
}

impl Ingested {
    pub fn exogenous(&self) -> Option<Exogenous> {
        let temp = self.temp.clone()?;
        let mut loads = self.series.values().to_vec();
        loads.resize(temp.len(), f64::NAN);
        let extended = HourlySeries::new(self.series.start_hour(), loads, Some(temp)).ok()?;
        Exogenous::from_series(&extended).ok()
    }

    /// Hours with a load at or below zero.
    pub fn nonpositive_hours(&self) -> usize {
        self.series.values().iter().filter(|v| **v <= 0.0).count()
    }
}

pub fn read_entry(entry: &DataEntry) -> Result<HourlySeries> {
    let s = match entry.format {
        DataFormat::Long => load_long_csv(&entry.path, &entry.tz)?,
        DataFormat::Gefcom => load_gefcom_wide(
            &entry.path,
            entry.temp_path.as_deref().expect("validated"),
            entry.zone.expect("validated"),
            entry.station.expect("validated"),
        )?,
    };
    Ok(s)
}

/// Reads an entry, drops trailing hours without load (keeping their
/// temperature) and repairs gaps in both channels.
pub fn ingest(entry: &DataEntry, max_gap: usize) -> Result<Ingested> {
    repair(read_entry(entry)?, max_gap)
}

pub fn repair(raw: HourlySeries, max_gap: usize) -> Result<Ingested> {
    let observed = raw
        .values()
        .iter()
        .rposition(|v| !v.is_nan())
        .ok_or(Error::EmptyInput)?
        + 1;
    let missing_hours = raw.values()[..observed].iter().filter(|v| v.is_nan()).count();
    let series = raw.slice(0..observed).repair_gaps(max_gap)?;
    let temp = match raw.temp() {
        Some(t) if observed < raw.len() => {
            let only_temp = HourlySeries::new(raw.start_hour(), t.to_vec(), None)?;
            Some(only_temp.repair_gaps(max_gap)?.values().to_vec())
        }
        _ => series.temp().map(<[f64]>::to_vec),
    };
    Ok(Ingested {
        trailing_unobserved: raw.len() - observed,
        series,
        temp,
        missing_hours,
    })
}
