//! Run configuration, read from a TOML file.
//!
//! ```toml
//! seed = 7
//! output_dir = "out"
//! models = ["avg", "moddshw", "narxrf"]
//! jobs = 4
//!
//! [train_months]
//! moddshw = 3
//! narxrf = "all"
//!
//! [[data]]
//! id = "zone1"
//! dataset = "gefcom"
//! format = "gefcom"
//! path = "Load_history.csv"
//! temp_path = "temperature_history.csv"
//! zone = 1
//! station = 1
//! ```
//!
//! Relative paths are resolved against the directory holding the file.

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::Deserialize;
use stlf_core::eval::{FitOptions, ModelKind};
use stlf_core::series::{DEFAULT_MAX_GAP, HOURS_PER_DAY};

use crate::error::{CliError, Result};

/// Hours per configured training month.
pub const HOURS_PER_MONTH: usize = 30 * HOURS_PER_DAY;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Long,
    Gefcom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataEntry {
    pub id: String,
    pub dataset: String,
    pub format: DataFormat,
    pub path: PathBuf,
    /// Timezone of naive timestamps in long files.
    pub tz: String,
    pub temp_path: Option<PathBuf>,
    pub zone: Option<u32>,
    pub station: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub data: Vec<DataEntry>,
    pub models: Vec<ModelKind>,
    pub fit: FitOptions,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Worker threads; `None` uses every core.
    pub jobs: Option<usize>,
    /// Write measured fit and forecast times into the report. Off makes the
    /// report byte-reproducible.
    pub record_timing: bool,
    pub max_gap: usize,
    /// Let `forecast` fit a model when no saved one exists.
    pub fit_on_demand: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    seed: u64,
    output_dir: PathBuf,
    models: Vec<String>,
    jobs: Option<usize>,
    #[serde(default = "yes")]
    record_timing: bool,
    max_gap: Option<usize>,
    #[serde(default = "yes")]
    fit_on_demand: bool,
    #[serde(default)]
    train_months: BTreeMap<String, TrainSpan>,
    #[serde(default)]
    data: Vec<RawEntry>,
}

fn yes() -> bool {
    true
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TrainSpan {
    Months(usize),
    Keyword(String),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEntry {
    id: String,
    #[serde(default = "default_dataset")]
    dataset: String,
    format: DataFormat,
    path: PathBuf,
    #[serde(default = "default_tz")]
    tz: String,
    temp_path: Option<PathBuf>,
    zone: Option<u32>,
    station: Option<u32>,
}

fn default_dataset() -> String {
    "default".into()
}

fn default_tz() -> String {
    "UTC".into()
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses and validates a configuration; relative paths are joined to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| config_err(e.to_string()))?;
        if raw.models.is_empty() {
            return Err(config_err("no models listed"));
        }
        if raw.data.is_empty() {
            return Err(config_err("no [[data]] entries"));
        }
        let mut models = Vec::new();
        for name in &raw.models {
            let kind: ModelKind = name.parse().map_err(|_| config_err(format!("unknown model {name:?}")))?;
            if models.contains(&kind) {
                return Err(config_err(format!("model {name:?} listed twice")));
            }
            models.push(kind);
        }
        let mut fit = FitOptions::default();
        for (name, span) in &raw.train_months {
            let kind: ModelKind = name
                .parse()
                .map_err(|_| config_err(format!("unknown model {name:?} in [train_months]")))?;
            let hours = match span {
                TrainSpan::Months(0) => return Err(config_err(format!("train_months.{name} must be positive"))),
                TrainSpan::Months(m) => Some(m * HOURS_PER_MONTH),
                TrainSpan::Keyword(k) if k == "all" => None,
                TrainSpan::Keyword(k) => {
                    return Err(config_err(format!("train_months.{name} = {k:?}: expected a count or \"all\"")))
                }
            };
            fit.set_train_hours(kind, hours);
        }
        if raw.jobs == Some(0) {
            return Err(config_err("jobs must be at least 1"));
        }
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut ids = HashSet::new();
        let mut data = Vec::new();
        for e in raw.data {
            if !ids.insert(e.id.clone()) {
                return Err(config_err(format!("duplicate series id {:?}", e.id)));
            }
            let entry = DataEntry {
                path: resolve(&e.path),
                temp_path: e.temp_path.as_deref().map(resolve),
                id: e.id,
                dataset: e.dataset,
                format: e.format,
                tz: e.tz,
                zone: e.zone,
                station: e.station,
            };
            validate_entry(&entry)?;
            data.push(entry);
        }
        Ok(RunConfig {
            data,
            models,
            fit,
            seed: raw.seed,
            output_dir: resolve(&raw.output_dir),
            jobs: raw.jobs,
            record_timing: raw.record_timing,
            max_gap: raw.max_gap.unwrap_or(DEFAULT_MAX_GAP),
            fit_on_demand: raw.fit_on_demand,
        })
    }

    pub fn entry(&self, id: &str) -> Result<&DataEntry> {
        self.data
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| CliError::UnknownSeries(id.to_string()))
    }
}

fn validate_entry(e: &DataEntry) -> Result<()> {
    let id = &e.id;
    if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
        return Err(config_err(format!("series id {id:?} must be non-empty and use only [A-Za-z0-9._-]")));
    }
    let must_exist = |p: &Path| {
        if p.is_file() {
            Ok(())
        } else {
            Err(config_err(format!("series {id}: file {} does not exist", p.display())))
        }
    };
    must_exist(&e.path)?;
    match e.format {
        DataFormat::Long => {
            if e.temp_path.is_some() || e.zone.is_some() || e.station.is_some() {
                return Err(config_err(format!(
                    "series {id}: temp_path, zone and station apply to the gefcom format only"
                )));
            }
        }
        DataFormat::Gefcom => {
            let temp = e
                .temp_path
                .as_deref()
                .ok_or_else(|| config_err(format!("series {id}: gefcom format needs temp_path")))?;
            must_exist(temp)?;
            if e.zone.is_none() || e.station.is_none() {
                return Err(config_err(format!("series {id}: gefcom format needs zone and station")));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir_with_data() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.csv"), "timestamp,load\n").unwrap();
        dir
    }

    const MINIMAL: &str = r#"
output_dir = "out"
models = ["avg", "moddshw"]
[[data]]
id = "a"
format = "long"
path = "a.csv"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let dir = dir_with_data();
        let c = RunConfig::parse(MINIMAL, dir.path()).unwrap();
        assert_eq!(c.models, vec![ModelKind::Avg, ModelKind::ModDshw]);
        assert_eq!(c.seed, 0);
        assert_eq!(c.max_gap, DEFAULT_MAX_GAP);
        assert_eq!(c.output_dir, dir.path().join("out"));
        assert_eq!(c.data[0].path, dir.path().join("a.csv"));
        assert_eq!(c.data[0].dataset, "default");
        assert_eq!(c.fit.train_hours(ModelKind::ModDshw), Some(2160));
        assert_eq!(c.fit.train_hours(ModelKind::NarxRf), None);
        assert!(c.record_timing);
    }

    #[test]
    fn train_months_override() {
        let dir = dir_with_data();
        let text = MINIMAL.replace("[[data]]", "[train_months]\nmoddshw = 6\navgarima = \"all\"\n\n[[data]]");
        let c = RunConfig::parse(&text, dir.path()).unwrap();
        assert_eq!(c.fit.train_hours(ModelKind::ModDshw), Some(6 * HOURS_PER_MONTH));
        assert_eq!(c.fit.train_hours(ModelKind::AvgArima), None);
    }

    #[test]
    fn rejects_bad_configs() {
        let dir = dir_with_data();
        let cases = [
            MINIMAL.replace(r#"["avg", "moddshw"]"#, "[]"),
            MINIMAL.replace(r#""moddshw""#, r#""tbats""#),
            MINIMAL.replace(r#""moddshw""#, r#""avg""#),
            MINIMAL.replace("a.csv", "missing.csv"),
            MINIMAL.replace(r#"format = "long""#, r#"format = "gefcom""#),
            MINIMAL.replace("[[data]]\nid = \"a\"\nformat = \"long\"\npath = \"a.csv\"\n", ""),
            format!("{MINIMAL}zone = 1\n"),
            format!("{MINIMAL}colour = 1\n"),
            format!("jobs = 0\n{MINIMAL}"),
        ];
        for text in cases {
            let err = RunConfig::parse(&text, dir.path()).unwrap_err();
            assert!(matches!(err, CliError::Config(_)), "{text}: {err}");
            assert_eq!(err.exit_code(), 1);
        }
    }

    #[test]
    fn unknown_series_lookup() {
        let dir = dir_with_data();
        let c = RunConfig::parse(MINIMAL, dir.path()).unwrap();
        assert!(c.entry("a").is_ok());
        assert!(matches!(c.entry("b"), Err(CliError::UnknownSeries(_))));
    }
}
