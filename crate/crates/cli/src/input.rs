//! Series sources: named simulation presets or `time,value` CSV files.

use std::fmt;
use std::path::{Path, PathBuf};

use havok_core::embedding::TimeSeries;
use havok_core::systems::{preset_series, PRESET_NAMES};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

/// Largest accepted deviation of a CSV time step from the first one,
/// relative to that step.
pub const SPACING_JITTER: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputSource {
    Preset(String),
    Csv(PathBuf),
}

impl InputSource {
    /// Preset names win; anything else is taken as a CSV path.
    pub fn parse(s: &str) -> InputSource {
        if PRESET_NAMES.contains(&s) {
            InputSource::Preset(s.to_string())
        } else {
            InputSource::Csv(PathBuf::from(s))
        }
    }

    pub fn load(&self) -> Result<TimeSeries> {
        match self {
            InputSource::Preset(name) => preset_series(name).map_err(CliError::core("systems")),
            InputSource::Csv(path) => read_csv(path),
        }
    }
}

impl fmt::Display for InputSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSource::Preset(name) => write!(f, "{name}"),
            InputSource::Csv(path) => write!(f, "{}", path.display()),
        }
    }
}

/// Reads a uniformly sampled `time,value` CSV file.
pub fn read_csv(path: &Path) -> Result<TimeSeries> {
    let bad = |message: String| CliError::Csv {
        path: path.to_path_buf(),
        message,
    };
    let file = std::fs::File::open(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    if header.len() != 2 || &header[0] != "time" || &header[1] != "value" {
        return Err(bad(format!(
            "expected header `time,value`, found `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let line = i + 2;
        let field = |k: usize| -> Result<f64> {
            let s = record
                .get(k)
                .ok_or_else(|| bad(format!("line {line}: missing column")))?;
            let v: f64 = s
                .parse()
                .map_err(|_| bad(format!("line {line}: `{s}` is not a number")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(format!("line {line}: non-finite value")))
            }
        };
        times.push(field(0)?);
        values.push(field(1)?);
    }
    if times.len() < 2 {
        return Err(bad(format!(
            "need at least two samples, found {}",
            times.len()
        )));
    }
    let dt = times[1] - times[0];
    if !(dt > 0.0) {
        return Err(bad("time column must be increasing".into()));
    }
    for (k, w) in times.windows(2).enumerate() {
        let step = w[1] - w[0];
        if (step - dt).abs() > SPACING_JITTER * dt {
            return Err(bad(format!(
                "non-uniform sampling between lines {} and {} (step {step} vs {dt}); \
                 interpolate onto a uniform grid with a spline first",
                k + 2,
                k + 3
            )));
        }
    }
    TimeSeries::new(times[0], dt, values).map_err(CliError::core("input"))
}

/// Writes `x` as `time,value` rows.
pub fn series_csv(x: &TimeSeries) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Config(format!("csv encoding: {e}"));
    w.write_record(["time", "value"]).map_err(io)?;
    for (k, v) in x.values.iter().enumerate() {
        w.write_record([x.time(k).to_string(), v.to_string()])
            .map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| CliError::Config(format!("csv encoding: {e}")))
}
