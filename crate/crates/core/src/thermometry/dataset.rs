use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::models::{Crystal, Sideband};
use crate::dynamics::ModeLabel;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("sidecar: {0}")]
    Sidecar(String),
    #[error("invalid dataset: {0}")]
    Invalid(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataPoint {
    /// Probe duration, s.
    pub t: f64,
    pub population: f64,
    pub shots: u32,
}

/// Metadata stored next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub crystal: Crystal,
    pub mode: ModeLabel,
    pub kappa: i32,
    #[serde(default)]
    pub eta: BTreeMap<ModeLabel, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

/// One sideband-flopping curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SidebandDataset {
    pub crystal: Crystal,
    pub sideband: Sideband,
    /// Lamb-Dicke parameters the curve was taken with, if known.
    #[serde(default)]
    pub eta: BTreeMap<ModeLabel, f64>,
    pub points: Vec<DataPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    t_us: f64,
    population: f64,
    shots: u32,
}

impl SidebandDataset {
    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.points.is_empty() {
            return Err(DatasetError::Invalid("no points".into()));
        }
        for (i, p) in self.points.iter().enumerate() {
            if !(p.t >= 0.0 && p.t.is_finite()) {
                return Err(DatasetError::Invalid(format!("point {i}: negative duration {}", p.t)));
            }
            if !(0.0..=1.0).contains(&p.population) {
                return Err(DatasetError::Invalid(format!("point {i}: population {} outside [0, 1]", p.population)));
            }
            if p.shots == 0 {
                return Err(DatasetError::Invalid(format!("point {i}: zero shots")));
            }
        }
        Ok(())
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            crystal: self.crystal,
            mode: self.sideband.mode,
            kappa: self.sideband.kappa,
            eta: self.eta.clone(),
            label: self.label.clone(),
        }
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for p in &self.points {
            w.serialize(Row { t_us: p.t * 1e6, population: p.population, shots: p.shots }).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }

    pub fn from_csv_str(text: &str, meta: Sidecar) -> Result<Self, DatasetError> {
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
        let headers = r.headers().map_err(|e| DatasetError::Csv { line: 1, message: e.to_string() })?.clone();
        for want in ["t_us", "population", "shots"] {
            if !headers.iter().any(|h| h == want) {
                return Err(DatasetError::Csv { line: 1, message: format!("missing column {want}") });
            }
        }
        let mut points = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(|e| DatasetError::Csv {
                line: e.position().map(|p| p.line()).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let row: Row = rec
                .deserialize(Some(&headers))
                .map_err(|e| DatasetError::Csv { line, message: e.to_string() })?;
            if !(row.t_us >= 0.0) || !(0.0..=1.0).contains(&row.population) || row.shots == 0 {
                return Err(DatasetError::Csv {
                    line,
                    message: "need t_us >= 0, population in [0, 1], shots >= 1".into(),
                });
            }
            points.push(DataPoint { t: row.t_us * 1e-6, population: row.population, shots: row.shots });
        }
        let ds = SidebandDataset {
            crystal: meta.crystal,
            sideband: Sideband { mode: meta.mode, kappa: meta.kappa },
            eta: meta.eta,
            points,
            label: meta.label,
        };
        ds.validate()?;
        Ok(ds)
    }

    /// Sidecar path for a CSV path: same stem, `.json` extension.
    pub fn sidecar_path(csv_path: &Path) -> PathBuf {
        csv_path.with_extension("json")
    }

    pub fn write(&self, csv_path: &Path) -> Result<(), DatasetError> {
        fs::write(csv_path, self.to_csv_string()).map_err(io(csv_path))?;
        let side = Self::sidecar_path(csv_path);
        let json = serde_json::to_string_pretty(&self.sidecar()).expect("sidecar serializes") + "\n";
        fs::write(&side, json).map_err(io(&side))
    }

    pub fn read(csv_path: &Path) -> Result<Self, DatasetError> {
        let text = fs::read_to_string(csv_path).map_err(io(csv_path))?;
        let side = Self::sidecar_path(csv_path);
        let meta_text = fs::read_to_string(&side).map_err(io(&side))?;
        let meta: Sidecar = serde_json::from_str(&meta_text).map_err(|e| DatasetError::Sidecar(e.to_string()))?;
        Self::from_csv_str(&text, meta)
    }
}
