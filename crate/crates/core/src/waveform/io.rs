use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::filter::FilterModel;
use super::signal::Waveform;
use super::WaveformError;

/// JSON sidecar written next to the CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformHeader {
    pub update_rate: f64,
    pub samples: usize,
    pub duration_us: f64,
    pub voltage_bound: f64,
    pub electrodes: Vec<String>,
    pub filter: Option<FilterModel>,
}

impl WaveformHeader {
    pub fn of(w: &Waveform) -> Self {
        Self {
            update_rate: w.update_rate,
            samples: w.len(),
            duration_us: w.duration_s() * 1e6,
            voltage_bound: w.voltage_bound,
            electrodes: w.electrodes.clone(),
            filter: w.filter,
        }
    }
}

pub fn header_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

/// `time_us,V_<name>,...` with shortest round-trip float formatting.
pub fn to_csv_string(w: &Waveform) -> String {
    let mut out = String::with_capacity(w.len() * (w.electrodes.len() + 1) * 12);
    out.push_str("time_us");
    for e in &w.electrodes {
        out.push_str(",V_");
        out.push_str(e);
    }
    out.push('\n');
    for (k, s) in w.samples.iter().enumerate() {
        write!(out, "{}", w.time_us(k)).unwrap();
        for v in s {
            write!(out, ",{v}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn write_waveform(w: &Waveform, csv: &Path) -> Result<(), WaveformError> {
    let io = |p: &Path, e: std::io::Error| WaveformError::Io(format!("{}: {e}", p.display()));
    std::fs::write(csv, to_csv_string(w)).map_err(|e| io(csv, e))?;
    let header = serde_json::to_string_pretty(&WaveformHeader::of(w)).expect("header serializes");
    let hp = header_path(csv);
    std::fs::write(&hp, header + "\n").map_err(|e| io(&hp, e))
}

pub fn read_waveform(csv: &Path) -> Result<Waveform, WaveformError> {
    let io = |p: &Path, e: std::io::Error| WaveformError::Io(format!("{}: {e}", p.display()));
    let hp = header_path(csv);
    let header: WaveformHeader = serde_json::from_str(&std::fs::read_to_string(&hp).map_err(|e| io(&hp, e))?)
        .map_err(|e| WaveformError::Format(format!("{}: {e}", hp.display())))?;
    let text = std::fs::read_to_string(csv).map_err(|e| io(csv, e))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let names: Vec<String> = reader
        .headers()
        .map_err(|e| WaveformError::Format(e.to_string()))?
        .iter()
        .skip(1)
        .map(|h| h.strip_prefix("V_").unwrap_or(h).to_string())
        .collect();
    if names != header.electrodes {
        return Err(WaveformError::Format("CSV columns do not match the header electrodes".into()));
    }
    let mut samples = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let line = k + 2;
        let rec = rec.map_err(|e| WaveformError::Format(format!("line {line}: {e}")))?;
        let vals: Result<Vec<f64>, _> = rec.iter().skip(1).map(str::parse).collect();
        samples.push(vals.map_err(|e| WaveformError::Format(format!("line {line}: {e}")))?);
    }
    if samples.len() != header.samples {
        return Err(WaveformError::Format(format!("header says {} samples, CSV has {}", header.samples, samples.len())));
    }
    let w = Waveform {
        electrodes: names,
        update_rate: header.update_rate,
        voltage_bound: header.voltage_bound,
        samples,
        filter: header.filter,
    };
    w.check()?;
    Ok(w)
}
