use serde::{Deserialize, Serialize};

use super::filter::FilterModel;
use super::WaveformError;

/// Default AWG update rate, samples/s.
pub const DEFAULT_UPDATE_RATE: f64 = 5e7;

/// ⌈duration × rate⌉, treating products within 1e-9 relative of an
/// integer as that integer.
pub fn sample_count(duration_s: f64, update_rate: f64) -> usize {
    let x = duration_s * update_rate;
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

/// How ramp parameters move from start (0) to end (1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    #[default]
    Linear,
    /// sin²(πu/2): zero slope at both ends.
    SineSquared,
}

impl Shape {
    pub fn apply(self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match self {
            Shape::Linear => u,
            Shape::SineSquared => (std::f64::consts::FRAC_PI_2 * u).sin().powi(2),
        }
    }

    /// Schedule positions of `steps` solve points; a single point sits at
    /// the end.
    pub fn schedule(self, steps: usize) -> Vec<f64> {
        match steps {
            0 => Vec::new(),
            1 => vec![1.0],
            _ => (0..steps).map(|k| self.apply(k as f64 / (steps - 1) as f64)).collect(),
        }
    }
}

/// Per-electrode voltage samples at a fixed update rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    pub electrodes: Vec<String>,
    pub update_rate: f64,
    pub voltage_bound: f64,
    /// `samples[k][e]`: electrode e at time k / update_rate.
    pub samples: Vec<Vec<f64>>,
    #[serde(default)]
    pub filter: Option<FilterModel>,
}

impl Waveform {
    /// Piecewise-linear interpolation of evenly spaced keyframes onto
    /// ⌈duration × rate⌉ samples.
    pub fn from_keyframes(
        electrodes: Vec<String>,
        keyframes: &[Vec<f64>],
        duration_s: f64,
        update_rate: f64,
        voltage_bound: f64,
    ) -> Result<Self, WaveformError> {
        if keyframes.is_empty() {
            return Err(WaveformError::Constraints("no keyframes".into()));
        }
        if !(duration_s > 0.0 && update_rate > 0.0) {
            return Err(WaveformError::Constraints("duration and update rate must be positive".into()));
        }
        let n = sample_count(duration_s, update_rate);
        let last = keyframes.len() - 1;
        let samples = (0..n)
            .map(|j| {
                if last == 0 {
                    return keyframes[0].clone();
                }
                let u = if n == 1 { 1.0 } else { j as f64 / (n - 1) as f64 };
                let p = u * last as f64;
                let k = (p.floor() as usize).min(last - 1);
                let f = p - k as f64;
                keyframes[k].iter().zip(&keyframes[k + 1]).map(|(a, b)| a + (b - a) * f).collect()
            })
            .collect();
        let w = Self { electrodes, update_rate, voltage_bound, samples, filter: None };
        w.check()?;
        Ok(w)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.update_rate
    }

    pub fn time_us(&self, k: usize) -> f64 {
        k as f64 / self.update_rate * 1e6
    }

    pub fn column(&self, e: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s[e]).collect()
    }

    pub fn check(&self) -> Result<(), WaveformError> {
        if !(self.update_rate > 0.0 && self.voltage_bound > 0.0) {
            return Err(WaveformError::Format("update rate and bound must be positive".into()));
        }
        let n = self.electrodes.len();
        for (k, s) in self.samples.iter().enumerate() {
            if s.len() != n {
                return Err(WaveformError::Format(format!("sample {k} has {} values, expected {n}", s.len())));
            }
            if let Some(e) = s.iter().position(|v| !(v.abs() <= self.voltage_bound * (1.0 + 1e-12))) {
                return Err(WaveformError::Format(format!(
                    "sample {k}: {} = {} outside ±{}",
                    self.electrodes[e], s[e], self.voltage_bound
                )));
            }
        }
        Ok(())
    }
}
