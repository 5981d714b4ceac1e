use serde::{Deserialize, Serialize};

use super::signal::Waveform;
use super::WaveformError;

/// Single-pole low-pass, y[k] = (1 − α) y[k−1] + α x[k] with
/// α = 1 − exp(−2π f_c / f_s). The state starts settled on the first
/// input sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterModel {
    pub cutoff_hz: f64,
    pub update_rate: f64,
}

impl FilterModel {
    pub fn new(cutoff_hz: f64, update_rate: f64) -> Result<Self, WaveformError> {
        let f = Self { cutoff_hz, update_rate };
        f.check()?;
        Ok(f)
    }

    pub fn check(&self) -> Result<(), WaveformError> {
        if !(self.cutoff_hz > 0.0 && self.cutoff_hz < self.update_rate / 2.0) {
            return Err(WaveformError::Filter(format!(
                "cutoff {} Hz must lie in (0, {} Hz)",
                self.cutoff_hz,
                self.update_rate / 2.0
            )));
        }
        Ok(())
    }

    pub fn alpha(&self) -> f64 {
        -(-std::f64::consts::TAU * self.cutoff_hz / self.update_rate).exp_m1()
    }

    pub fn filter_series(&self, x: &[f64]) -> Vec<f64> {
        let a = self.alpha();
        let Some(&first) = x.first() else { return Vec::new() };
        let mut y = first;
        x.iter()
            .map(|&v| {
                y = (1.0 - a) * y + a * v;
                y
            })
            .collect()
    }

    /// Exact inverse of [`filter_series`](Self::filter_series).
    pub fn invert_series(&self, w: &[f64]) -> Vec<f64> {
        let a = self.alpha();
        let Some(&first) = w.first() else { return Vec::new() };
        let mut prev = first;
        w.iter()
            .map(|&v| {
                let u = (v - (1.0 - a) * prev) / a;
                prev = v;
                u
            })
            .collect()
    }

    fn matches(&self, w: &Waveform) -> Result<(), WaveformError> {
        self.check()?;
        if (self.update_rate - w.update_rate).abs() > 1e-9 * w.update_rate {
            return Err(WaveformError::Filter(format!(
                "filter rate {} differs from waveform rate {}",
                self.update_rate, w.update_rate
            )));
        }
        Ok(())
    }
}

fn map_columns(w: &Waveform, f: impl Fn(&[f64]) -> Vec<f64>) -> Vec<Vec<f64>> {
    let cols: Vec<Vec<f64>> = (0..w.electrodes.len()).map(|e| f(&w.column(e))).collect();
    (0..w.len()).map(|k| cols.iter().map(|c| c[k]).collect()).collect()
}

/// What the electrodes see after the filter.
pub fn apply_filter(w: &Waveform, filter: &FilterModel) -> Result<Waveform, WaveformError> {
    filter.matches(w)?;
    Ok(Waveform { samples: map_columns(w, |c| filter.filter_series(c)), filter: Some(*filter), ..w.clone() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precompensated {
    pub waveform: Waveform,
    /// (electrode, sample) pairs clipped to the voltage bound.
    pub clipped: Vec<(usize, usize)>,
}

/// Drive that makes the filtered output reproduce `w`. Samples beyond the
/// voltage bound are clipped and listed.
pub fn precompensate(w: &Waveform, filter: &FilterModel) -> Result<Precompensated, WaveformError> {
    filter.matches(w)?;
    let mut samples = map_columns(w, |c| filter.invert_series(c));
    let bound = w.voltage_bound;
    let mut clipped = Vec::new();
    for (k, s) in samples.iter_mut().enumerate() {
        for (e, v) in s.iter_mut().enumerate() {
            if v.abs() > bound {
                *v = v.clamp(-bound, bound);
                clipped.push((e, k));
            }
        }
    }
    if let Some(&(e, k)) = clipped.first() {
        log::warn!("{} pre-compensated samples clipped, first {} at sample {k}", clipped.len(), w.electrodes[e]);
    }
    Ok(Precompensated { waveform: Waveform { samples, filter: Some(*filter), ..w.clone() }, clipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(cols: &[Vec<f64>], bound: f64) -> Waveform {
        let n = cols[0].len();
        Waveform {
            electrodes: (0..cols.len()).map(|e| format!("e{e}")).collect(),
            update_rate: 5e7,
            voltage_bound: bound,
            samples: (0..n).map(|k| cols.iter().map(|c| c[k]).collect()).collect(),
            filter: None,
        }
    }

    #[test]
    fn dc_passes_and_impulse_decays() {
        let f = FilterModel::new(1e6, 5e7).unwrap();
        let y = f.filter_series(&[0.7; 100]);
        assert!(y.iter().all(|&v| (v - 0.7).abs() < 1e-15));
        let u = f.invert_series(&[0.7; 100]);
        assert!(u.iter().all(|&v| (v - 0.7).abs() < 1e-14));
        let mut imp = vec![0.0; 50];
        imp[1] = 1.0;
        let y = f.filter_series(&imp);
        let a = f.alpha();
        for k in 2..50 {
            assert!((y[k] / y[k - 1] - (1.0 - a)).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let f = FilterModel::new(2e6, 5e7).unwrap();
        let c0: Vec<f64> = (0..5000).map(|k| (k as f64 * 0.003).sin() * 0.5).collect();
        let c1: Vec<f64> = (0..5000).map(|k| if k < 2500 { -0.2 } else { 0.3 }).collect();
        let w = wave(&[c0, c1], 10.0);
        let pre = precompensate(&w, &f).unwrap();
        assert!(pre.clipped.is_empty());
        let out = apply_filter(&pre.waveform, &f).unwrap();
        let err = out.samples.iter().flatten().zip(w.samples.iter().flatten()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-9 * w.voltage_bound, "{err}");
    }

    #[test]
    fn step_overshoot() {
        let f = FilterModel::new(1e6, 5e7).unwrap();
        let mut x = vec![0.0; 10];
        x[5..].fill(1.0);
        let u = f.invert_series(&x);
        let a = f.alpha();
        assert!((u[5] - 1.0 - (1.0 / a - 1.0)).abs() < 1e-12);
        assert!(u[6..].iter().all(|&v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn half_power_at_cutoff() {
        let (fc, fs) = (1e6, 5e7);
        let f = FilterModel::new(fc, fs).unwrap();
        let n = 20000;
        let x: Vec<f64> = (0..n).map(|k| (std::f64::consts::TAU * fc * k as f64 / fs).sin()).collect();
        let y = f.filter_series(&x);
        // Steady-state amplitude from the second half.
        let amp = y[n / 2..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((amp * amp - 0.5).abs() < 0.02 * 0.5, "{}", amp * amp);
    }

    #[test]
    fn clipping_and_rate_checks() {
        let f = FilterModel::new(1e6, 5e7).unwrap();
        let w = wave(&[vec![0.0, 0.0, 1.0, 1.0]], 1.5);
        let pre = precompensate(&w, &f).unwrap();
        assert_eq!(pre.clipped, vec![(0, 2)]);
        assert_eq!(pre.waveform.samples[2][0], 1.5);
        assert!(FilterModel::new(3e7, 5e7).is_err());
        assert!(FilterModel::new(0.0, 5e7).is_err());
        let other = FilterModel::new(1e6, 1e8).unwrap();
        assert!(apply_filter(&w, &other).is_err());
    }
}
