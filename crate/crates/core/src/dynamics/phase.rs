use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

/// Second-order field sensitivity of the ⁹Be⁺ clock transition, Hz/µT².
pub const BE9_CLOCK_C2_HZ_PER_UT2: f64 = 0.305;

/// Frequency shift c2·ΔB² (ΔB in µT, c2 in Hz/µT²), Hz.
pub fn second_order_zeeman_shift(delta_b_ut: f64, c2: f64) -> f64 {
    c2 * delta_b_ut * delta_b_ut
}

/// Piecewise-linear AC-Zeeman shift along a projection axis. Constant
/// beyond the outermost points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AczProfile {
    /// Unit direction in the (x, z) plane.
    pub axis: [f64; 2],
    /// (coordinate along `axis` in µm, shift in Hz), sorted by coordinate.
    pub points: Vec<(f64, f64)>,
}

impl AczProfile {
    pub fn new(axis: [f64; 2], mut points: Vec<(f64, f64)>) -> Result<Self, String> {
        let norm = axis[0].hypot(axis[1]);
        if !(norm > 0.0) {
            return Err("profile axis must be non-zero".into());
        }
        if points.is_empty() {
            return Err("profile needs at least one point".into());
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err("profile coordinates must be distinct".into());
        }
        Ok(Self { axis: [axis[0] / norm, axis[1] / norm], points })
    }

    pub fn project(&self, p: [f64; 2]) -> f64 {
        p[0] * self.axis[0] + p[1] * self.axis[1]
    }

    pub fn at(&self, s: f64) -> f64 {
        let pts = &self.points;
        if s <= pts[0].0 {
            return pts[0].1;
        }
        let last = pts[pts.len() - 1];
        if s >= last.0 {
            return last.1;
        }
        let i = pts.partition_point(|p| p.0 <= s);
        let (a, b) = (pts[i - 1], pts[i]);
        a.1 + (b.1 - a.1) * (s - a.0) / (b.0 - a.0)
    }

    /// Mean over a uniform sweep from s0 to s1 (exact for the piecewise
    /// linear profile).
    pub fn mean_over(&self, s0: f64, s1: f64) -> f64 {
        if (s1 - s0).abs() < 1e-12 {
            return self.at(s0);
        }
        let (lo, hi) = if s0 < s1 { (s0, s1) } else { (s1, s0) };
        let mut knots = vec![lo];
        knots.extend(self.points.iter().map(|p| p.0).filter(|&x| x > lo && x < hi));
        knots.push(hi);
        let area: f64 = knots.windows(2).map(|w| 0.5 * (self.at(w[0]) + self.at(w[1])) * (w[1] - w[0])).sum();
        area / (hi - lo)
    }
}

/// Which part of a sequence each ion accrues phase in.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActiveWindow {
    #[default]
    Always,
    /// Per ion, configuration indices `[start, end)`: steps leaving
    /// configurations `start..end` and idle time spent in them count.
    /// Ions without an entry accrue nothing.
    Configurations(BTreeMap<char, (usize, usize)>),
}

impl ActiveWindow {
    pub fn contains(&self, ion: char, configuration: usize) -> bool {
        match self {
            ActiveWindow::Always => true,
            ActiveWindow::Configurations(m) => m.get(&ion).is_some_and(|&(a, b)| (a..b).contains(&configuration)),
        }
    }
}

/// Straight, uniform-speed path between two positions (µm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepPath {
    pub from: [f64; 2],
    pub to: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSources {
    /// Detuning of every ion from the reference oscillator, Hz.
    pub constant_detuning_hz: f64,
    /// Per-ion replacements for `constant_detuning_hz`.
    #[serde(default)]
    pub per_ion_detuning_hz: BTreeMap<char, f64>,
    #[serde(default)]
    pub acz_profile: Option<AczProfile>,
    /// Static field gradient, T/m (numerically µT/µm).
    #[serde(default)]
    pub b_gradient: f64,
    /// Gradient direction in the (x, z) plane.
    #[serde(default = "default_direction")]
    pub gradient_direction: [f64; 2],
    /// Position (µm) where the field matches the reference.
    #[serde(default = "default_reference")]
    pub reference_position: [f64; 2],
    #[serde(default = "default_c2")]
    pub c2: f64,
    #[serde(default)]
    pub active_window: ActiveWindow,
}

fn default_direction() -> [f64; 2] {
    [0.0, 1.0]
}

fn default_reference() -> [f64; 2] {
    [0.0, -710.0]
}

fn default_c2() -> f64 {
    BE9_CLOCK_C2_HZ_PER_UT2
}

impl PhaseSources {
    /// No detuning of any kind.
    pub fn none() -> Self {
        Self {
            constant_detuning_hz: 0.0,
            per_ion_detuning_hz: BTreeMap::new(),
            acz_profile: None,
            b_gradient: 0.0,
            gradient_direction: default_direction(),
            reference_position: default_reference(),
            c2: default_c2(),
            active_window: ActiveWindow::Always,
        }
    }

    pub fn check(&self) -> Result<(), String> {
        if !(self.c2 > 0.0) {
            return Err(format!("c2 must be positive, got {}", self.c2));
        }
        if !(self.gradient_direction[0].hypot(self.gradient_direction[1]) > 0.0) {
            return Err("gradient direction must be non-zero".into());
        }
        Ok(())
    }

    fn offset(&self, p: [f64; 2]) -> f64 {
        let d = self.gradient_direction;
        let n = d[0].hypot(d[1]);
        ((p[0] - self.reference_position[0]) * d[0] + (p[1] - self.reference_position[1]) * d[1]) / n
    }

    /// Time-averaged detuning of `ion` along `path`, Hz.
    pub fn mean_detuning_hz(&self, ion: char, path: StepPath) -> f64 {
        let mut hz = self.per_ion_detuning_hz.get(&ion).copied().unwrap_or(self.constant_detuning_hz);
        if let Some(acz) = &self.acz_profile {
            hz += acz.mean_over(acz.project(path.from), acz.project(path.to));
        }
        if self.b_gradient != 0.0 {
            let (s0, s1) = (self.offset(path.from), self.offset(path.to));
            // Mean of s² along a linear sweep.
            let mean_sq = (s0 * s0 + s0 * s1 + s1 * s1) / 3.0;
            hz += self.c2 * self.b_gradient * self.b_gradient * mean_sq;
        }
        hz
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RamseyCheck {
    pub total: f64,
    /// In [0, 2π).
    pub reduced: f64,
    /// Whole turns removed: total = reduced + 2π·turns.
    pub turns: i64,
}

pub fn ramsey_phase_check(total_phase: f64) -> RamseyCheck {
    let turns = (total_phase / TAU).floor();
    let mut reduced = total_phase - turns * TAU;
    let mut turns = turns as i64;
    if reduced >= TAU {
        reduced -= TAU;
        turns += 1;
    }
    RamseyCheck { total: total_phase, reduced: reduced.max(0.0), turns }
}
