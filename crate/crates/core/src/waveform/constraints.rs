use std::fmt;

use serde::{Deserialize, Serialize};

use super::WaveformError;
use crate::constants::{BE9_MASS, ELEMENTARY_CHARGE};

/// Curvature (V/µm²) giving angular frequency 2πf for mass m and charge q.
pub fn curvature_for_frequency(frequency_hz: f64, mass_kg: f64, charge_c: f64) -> f64 {
    let w = std::f64::consts::TAU * frequency_hz;
    mass_kg * w * w / charge_c * 1e-12
}

/// Inverse of [`curvature_for_frequency`]; negative curvature gives a
/// negative frequency.
pub fn frequency_for_curvature(curvature: f64, mass_kg: f64, charge_c: f64) -> f64 {
    let w2 = curvature.abs() * 1e12 * charge_c / mass_kg;
    w2.sqrt().copysign(curvature) / std::f64::consts::TAU
}

/// Targets for one potential well, in the frame of its weak axis
/// (u along the weak axis, v across it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WellConstraint {
    /// (x, z), µm.
    pub position: [f64; 2],
    /// Weak-axis angle from the z axis, rad.
    pub weak_axis_angle: f64,
    /// (∂u, ∂v) of the potential, V/µm. Non-zero values superimpose a
    /// static bias field.
    #[serde(default)]
    pub gradient: [f64; 2],
    /// ∂²u, V/µm².
    pub curvature: Option<f64>,
    /// ∂²v, V/µm².
    #[serde(default)]
    pub transverse_curvature: Option<f64>,
    /// ∂³u, V/µm³.
    #[serde(default)]
    pub cubic: Option<f64>,
    /// ∂⁴u, V/µm⁴.
    #[serde(default)]
    pub quartic: Option<f64>,
    /// Pin ∂u∂v to zero so the weak axis lies along the requested angle.
    #[serde(default = "yes")]
    pub align_axes: bool,
    /// Relative weight when the constraint set cannot be met exactly.
    #[serde(default = "unit")]
    pub weight: f64,
}

fn yes() -> bool {
    true
}

fn unit() -> f64 {
    1.0
}

impl WellConstraint {
    /// Equilibrium with the weak-axis frequency of a ⁹Be⁺ ion set.
    pub fn harmonic(position: [f64; 2], frequency_hz: f64, weak_axis_angle: f64) -> Self {
        Self {
            position,
            weak_axis_angle,
            gradient: [0.0, 0.0],
            curvature: Some(curvature_for_frequency(frequency_hz, BE9_MASS, ELEMENTARY_CHARGE)),
            transverse_curvature: None,
            cubic: None,
            quartic: None,
            align_axes: true,
            weight: 1.0,
        }
    }

    /// Rows (derivative orders (i, j), target) in a fixed order.
    pub fn rows(&self) -> Vec<(ConstraintKind, f64)> {
        let mut out = vec![(ConstraintKind::GradientU, self.gradient[0]), (ConstraintKind::GradientV, self.gradient[1])];
        if let Some(c) = self.curvature {
            out.push((ConstraintKind::CurvatureU, c));
        }
        if self.align_axes {
            out.push((ConstraintKind::Cross, 0.0));
        }
        if let Some(c) = self.transverse_curvature {
            out.push((ConstraintKind::CurvatureV, c));
        }
        if let Some(c) = self.cubic {
            out.push((ConstraintKind::Cubic, c));
        }
        if let Some(c) = self.quartic {
            out.push((ConstraintKind::Quartic, c));
        }
        out
    }

    fn check(&self) -> Result<(), WaveformError> {
        let finite = self.position.iter().chain(&self.gradient).all(|v| v.is_finite())
            && self.weak_axis_angle.is_finite()
            && [self.curvature, self.transverse_curvature, self.cubic, self.quartic].iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(WaveformError::Constraints("non-finite target".into()));
        }
        if !(self.weight > 0.0 && self.weight.is_finite()) {
            return Err(WaveformError::Constraints(format!("weight must be positive, got {}", self.weight)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    GradientU,
    GradientV,
    CurvatureU,
    Cross,
    CurvatureV,
    Cubic,
    Quartic,
}

impl ConstraintKind {
    /// Derivative orders (∂u, ∂v).
    pub fn orders(self) -> (usize, usize) {
        match self {
            ConstraintKind::GradientU => (1, 0),
            ConstraintKind::GradientV => (0, 1),
            ConstraintKind::CurvatureU => (2, 0),
            ConstraintKind::Cross => (1, 1),
            ConstraintKind::CurvatureV => (0, 2),
            ConstraintKind::Cubic => (3, 0),
            ConstraintKind::Quartic => (4, 0),
        }
    }
}

impl fmt::Display for ConstraintKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConstraintKind::GradientU => "du",
            ConstraintKind::GradientV => "dv",
            ConstraintKind::CurvatureU => "du2",
            ConstraintKind::Cross => "dudv",
            ConstraintKind::CurvatureV => "dv2",
            ConstraintKind::Cubic => "du3",
            ConstraintKind::Quartic => "du4",
        };
        f.write_str(s)
    }
}

/// All wells plus the electrode voltage limit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialConstraints {
    pub wells: Vec<WellConstraint>,
    /// |V| ≤ voltage_bound on every electrode.
    pub voltage_bound: f64,
}

impl PotentialConstraints {
    pub const DEFAULT_BOUND: f64 = 10.0;

    pub fn single(well: WellConstraint) -> Self {
        Self { wells: vec![well], voltage_bound: Self::DEFAULT_BOUND }
    }

    pub fn check(&self) -> Result<(), WaveformError> {
        if !(self.voltage_bound > 0.0 && self.voltage_bound.is_finite()) {
            return Err(WaveformError::Constraints(format!("voltage bound must be positive, got {}", self.voltage_bound)));
        }
        if self.wells.is_empty() {
            return Err(WaveformError::Constraints("no wells".into()));
        }
        self.wells.iter().try_for_each(WellConstraint::check)
    }
}
