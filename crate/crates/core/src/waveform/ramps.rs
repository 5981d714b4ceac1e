use serde::{Deserialize, Serialize};

use super::analysis::local_modes;
use super::basis::ElectrodeBasis;
use super::constraints::{curvature_for_frequency, frequency_for_curvature, PotentialConstraints, WellConstraint};
use super::signal::{Shape, Waveform, DEFAULT_UPDATE_RATE};
use super::solver::{solve_voltages, SolveOptions, VoltageSolution};
use super::WaveformError;
use crate::constants::{BE9_MASS, ELEMENTARY_CHARGE};
use crate::exec::{map_ordered, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampOptions {
    /// Number of solve points (1 = end point only).
    pub steps: usize,
    pub duration_s: f64,
    pub update_rate: f64,
    pub shape: Shape,
    pub voltage_bound: f64,
    pub solve: SolveOptions,
}

impl Default for RampOptions {
    fn default() -> Self {
        Self {
            steps: 21,
            duration_s: 310e-6,
            update_rate: DEFAULT_UPDATE_RATE,
            shape: Shape::Linear,
            voltage_bound: PotentialConstraints::DEFAULT_BOUND,
            solve: SolveOptions::default(),
        }
    }
}

fn lerp(a: f64, b: f64, s: f64) -> f64 {
    a + (b - a) * s
}

fn lerp_opt(a: Option<f64>, b: Option<f64>, s: f64) -> Option<f64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(lerp(a, b, s)),
        _ => None,
    }
}

/// Solve every schedule point (in parallel when allowed) and keep order.
fn solve_schedule(
    exec: Execution,
    basis: &ElectrodeBasis,
    sets: &[PotentialConstraints],
    opts: SolveOptions,
) -> Result<Vec<VoltageSolution>, WaveformError> {
    map_ordered(exec, sets, |c| solve_voltages(basis, c, opts))
        .into_iter()
        .enumerate()
        .map(|(k, r)| r.map_err(|e| e.at_step(k)))
        .collect()
}

/// Satellite wells of a double well are added once they sit this far
/// from the center.
pub const DEFAULT_SATELLITE_MIN_OFFSET_UM: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationSpec {
    /// Single well; `curvature` must be set, `quartic` defaults to 0.
    pub from: WellConstraint,
    /// Double well: negative curvature and positive quartic.
    pub to: WellConstraint,
    /// Extra gradient along the weak axis (V/µm) added at every step to
    /// offset the crystal from the quartic center.
    #[serde(default)]
    pub axial_bias: f64,
    #[serde(default = "default_min_offset")]
    pub satellite_min_offset_um: f64,
    /// Weight of the satellite wells (the center well has its own).
    #[serde(default = "unit")]
    pub satellite_weight: f64,
}

fn default_min_offset() -> f64 {
    DEFAULT_SATELLITE_MIN_OFFSET_UM
}

fn unit() -> f64 {
    1.0
}

impl SeparationSpec {
    /// ⁹Be⁺ well at `center` with frequency `from_hz` split into two wells
    /// of frequency `to_hz` at ±`half_separation_um` along the weak axis.
    pub fn symmetric(center: [f64; 2], angle: f64, from_hz: f64, to_hz: f64, half_separation_um: f64) -> Self {
        let mut from = WellConstraint::harmonic(center, from_hz, angle);
        from.quartic = Some(0.0);
        from.cubic = Some(0.0);
        let k_final = curvature_for_frequency(to_hz, BE9_MASS, ELEMENTARY_CHARGE);
        // V = αu² + βu⁴ has minima at ±√(−α/2β) with curvature −4α there.
        let alpha = -k_final / 4.0;
        let beta = -alpha / (2.0 * half_separation_um * half_separation_um);
        let mut to = from.clone();
        to.curvature = Some(2.0 * alpha);
        to.quartic = Some(24.0 * beta);
        Self { from, to, axial_bias: 0.0, satellite_min_offset_um: DEFAULT_SATELLITE_MIN_OFFSET_UM, satellite_weight: 1.0 }
    }

    fn coefficients(w: &WellConstraint) -> Result<(f64, f64), WaveformError> {
        let c = w.curvature.ok_or_else(|| WaveformError::Constraints("separation wells need a curvature".into()))?;
        Ok((c / 2.0, w.quartic.unwrap_or(0.0) / 24.0))
    }

    /// Constraint set at schedule position s ∈ [0, 1].
    pub fn at(&self, s: f64, voltage_bound: f64) -> Result<(PotentialConstraints, SeparationStep), WaveformError> {
        let (a0, b0) = Self::coefficients(&self.from)?;
        let (a1, b1) = Self::coefficients(&self.to)?;
        let (alpha, beta) = (lerp(a0, a1, s), lerp(b0, b1, s));
        let (f, t) = (&self.from, &self.to);
        let center = WellConstraint {
            position: [lerp(f.position[0], t.position[0], s), lerp(f.position[1], t.position[1], s)],
            weak_axis_angle: lerp(f.weak_axis_angle, t.weak_axis_angle, s),
            gradient: [lerp(f.gradient[0], t.gradient[0], s) + self.axial_bias, lerp(f.gradient[1], t.gradient[1], s)],
            curvature: Some(2.0 * alpha),
            transverse_curvature: lerp_opt(f.transverse_curvature, t.transverse_curvature, s),
            cubic: lerp_opt(f.cubic, t.cubic, s),
            quartic: Some(24.0 * beta),
            align_axes: f.align_axes && t.align_axes,
            weight: lerp(f.weight, t.weight, s),
        };
        let mut wells = vec![center.clone()];
        let offset = (alpha < 0.0 && beta > 0.0).then(|| (-alpha / (2.0 * beta)).sqrt());
        let satellites = offset.filter(|&d| d >= self.satellite_min_offset_um);
        if let Some(d) = satellites {
            let u = [center.weak_axis_angle.sin(), center.weak_axis_angle.cos()];
            for sign in [-1.0, 1.0] {
                wells.push(WellConstraint {
                    position: [center.position[0] + sign * d * u[0], center.position[1] + sign * d * u[1]],
                    curvature: Some(-4.0 * alpha),
                    transverse_curvature: None,
                    cubic: None,
                    quartic: None,
                    weight: self.satellite_weight,
                    ..center.clone()
                });
            }
        }
        let step = SeparationStep { s, curvature: 2.0 * alpha, quartic: 24.0 * beta, well_offset_um: offset, satellites: satellites.is_some() };
        Ok((PotentialConstraints { wells, voltage_bound }, step))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparationStep {
    pub s: f64,
    pub curvature: f64,
    pub quartic: f64,
    /// Quartic-theory half separation when the center is a maximum.
    pub well_offset_um: Option<f64>,
    pub satellites: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationRamp {
    pub waveform: Waveform,
    pub steps: Vec<SeparationStep>,
    pub solutions: Vec<VoltageSolution>,
}

/// Interpolate (α, β) between the two constraint sets and solve at each
/// schedule point.
pub fn separation_ramp(
    exec: Execution,
    basis: &ElectrodeBasis,
    spec: &SeparationSpec,
    options: &RampOptions,
) -> Result<SeparationRamp, WaveformError> {
    if options.steps == 0 {
        return Err(WaveformError::Constraints("a ramp needs at least one step".into()));
    }
    let mut sets = Vec::new();
    let mut steps = Vec::new();
    for s in options.shape.schedule(options.steps) {
        let (c, st) = spec.at(s, options.voltage_bound)?;
        sets.push(c);
        steps.push(st);
    }
    let solutions = solve_schedule(exec, basis, &sets, options.solve)?;
    let keys: Vec<Vec<f64>> = solutions.iter().map(|s| s.voltages.clone()).collect();
    let waveform = Waveform::from_keyframes(basis.names(), &keys, options.duration_s, options.update_rate, options.voltage_bound)?;
    Ok(SeparationRamp { waveform, steps, solutions })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationStep {
    pub target_angle: f64,
    /// Angle of the tracked mode axis from z, unwrapped, rad.
    pub mode_angle: f64,
    pub tracked_hz: f64,
    pub spectator_hz: f64,
    pub gap_hz: f64,
    /// |overlap| of the tracked axis with the previous step's.
    pub overlap: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationRamp {
    pub waveform: Waveform,
    pub steps: Vec<RotationStep>,
    pub min_gap_hz: f64,
    /// Some step came closer than the threshold.
    pub flagged: bool,
}

/// Rotate the weak axis of `well` from `angle_from` to `angle_to`,
/// tracking the rotating mode by eigenvector continuity.
pub fn well_rotation_ramp(
    exec: Execution,
    basis: &ElectrodeBasis,
    well: &WellConstraint,
    angle_from: f64,
    angle_to: f64,
    gap_threshold_hz: f64,
    options: &RampOptions,
) -> Result<RotationRamp, WaveformError> {
    if options.steps == 0 {
        return Err(WaveformError::Constraints("a ramp needs at least one step".into()));
    }
    let schedule = options.shape.schedule(options.steps);
    let angles: Vec<f64> = schedule.iter().map(|&s| lerp(angle_from, angle_to, s)).collect();
    let sets: Vec<PotentialConstraints> = angles
        .iter()
        .map(|&a| PotentialConstraints {
            wells: vec![WellConstraint { weak_axis_angle: a, ..well.clone() }],
            voltage_bound: options.voltage_bound,
        })
        .collect();
    let solutions = solve_schedule(exec, basis, &sets, options.solve)?;

    let mut steps = Vec::new();
    let mut prev: Option<[f64; 2]> = None;
    let mut prev_angle = 0.0;
    for (a, sol) in angles.iter().zip(&solutions) {
        let m = local_modes(basis, &sol.voltages, well.position);
        let reference = prev.unwrap_or([a.sin(), a.cos()]);
        let dot = |v: [f64; 2]| v[0] * reference[0] + v[1] * reference[1];
        let k = if dot(m.axes[0]).abs() >= dot(m.axes[1]).abs() { 0 } else { 1 };
        let mut axis = m.axes[k];
        if dot(axis) < 0.0 {
            axis = [-axis[0], -axis[1]];
        }
        let overlap = dot(axis).abs();
        let mut angle = axis[0].atan2(axis[1]);
        if prev.is_some() {
            while angle - prev_angle > std::f64::consts::PI {
                angle -= std::f64::consts::TAU;
            }
            while angle - prev_angle < -std::f64::consts::PI {
                angle += std::f64::consts::TAU;
            }
        }
        let f = m.frequencies_hz(basis.rf.mass_kg, ELEMENTARY_CHARGE);
        let (tracked, spectator) = (f[k], f[1 - k]);
        steps.push(RotationStep {
            target_angle: *a,
            mode_angle: angle,
            tracked_hz: tracked,
            spectator_hz: spectator,
            gap_hz: (spectator - tracked).abs(),
            overlap,
        });
        prev = Some(axis);
        prev_angle = angle;
    }
    let min_gap_hz = steps.iter().map(|s| s.gap_hz).fold(f64::INFINITY, f64::min);
    let keys: Vec<Vec<f64>> = solutions.iter().map(|s| s.voltages.clone()).collect();
    let waveform = Waveform::from_keyframes(basis.names(), &keys, options.duration_s, options.update_rate, options.voltage_bound)?;
    Ok(RotationRamp { waveform, steps, min_gap_hz, flagged: min_gap_hz < gap_threshold_hz })
}

/// Default well at the junction used for rotation: weak axis at
/// `weak_hz`, transverse at `transverse_hz`.
pub fn junction_well(weak_hz: f64, transverse_hz: f64) -> WellConstraint {
    let mut w = WellConstraint::harmonic([0.0, 0.0], weak_hz, 0.0);
    w.transverse_curvature = Some(curvature_for_frequency(transverse_hz, BE9_MASS, ELEMENTARY_CHARGE));
    w
}

/// Measured weak-axis frequency at a solved well, Hz.
pub fn weak_axis_frequency(basis: &ElectrodeBasis, voltages: &[f64], position: [f64; 2]) -> f64 {
    let m = local_modes(basis, voltages, position);
    frequency_for_curvature(m.curvatures[0], basis.rf.mass_kg, ELEMENTARY_CHARGE)
}
