use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::jet::Jet2;
use super::WaveformError;
use crate::constants::{BE9_MASS, ELEMENTARY_CHARGE};

/// Gaussian electrode kernel: potential per applied volt,
/// `amplitude · exp(−r²/2w²)` around (x, z). Lengths in µm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Electrode {
    pub name: String,
    pub x: f64,
    pub z: f64,
    pub width: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
}

fn one() -> f64 {
    1.0
}

/// Localized bump in the squared RF field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfBump {
    pub x: f64,
    pub z: f64,
    /// Dimensionless, ≥ 0.
    pub height: f64,
    pub width: f64,
}

/// Synthetic RF field of an X-shaped channel.
///
/// |E|² = (V_rf/L)² · S(x, z) with
/// S = x²z² / ((x² + z² + r0²) L²) + Σ hₖ exp(−|r − rₖ|²/2wₖ²),
/// which vanishes along both channel axes and grows quadratically across
/// them far from the crossing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfModel {
    pub amplitude_v: f64,
    pub frequency_hz: f64,
    /// Field length scale L, µm.
    pub length_um: f64,
    /// Crossing rounding radius r0, µm.
    pub crossing_radius_um: f64,
    #[serde(default)]
    pub bumps: Vec<RfBump>,
    #[serde(default = "be9")]
    pub mass_kg: f64,
}

fn be9() -> f64 {
    BE9_MASS
}

/// Expansion frame: point (x, z) in µm and the weak-axis angle θ from the
/// z axis. Derivative (i, j) is ∂ⁱ_u ∂ʲ_v with u = (sin θ, cos θ) and
/// v = (cos θ, −sin θ) in (x, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub point: [f64; 2],
    pub angle: f64,
}

impl Frame {
    pub fn new(point: [f64; 2], angle: f64) -> Self {
        Self { point, angle }
    }

    pub fn u(&self) -> [f64; 2] {
        [self.angle.sin(), self.angle.cos()]
    }

    pub fn v(&self) -> [f64; 2] {
        [self.angle.cos(), -self.angle.sin()]
    }

    /// (x, z) as jets in the frame variables.
    fn coordinates(&self) -> (Jet2, Jet2) {
        let (u, v) = (self.u(), self.v());
        (Jet2::linear(self.point[0], u[0], v[0]), Jet2::linear(self.point[1], u[1], v[1]))
    }
}

fn gaussian(x: Jet2, z: Jet2, cx: f64, cz: f64, w: f64) -> Jet2 {
    let dx = x + (-cx);
    let dz = z + (-cz);
    ((dx.square() + dz.square()) * (-0.5 / (w * w))).exp()
}

impl RfModel {
    fn check(&self) -> Result<(), WaveformError> {
        let positive = [self.frequency_hz, self.length_um, self.crossing_radius_um, self.mass_kg];
        if positive.iter().any(|v| !(*v > 0.0 && v.is_finite())) || !self.amplitude_v.is_finite() {
            return Err(WaveformError::Basis("RF model needs positive frequency, lengths and mass".into()));
        }
        for b in &self.bumps {
            if !(b.height >= 0.0 && b.width > 0.0) {
                return Err(WaveformError::Basis("RF bumps need height ≥ 0 and width > 0".into()));
            }
        }
        Ok(())
    }

    fn shape(&self, x: Jet2, z: Jet2) -> Jet2 {
        let l = self.length_um;
        let r0 = self.crossing_radius_um;
        let (x2, z2) = (x.square(), z.square());
        let mut s = x2 * z2 * (x2 + z2 + r0 * r0).recip() * (1.0 / (l * l));
        for b in &self.bumps {
            s.add_scaled(b.height, &gaussian(x, z, b.x, b.z, b.width));
        }
        s
    }

    /// |E_RF|² per V_rf², in 1/m².
    pub fn field_squared_per_volt2(&self, point: [f64; 2]) -> f64 {
        let l = self.length_um * 1e-6;
        self.shape(Jet2::constant(point[0]), Jet2::constant(point[1])).value() / (l * l)
    }

    /// Pseudo-potential q²|E|²/(4mΩ²) for the given drive, in eV.
    pub fn pseudopotential(&self, point: [f64; 2], rf_amplitude: f64, rf_frequency_hz: f64, mass_kg: f64) -> f64 {
        let e2 = rf_amplitude * rf_amplitude * self.field_squared_per_volt2(point);
        let omega = std::f64::consts::TAU * rf_frequency_hz;
        ELEMENTARY_CHARGE * e2 / (4.0 * mass_kg * omega * omega)
    }

    /// Volts per unit of S for this model's own drive.
    fn prefactor(&self) -> f64 {
        let l = self.length_um * 1e-6;
        let omega = std::f64::consts::TAU * self.frequency_hz;
        ELEMENTARY_CHARGE * self.amplitude_v * self.amplitude_v / (4.0 * self.mass_kg * omega * omega * l * l)
    }

    pub fn jet(&self, frame: Frame) -> Jet2 {
        let (x, z) = frame.coordinates();
        self.shape(x, z) * self.prefactor()
    }
}

/// Per-electrode and RF expansions at one frame.
#[derive(Debug, Clone)]
pub struct Moments {
    pub frame: Frame,
    pub electrodes: Vec<Jet2>,
    pub rf: Jet2,
}

impl Moments {
    /// Expansion of Σ Vₑ φₑ + Φ_pseudo.
    pub fn total(&self, voltages: &[f64]) -> Jet2 {
        assert_eq!(voltages.len(), self.electrodes.len(), "one voltage per electrode");
        let mut out = self.rf;
        for (v, j) in voltages.iter().zip(&self.electrodes) {
            out.add_scaled(*v, j);
        }
        out
    }

    /// ∂ⁱ_u ∂ʲ_v of every electrode kernel.
    pub fn row(&self, i: usize, j: usize) -> Vec<f64> {
        self.electrodes.iter().map(|e| e.derivative(i, j)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrodeBasis {
    pub electrodes: Vec<Electrode>,
    pub rf: RfModel,
}

impl ElectrodeBasis {
    pub fn new(electrodes: Vec<Electrode>, rf: RfModel) -> Result<Self, WaveformError> {
        let b = Self { electrodes, rf };
        b.check()?;
        Ok(b)
    }

    pub fn check(&self) -> Result<(), WaveformError> {
        if self.electrodes.is_empty() {
            return Err(WaveformError::Basis("no electrodes".into()));
        }
        let mut names = BTreeSet::new();
        for e in &self.electrodes {
            if !names.insert(e.name.as_str()) {
                return Err(WaveformError::Basis(format!("duplicate electrode {}", e.name)));
            }
            if !(e.width > 0.0) || !e.x.is_finite() || !e.z.is_finite() || !e.amplitude.is_finite() {
                return Err(WaveformError::Basis(format!("electrode {} has a bad kernel", e.name)));
            }
        }
        self.rf.check()
    }

    /// Synthetic X-junction: electrode pairs flanking the four arms every
    /// 100 µm out to 1200 µm, one at the crossing, and four RF bumps
    /// 150 µm from the crossing along the arms.
    pub fn x_junction() -> Self {
        const PITCH: f64 = 100.0;
        const COUNT: usize = 12;
        const OFFSET: f64 = 60.0;
        const WIDTH: f64 = 70.0;
        let mut electrodes = vec![Electrode { name: "c00".into(), x: 0.0, z: 0.0, width: WIDTH, amplitude: 1.0 }];
        let arms: [(&str, [f64; 2]); 4] = [("zp", [0.0, 1.0]), ("zm", [0.0, -1.0]), ("xp", [1.0, 0.0]), ("xm", [-1.0, 0.0])];
        for (arm, dir) in arms {
            let across = [dir[1].abs(), dir[0].abs()];
            for k in 1..=COUNT {
                let d = k as f64 * PITCH;
                for (side, sign) in [("p", 1.0), ("n", -1.0)] {
                    electrodes.push(Electrode {
                        name: format!("{arm}{k:02}{side}"),
                        x: dir[0] * d + sign * OFFSET * across[0],
                        z: dir[1] * d + sign * OFFSET * across[1],
                        width: WIDTH,
                        amplitude: 1.0,
                    });
                }
            }
        }
        let bumps = [[150.0, 0.0], [-150.0, 0.0], [0.0, 150.0], [0.0, -150.0]]
            .into_iter()
            .map(|[x, z]| RfBump { x, z, height: 0.05, width: 50.0 })
            .collect();
        let rf = RfModel {
            amplitude_v: 30.0,
            frequency_hz: 80e6,
            length_um: 100.0,
            crossing_radius_um: 50.0,
            bumps,
            mass_kg: BE9_MASS,
        };
        Self { electrodes, rf }
    }

    pub fn names(&self) -> Vec<String> {
        self.electrodes.iter().map(|e| e.name.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.electrodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.electrodes.is_empty()
    }

    pub fn moments_at(&self, frame: Frame) -> Moments {
        let (x, z) = frame.coordinates();
        let electrodes =
            self.electrodes.iter().map(|e| gaussian(x, z, e.x, e.z, e.width) * e.amplitude).collect();
        Moments { frame, electrodes, rf: self.rf.jet(frame) }
    }

    /// Total potential (V) at a point.
    pub fn potential(&self, point: [f64; 2], voltages: &[f64]) -> f64 {
        self.moments_at(Frame::new(point, 0.0)).total(voltages).value()
    }

    pub fn from_json(text: &str) -> Result<Self, WaveformError> {
        let b: Self = serde_json::from_str(text).map_err(|e| WaveformError::Basis(e.to_string()))?;
        b.check()?;
        Ok(b)
    }

    pub fn load(path: &Path) -> Result<Self, WaveformError> {
        let text = std::fs::read_to_string(path).map_err(|e| WaveformError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("basis serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_oracle(f: &dyn Fn(f64, f64) -> f64, i: usize, j: usize, h: f64) -> f64 {
        // Nested central differences.
        fn d(f: &dyn Fn(f64, f64) -> f64, s: f64, t: f64, i: usize, j: usize, h: f64) -> f64 {
            if i > 0 {
                (d(f, s + h, t, i - 1, j, h) - d(f, s - h, t, i - 1, j, h)) / (2.0 * h)
            } else if j > 0 {
                (d(f, s, t + h, 0, j - 1, h) - d(f, s, t - h, 0, j - 1, h)) / (2.0 * h)
            } else {
                f(s, t)
            }
        }
        d(f, 0.0, 0.0, i, j, h)
    }

    #[test]
    fn jets_match_finite_differences() {
        let basis = ElectrodeBasis::x_junction();
        let volts: Vec<f64> = (0..basis.len()).map(|k| ((k * 37 % 11) as f64 - 5.0) * 0.1).collect();
        let frame = Frame::new([23.0, -131.0], 0.4);
        let jet = basis.moments_at(frame).total(&volts);
        let (u, v) = (frame.u(), frame.v());
        let f = |s: f64, t: f64| {
            let p = [frame.point[0] + u[0] * s + v[0] * t, frame.point[1] + u[1] * s + v[1] * t];
            basis.potential(p, &volts)
        };
        let m = basis.moments_at(frame);
        for (i, j) in [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 3), (4, 0), (2, 2), (0, 4)] {
            // Three-level Richardson extrapolation (error O(h⁶)).
            let d: Vec<f64> = [4.0, 2.0, 1.0].iter().map(|&h| fd_oracle(&f, i, j, h)).collect();
            let r1 = [(4.0 * d[1] - d[0]) / 3.0, (4.0 * d[2] - d[1]) / 3.0];
            let fd = (16.0 * r1[1] - r1[0]) / 15.0;
            let exact = jet.derivative(i, j);
            // Size of the individual contributions sets the relative scale.
            let scale = m.rf.derivative(i, j).abs()
                + m.electrodes.iter().zip(&volts).map(|(e, v)| (v * e.derivative(i, j)).abs()).sum::<f64>();
            assert!((fd - exact).abs() < 1e-6 * scale, "({i},{j}) {exact} vs {fd} (scale {scale})");
        }
    }

    #[test]
    fn linear_in_voltages() {
        let basis = ElectrodeBasis::x_junction();
        let m = basis.moments_at(Frame::new([10.0, -700.0], 0.0));
        let zero = vec![0.0; basis.len()];
        assert_eq!(m.total(&zero), m.rf);
        let v: Vec<f64> = (0..basis.len()).map(|k| (k as f64).sin()).collect();
        let v2: Vec<f64> = v.iter().map(|x| 2.0 * x).collect();
        let dc = m.total(&v) - m.rf;
        let dc2 = m.total(&v2) - m.rf;
        for (i, j) in [(0, 0), (1, 0), (2, 0), (1, 1), (4, 0)] {
            assert!((dc2.derivative(i, j) - 2.0 * dc.derivative(i, j)).abs() <= 1e-14 * dc.derivative(i, j).abs().max(1e-300));
        }
    }

    #[test]
    fn pseudopotential_properties() {
        let rf = ElectrodeBasis::x_junction().rf;
        assert_eq!(rf.pseudopotential([30.0, 40.0], 0.0, 80e6, BE9_MASS), 0.0);
        let a = rf.pseudopotential([30.0, 400.0], 30.0, 80e6, BE9_MASS);
        let b = rf.pseudopotential([30.0, 400.0], 30.0, 160e6, BE9_MASS);
        assert!((a / b - 4.0).abs() < 1e-12);
        // Along an arm axis only the bumps contribute; scan for maxima.
        let zs: Vec<f64> = (-400..=400).map(|k| k as f64).collect();
        let p: Vec<f64> = zs.iter().map(|&z| rf.pseudopotential([0.0, z], 30.0, 80e6, BE9_MASS)).collect();
        assert!(p.iter().all(|&x| x >= 0.0));
        let maxima: Vec<f64> = (1..p.len() - 1).filter(|&k| p[k] > p[k - 1] && p[k] > p[k + 1]).map(|k| zs[k]).collect();
        assert_eq!(maxima.len(), 2, "{maxima:?}");
        assert!(maxima.iter().all(|z| (z.abs() - 150.0).abs() < 20.0));
        // The basis' own drive matches the explicit formula.
        let f = Frame::new([17.0, 260.0], 0.0);
        assert!((rf.jet(f).value() - rf.pseudopotential(f.point, 30.0, 80e6, BE9_MASS)).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip_and_validation() {
        let b = ElectrodeBasis::x_junction();
        assert_eq!(ElectrodeBasis::from_json(&b.to_json()).unwrap(), b);
        let mut bad = b.clone();
        bad.electrodes[1].name = "c00".into();
        assert!(bad.check().is_err());
        let mut bad = b;
        bad.rf.bumps[0].height = -1.0;
        assert!(bad.check().is_err());
    }
}
