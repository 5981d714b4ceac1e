use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix2, SymmetricEigen, Vector2};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::constants::{coulomb_e2, ELEMENTARY_CHARGE, EPSILON_0};

/// Motional mode identifier.
///
/// `Axial` is the axial mode of an ion alone in its well; `Com`/`Str` are
/// the axial modes of a two-ion crystal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ModeLabel {
    Axial,
    Com,
    Str,
    Radial(u8),
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeLabel::Axial => f.write_str("axial"),
            ModeLabel::Com => f.write_str("com"),
            ModeLabel::Str => f.write_str("str"),
            ModeLabel::Radial(k) => write!(f, "radial-{k}"),
        }
    }
}

impl FromStr for ModeLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "axial" => Ok(ModeLabel::Axial),
            "com" => Ok(ModeLabel::Com),
            "str" => Ok(ModeLabel::Str),
            other => other
                .strip_prefix("radial-")
                .and_then(|k| k.parse().ok())
                .map(ModeLabel::Radial)
                .ok_or_else(|| format!("unknown mode label {s:?}")),
        }
    }
}

impl Serialize for ModeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ModeLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    pub label: ModeLabel,
    /// Ordinary frequency, MHz.
    pub frequency_mhz: f64,
    /// Participation vector over the ions (unit norm, mass weighted).
    pub vector: Vec<f64>,
}

#[derive(Debug, Error, PartialEq)]
pub enum ModeError {
    #[error("frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("masses must be positive, got ({0}, {1})")]
    NonPositiveMass(f64, f64),
}

/// Two-ion equilibrium spacing d = (e²/(2πε₀ m ω²))^(1/3), µm.
pub fn equilibrium_spacing(axial_freq_mhz: f64, mass: f64) -> Result<f64, ModeError> {
    if !(axial_freq_mhz > 0.0) {
        return Err(ModeError::NonPositiveFrequency(axial_freq_mhz));
    }
    if !(mass > 0.0) {
        return Err(ModeError::NonPositiveMass(mass, mass));
    }
    let omega = 2.0 * PI * axial_freq_mhz * 1e6;
    let e2 = ELEMENTARY_CHARGE * ELEMENTARY_CHARGE;
    Ok((e2 / (2.0 * PI * EPSILON_0 * mass * omega * omega)).cbrt() * 1e6)
}

/// Axial normal modes of two ions in a common harmonic well.
///
/// `axial_freq_mhz` is the single-ion frequency of an ion with mass
/// `masses.0`; the well's spring constant k = m₀ω² is shared by both ions.
/// The Hessian at the equilibrium spacing is k·[[2, −1], [−1, 2]]; mass
/// weighting and diagonalization give the mode frequencies. Returns
/// (COM-like, STR-like) ordered by frequency.
pub fn two_ion_normal_modes(axial_freq_mhz: f64, masses: (f64, f64)) -> Result<(ModeSpec, ModeSpec), ModeError> {
    if !(axial_freq_mhz > 0.0) {
        return Err(ModeError::NonPositiveFrequency(axial_freq_mhz));
    }
    if !(masses.0 > 0.0 && masses.1 > 0.0) {
        return Err(ModeError::NonPositiveMass(masses.0, masses.1));
    }
    let omega = 2.0 * PI * axial_freq_mhz * 1e6;
    let k = masses.0 * omega * omega;
    let d = (coulomb_e2() * 2.0 / k).cbrt();
    // Coulomb curvature 2e²/(4πε₀d³) equals k at equilibrium; kept explicit.
    let kc = 2.0 * coulomb_e2() / d.powi(3);
    let hessian = Matrix2::new(k + kc, -kc, -kc, k + kc);
    let inv_sqrt_m = Vector2::new(masses.0.sqrt().recip(), masses.1.sqrt().recip());
    let weighted = Matrix2::from_fn(|i, j| hessian[(i, j)] * inv_sqrt_m[i] * inv_sqrt_m[j]);
    let eig = SymmetricEigen::new(weighted);
    let mut order = [0usize, 1];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let spec = |idx: usize, label| {
        let w2 = eig.eigenvalues[idx];
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        // Fix the sign so the first ion's component is non-negative.
        if v[0] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        ModeSpec { label, frequency_mhz: w2.sqrt() / (2.0 * PI) / 1e6, vector: v }
    };
    Ok((spec(order[0], ModeLabel::Com), spec(order[1], ModeLabel::Str)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::BE9_MASS;

    #[test]
    fn labels_round_trip() {
        for m in [ModeLabel::Axial, ModeLabel::Com, ModeLabel::Str, ModeLabel::Radial(2)] {
            assert_eq!(m.to_string().parse::<ModeLabel>().unwrap(), m);
        }
        assert!("bogus".parse::<ModeLabel>().is_err());
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(two_ion_normal_modes(0.0, (BE9_MASS, BE9_MASS)).is_err());
        assert!(two_ion_normal_modes(1.0, (BE9_MASS, -1.0)).is_err());
        assert!(equilibrium_spacing(-1.0, BE9_MASS).is_err());
    }

    #[test]
    fn spacing_scales_with_mass() {
        let d1 = equilibrium_spacing(3.6, BE9_MASS).unwrap();
        let d2 = equilibrium_spacing(3.6, 2.0 * BE9_MASS).unwrap();
        assert!((d2 / d1 - 2f64.powf(-1.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_vectors() {
        let (com, str_) = two_ion_normal_modes(3.6, (BE9_MASS, 3.0 * BE9_MASS)).unwrap();
        let dot: f64 = com.vector.iter().zip(&str_.vector).map(|(a, b)| a * b).sum();
        assert!(dot.abs() < 1e-12);
        for v in [&com.vector, &str_.vector] {
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!(com.frequency_mhz < str_.frequency_mhz);
    }
}
