use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::distribution::{auto_truncation, populations};
use super::rabi::coupling_table;
use super::ThermoError;
use crate::dynamics::{ModeLabel, OccupationDistribution};

/// Which forward model a curve is described by.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crystal {
    OneIonOneMode,
    OneIonTwoModes,
    TwoIonsSameSpecies,
}

/// Probed mode and sideband order (+1 blue, −1 red, 0 carrier).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sideband {
    pub mode: ModeLabel,
    pub kappa: i32,
}

impl Sideband {
    pub fn blue(mode: ModeLabel) -> Self {
        Self { mode, kappa: 1 }
    }

    pub fn red(mode: ModeLabel) -> Self {
        Self { mode, kappa: -1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlopModelParams {
    /// Carrier Rabi rate, rad/s.
    pub omega: f64,
    /// Phenomenological decay rate, 1/s.
    pub gamma: f64,
    pub nbar: BTreeMap<ModeLabel, f64>,
    pub eta: BTreeMap<ModeLabel, f64>,
    /// Highest Fock index per mode; modes without an entry are truncated
    /// automatically from their n̄.
    #[serde(default)]
    pub truncation: BTreeMap<ModeLabel, usize>,
    #[serde(default)]
    pub distribution: OccupationDistribution,
}

impl FlopModelParams {
    pub fn single_mode(mode: ModeLabel, omega: f64, gamma: f64, nbar: f64, eta: f64) -> Self {
        Self {
            omega,
            gamma,
            nbar: BTreeMap::from([(mode, nbar)]),
            eta: BTreeMap::from([(mode, eta)]),
            truncation: BTreeMap::new(),
            distribution: OccupationDistribution::Thermal,
        }
    }

    pub fn validate(&self) -> Result<(), ThermoError> {
        let bad = |m: String| Err(ThermoError::InvalidParams(m));
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return bad(format!("omega must be positive, got {}", self.omega));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be >= 0, got {}", self.gamma));
        }
        for (m, n) in &self.nbar {
            if !(*n >= 0.0 && n.is_finite()) {
                return bad(format!("nbar[{m}] must be >= 0, got {n}"));
            }
            if !self.eta.contains_key(m) {
                return Err(ThermoError::MissingMode(*m));
            }
        }
        for (m, e) in &self.eta {
            if !(0.0..1.0).contains(e) {
                return bad(format!("eta[{m}] must lie in [0, 1), got {e}"));
            }
            if *e > 0.5 {
                log::warn!("eta[{m}] = {e} is outside the usual Lamb-Dicke regime");
            }
            if !self.nbar.contains_key(m) {
                return Err(ThermoError::MissingMode(*m));
            }
        }
        Ok(())
    }

    pub fn truncation_for(&self, mode: ModeLabel) -> Result<usize, ThermoError> {
        if let Some(&n) = self.truncation.get(&mode) {
            return Ok(n.max(1));
        }
        let nbar = *self.nbar.get(&mode).ok_or(ThermoError::MissingMode(mode))?;
        Ok(auto_truncation(self.distribution, nbar))
    }

    /// The mode other than `probed`, for two-mode models.
    fn spectator(&self, probed: ModeLabel) -> Result<Option<ModeLabel>, ThermoError> {
        let others: Vec<ModeLabel> = self.eta.keys().copied().filter(|m| *m != probed).collect();
        match others.len() {
            0 => Ok(None),
            1 => Ok(Some(others[0])),
            _ => Err(ThermoError::InvalidParams(format!("two-mode models need two modes, got {}", self.eta.len()))),
        }
    }
}

/// P(t) = constant + e^{−γt} Σ a_j cos(w_j t).
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub constant: f64,
    pub terms: Vec<(f64, f64)>,
}

impl Expansion {
    pub fn eval(&self, t: f64, gamma: f64) -> f64 {
        let osc: f64 = self.terms.iter().map(|(a, w)| a * (w * t).cos()).sum();
        self.constant + (-gamma * t).exp() * osc
    }
}

/// |c0|², |c1|² of a resonant three-level ladder started in its first
/// state, with the decay factor applied to oscillating parts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThreeLevelCoefficients {
    pub g1: f64,
    pub g2: f64,
    pub gc: f64,
    pub c0_sq: f64,
    pub c1_sq: f64,
}

pub fn three_level(g1: f64, g2: f64, gamma: f64, t: f64) -> ThreeLevelCoefficients {
    let gc = g1.hypot(g2);
    if gc < 1e-300 {
        return ThreeLevelCoefficients { g1, g2, gc, c0_sq: 1.0, c1_sq: 0.0 };
    }
    let (a, b) = (g1 * g1 / (gc * gc), g2 * g2 / (gc * gc));
    let d = (-gamma * t).exp();
    let c2 = (2.0 * gc * t).cos();
    let c0_sq = a * a / 2.0 + a * a / 2.0 * c2 * d + 2.0 * a * b * (gc * t).cos() * d + b * b;
    let c1_sq = a * (0.5 - 0.5 * c2 * d);
    ThreeLevelCoefficients { g1, g2, gc, c0_sq, c1_sq }
}

/// Sum over the probed mode n (and spectator m) of p_nm times the two-level
/// or three-level response.
fn build(params: &FlopModelParams, sideband: Sideband, spectator: Option<ModeLabel>, three_level_ladder: bool) -> Result<Expansion, ThermoError> {
    params.validate()?;
    let probed = sideband.mode;
    let kappa = sideband.kappa;
    if !(-1..=1).contains(&kappa) {
        return Err(ThermoError::InvalidParams(format!("sideband order {kappa} out of scope")));
    }
    let eta1 = *params.eta.get(&probed).ok_or(ThermoError::MissingMode(probed))?;
    let n_max = params.truncation_for(probed)?;
    let p1 = populations(params.distribution, params.nbar[&probed], n_max);

    // A spectator with η = 0 sums to its total population, i.e. 1.
    let spectator = spectator.filter(|s| params.eta[s] != 0.0);
    let (p2, d2) = match spectator {
        Some(s) => {
            let m_max = params.truncation_for(s)?;
            (populations(params.distribution, params.nbar[&s], m_max), coupling_table(m_max, 0, params.eta[&s]))
        }
        None => (vec![1.0], vec![1.0]),
    };
    let d1 = coupling_table(n_max + 1, kappa, eta1);

    // Red sidebands leave |0⟩ untouched; it joins the constant below.
    let n_range = if kappa == -1 { 1..n_max + 1 } else { 0..n_max + 1 };
    let mut out = Expansion { constant: 0.0, terms: Vec::new() };
    for (m, &pm) in p2.iter().enumerate() {
        if kappa == -1 {
            out.constant += p1[0] * pm;
        }
        for n in n_range.clone() {
            let w = p1[n] * pm;
            let rate = params.omega * (d1[n] * d2[m]).abs();
            if three_level_ladder {
                let next = (n as i64 + kappa as i64) as usize;
                let g1 = FRAC_1_SQRT_2 * rate;
                let g2 = FRAC_1_SQRT_2 * params.omega * (d1.get(next).copied().unwrap_or(0.0) * d2[m]).abs();
                let gc = g1.hypot(g2);
                if gc < 1e-300 {
                    out.constant += w;
                    continue;
                }
                let (a, b) = (g1 * g1 / (gc * gc), g2 * g2 / (gc * gc));
                // |c0|² + ½|c1|² split into constant, cos(gc t) and cos(2gc t) parts.
                out.constant += w * (a * a / 2.0 + b * b + a / 4.0);
                out.terms.push((w * 2.0 * a * b, gc));
                out.terms.push((w * (a * a / 2.0 - a / 4.0), 2.0 * gc));
            } else {
                out.constant += w / 2.0;
                out.terms.push((w / 2.0, rate));
            }
        }
    }
    Ok(out)
}

/// Remaining initial-state population of one ion probed on one mode.
pub fn single_ion_expansion(params: &FlopModelParams, sideband: Sideband) -> Result<Expansion, ThermoError> {
    build(params, sideband, None, false)
}

/// One ion probed on `sideband.mode` with the other mode as spectator.
pub fn two_mode_expansion(params: &FlopModelParams, sideband: Sideband) -> Result<Expansion, ThermoError> {
    let spectator = params.spectator(sideband.mode)?;
    build(params, sideband, spectator, false)
}

/// Mean fluorescence of a same-species two-ion crystal.
pub fn two_ion_expansion(params: &FlopModelParams, sideband: Sideband) -> Result<Expansion, ThermoError> {
    let spectator = params.spectator(sideband.mode)?;
    build(params, sideband, spectator, true)
}

pub fn expansion(params: &FlopModelParams, crystal: Crystal, sideband: Sideband) -> Result<Expansion, ThermoError> {
    match crystal {
        Crystal::OneIonOneMode => single_ion_expansion(params, sideband),
        Crystal::OneIonTwoModes => two_mode_expansion(params, sideband),
        Crystal::TwoIonsSameSpecies => two_ion_expansion(params, sideband),
    }
}

pub fn single_ion_flop(params: &FlopModelParams, mode: ModeLabel, t: f64, kappa: i32) -> Result<f64, ThermoError> {
    Ok(single_ion_expansion(params, Sideband { mode, kappa })?.eval(t, params.gamma))
}

pub fn two_mode_flop(params: &FlopModelParams, t: f64, which_mode: ModeLabel, kappa: i32) -> Result<f64, ThermoError> {
    Ok(two_mode_expansion(params, Sideband { mode: which_mode, kappa })?.eval(t, params.gamma))
}

pub fn two_ion_flop(params: &FlopModelParams, t: f64, mode: ModeLabel, kappa: i32) -> Result<f64, ThermoError> {
    Ok(two_ion_expansion(params, Sideband { mode, kappa })?.eval(t, params.gamma))
}
