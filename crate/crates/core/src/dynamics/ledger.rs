use std::collections::BTreeMap;
use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::modes::ModeLabel;
use super::phase::{PhaseSources, StepPath};
use crate::compiler::{validate_sequence, ShuttleSequence};
use crate::exec::{map_ordered, Execution};
use crate::topology::{TrapGraph, WellConfiguration, ZoneLabel};
use crate::Uncertain;

pub type Occupations = BTreeMap<char, BTreeMap<ModeLabel, Uncertain>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OccupationDistribution {
    #[default]
    Thermal,
    Coherent,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MotionalState {
    pub occupations: BTreeMap<ModeLabel, Uncertain>,
    #[serde(default)]
    pub distribution: OccupationDistribution,
}

impl MotionalState {
    pub fn thermal(modes: impl IntoIterator<Item = (ModeLabel, Uncertain)>) -> Self {
        Self { occupations: modes.into_iter().collect(), distribution: OccupationDistribution::Thermal }
    }

    fn check(&self) -> Result<(), LedgerError> {
        for (m, u) in &self.occupations {
            if !(u.value >= 0.0 && u.sigma >= 0.0) {
                return Err(LedgerError::BadConfig(format!("baseline {m} = {u} must be non-negative")));
            }
        }
        Ok(())
    }
}

/// One step whose excitation is already part of the measured baseline.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CoveredStep {
    pub id: String,
    #[serde(default)]
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcitationLedgerConfig {
    /// Quanta per second added to every tracked mode while idle.
    #[serde(default)]
    pub idle_heating_rate: f64,
    /// Starting occupations for any ion without an entry in `per_ion`.
    pub baseline: MotionalState,
    #[serde(default)]
    pub per_ion: BTreeMap<char, MotionalState>,
    /// Steps absorbed by the baseline, consumed as a multiset in order of
    /// appearance.
    #[serde(default)]
    pub covered: Vec<CoveredStep>,
    /// Added to every tracked mode at each boundary between two steps.
    #[serde(default)]
    pub concatenation_penalty: Uncertain,
}

impl Default for ExcitationLedgerConfig {
    fn default() -> Self {
        Self {
            idle_heating_rate: 0.0,
            baseline: MotionalState::default(),
            per_ion: BTreeMap::new(),
            covered: Vec::new(),
            concatenation_penalty: Uncertain::ZERO,
        }
    }
}

impl ExcitationLedgerConfig {
    pub fn with_baseline(baseline: MotionalState) -> Self {
        Self { baseline, ..Default::default() }
    }

    fn check(&self) -> Result<(), LedgerError> {
        if !(self.idle_heating_rate >= 0.0) {
            return Err(LedgerError::BadConfig(format!(
                "idle heating rate {} must be >= 0",
                self.idle_heating_rate
            )));
        }
        self.baseline.check()?;
        for s in self.per_ion.values() {
            s.check()?;
        }
        Ok(())
    }

    fn baseline_for(&self, ion: char) -> &MotionalState {
        self.per_ion.get(&ion).unwrap_or(&self.baseline)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LedgerError {
    #[error("step {step} ({id}) has no excitation cost and is not covered by the baseline")]
    Uncovered { step: usize, id: String },
    #[error("invalid sequence: {0}")]
    InvalidSequence(String),
    #[error("zone {0} is not in the trap graph")]
    UnknownZone(ZoneLabel),
    #[error("ion {0} is not present in the configuration")]
    UnknownIon(char),
    #[error("bad ledger configuration: {0}")]
    BadConfig(String),
    #[error("passes must be at least 1")]
    NoPasses,
}

/// Running totals, unclamped. Feeding a state back into [`simulate_from`]
/// continues the ledger exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerState {
    pub occupations: Occupations,
    pub distribution: BTreeMap<char, OccupationDistribution>,
    /// Accumulated phase per ion, rad.
    pub phase_rad: BTreeMap<char, f64>,
    pub elapsed_us: f64,
    /// Absolute index of the current configuration.
    pub configuration_index: usize,
    pub steps_taken: usize,
    pub covered_remaining: Vec<CoveredStep>,
}

impl LedgerState {
    /// State before any transport, for the ions of `start`.
    pub fn initial(start: &WellConfiguration, config: &ExcitationLedgerConfig) -> Result<Self, LedgerError> {
        config.check()?;
        let mut occupations = Occupations::new();
        let mut distribution = BTreeMap::new();
        let mut phase_rad = BTreeMap::new();
        for ion in start.ions() {
            let b = config.baseline_for(ion);
            occupations.insert(ion, b.occupations.clone());
            distribution.insert(ion, b.distribution);
            phase_rad.insert(ion, 0.0);
        }
        let mut covered_remaining = config.covered.clone();
        covered_remaining.sort();
        Ok(Self {
            occupations,
            distribution,
            phase_rad,
            elapsed_us: 0.0,
            configuration_index: 0,
            steps_taken: 0,
            covered_remaining,
        })
    }

    fn take_covered(&mut self, id: &str, reversed: bool) -> bool {
        let pos = self.covered_remaining.iter().position(|c| c.id == id && c.reversed == reversed);
        match pos {
            Some(i) => {
                self.covered_remaining.remove(i);
                true
            }
            None => false,
        }
    }

    fn add_everywhere(&mut self, amount: Uncertain) {
        for modes in self.occupations.values_mut() {
            for u in modes.values_mut() {
                *u = *u + amount;
            }
        }
    }

    fn accrue_phase(
        &mut self,
        graph: &TrapGraph,
        phases: &PhaseSources,
        from: &WellConfiguration,
        to: &WellConfiguration,
        duration_us: f64,
    ) -> Result<(), LedgerError> {
        let k = self.configuration_index;
        for (ion, phase) in self.phase_rad.iter_mut() {
            if !phases.active_window.contains(*ion, k) {
                continue;
            }
            let p0 = position(graph, from, *ion)?;
            let p1 = position(graph, to, *ion)?;
            let hz = phases.mean_detuning_hz(*ion, StepPath { from: p0, to: p1 });
            *phase += TAU * hz * duration_us * 1e-6;
        }
        Ok(())
    }
}

fn position(graph: &TrapGraph, config: &WellConfiguration, ion: char) -> Result<[f64; 2], LedgerError> {
    let (zone, _) = config.locate(ion).ok_or(LedgerError::UnknownIon(ion))?;
    graph.zone(zone).map(|z| z.position).ok_or(LedgerError::UnknownZone(zone))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    /// Per ion, per mode n̄, clamped at zero.
    pub occupations: Occupations,
    pub phase_rad: BTreeMap<char, f64>,
    /// Phase reduced into [0, 2π).
    pub phase_mod_2pi: BTreeMap<char, f64>,
    pub duration_us: f64,
    pub state: LedgerState,
}

impl LedgerReport {
    fn from_state(state: LedgerState, duration_us: f64) -> Self {
        let occupations = state
            .occupations
            .iter()
            .map(|(ion, modes)| {
                let modes = modes.iter().map(|(m, u)| (*m, Uncertain::new(u.value.max(0.0), u.sigma))).collect();
                (*ion, modes)
            })
            .collect();
        let phase_mod_2pi = state.phase_rad.iter().map(|(i, p)| (*i, p.rem_euclid(TAU))).collect();
        Self { occupations, phase_rad: state.phase_rad.clone(), phase_mod_2pi, duration_us, state }
    }

    pub fn n(&self, ion: char, mode: ModeLabel) -> Option<Uncertain> {
        self.occupations.get(&ion)?.get(&mode).copied()
    }
}

/// Run the excitation and phase ledger over `seq` from its preparation.
///
/// An empty sequence has no ions; its report is empty.
pub fn simulate_sequence(
    seq: &ShuttleSequence,
    graph: &TrapGraph,
    config: &ExcitationLedgerConfig,
    phases: &PhaseSources,
) -> Result<LedgerReport, LedgerError> {
    let Some(first) = seq.steps.first() else {
        return Ok(LedgerReport::from_state(
            LedgerState {
                occupations: Occupations::new(),
                distribution: BTreeMap::new(),
                phase_rad: BTreeMap::new(),
                elapsed_us: 0.0,
                configuration_index: 0,
                steps_taken: 0,
                covered_remaining: config.covered.clone(),
            },
            0.0,
        ));
    };
    let state = LedgerState::initial(&first.initial, config)?;
    simulate_from(state, seq, graph, config, phases)
}

/// Continue a ledger from `state`. The reported duration covers `seq` only.
pub fn simulate_from(
    mut state: LedgerState,
    seq: &ShuttleSequence,
    graph: &TrapGraph,
    config: &ExcitationLedgerConfig,
    phases: &PhaseSources,
) -> Result<LedgerReport, LedgerError> {
    config.check()?;
    phases.check().map_err(LedgerError::BadConfig)?;
    let report = validate_sequence(seq);
    if !report.is_ok() {
        return Err(LedgerError::InvalidSequence(report.to_string()));
    }
    let start_us = state.elapsed_us;
    let n = seq.steps.len();
    if n == 0 {
        // No configuration to place idle time in.
        return Ok(LedgerReport::from_state(state, 0.0));
    }
    for k in 0..=n {
        let here = if k < n { &seq.steps[k].initial } else { &seq.steps[n - 1].target };
        let idle = seq.idle_at(k);
        if idle > 0.0 {
            state.add_everywhere(Uncertain::exact(config.idle_heating_rate * idle * 1e-6));
            state.accrue_phase(graph, phases, here, here, idle)?;
            state.elapsed_us += idle;
        }
        let Some(step) = seq.steps.get(k) else { break };
        if state.steps_taken > 0 {
            state.add_everywhere(config.concatenation_penalty);
        }
        let covered = state.take_covered(&step.id, step.reversed);
        if !covered {
            let cost = step
                .cost
                .as_ref()
                .ok_or_else(|| LedgerError::Uncovered { step: k, id: step.id.clone() })?;
            for (ion, modes) in cost {
                let slot = state.occupations.entry(*ion).or_default();
                for (m, du) in modes {
                    let acc = slot.get(m).copied().unwrap_or(Uncertain::ZERO);
                    slot.insert(*m, acc + *du);
                }
            }
        }
        state.accrue_phase(graph, phases, &step.initial, &step.target, step.duration_us)?;
        state.elapsed_us += step.duration_us;
        state.configuration_index += 1;
        state.steps_taken += 1;
    }
    let duration = state.elapsed_us - start_us;
    Ok(LedgerReport::from_state(state, duration))
}

/// Independent sequences through the same ledger, in input order.
pub fn simulate_batch(
    exec: Execution,
    seqs: &[ShuttleSequence],
    graph: &TrapGraph,
    config: &ExcitationLedgerConfig,
    phases: &PhaseSources,
) -> Vec<Result<LedgerReport, LedgerError>> {
    map_ordered(exec, seqs, |s| simulate_sequence(s, graph, config, phases))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derivation {
    pub delta_n: Uncertain,
    /// Central value below zero by more than 3σ.
    pub negative: bool,
}

/// Excess excitation per pass of a primitive: what is left of the measured
/// n̄ after the baseline and all known contributions, split evenly over the
/// passes.
pub fn derive_primitive_excitation(
    measured: Uncertain,
    baseline: Uncertain,
    known: &[Uncertain],
    passes: u32,
) -> Result<Derivation, LedgerError> {
    if passes == 0 {
        return Err(LedgerError::NoPasses);
    }
    let rest = measured - baseline - Uncertain::sum(known.iter().copied());
    let delta_n = rest / passes as f64;
    Ok(Derivation { delta_n, negative: delta_n.value < -3.0 * delta_n.sigma })
}
