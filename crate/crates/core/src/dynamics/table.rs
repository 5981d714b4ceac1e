use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use super::ledger::{
    derive_primitive_excitation, simulate_sequence, CoveredStep, ExcitationLedgerConfig, LedgerError, MotionalState,
};
use super::modes::ModeLabel;
use super::phase::PhaseSources;
use crate::compiler::{BaselineRef, CompileError, PrimitiveLibrary, ShuttleSequence, TableRow, TransportPrimitive};
use crate::topology::TrapGraph;
use crate::Uncertain;

/// Rounding slack allowed when comparing a re-derived Δn with the
/// tabulated one.
pub const DERIVATION_SLACK: f64 = 0.002;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableCheckError {
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error("row {row}: {reason}")]
    BadRow { row: u32, reason: String },
}

/// Outcome for one measured (row, mode) pair.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RowCheck {
    pub row: u32,
    pub primitive: String,
    pub ions: Vec<char>,
    pub mode: ModeLabel,
    pub measured: Uncertain,
    pub baseline: Uncertain,
    /// Baseline plus every step before the measurement; absent when a step
    /// carries no cost.
    pub predicted: Option<Uncertain>,
    /// |predicted − measured| within the measured 1σ.
    pub predicted_agrees: Option<bool>,
    pub table_delta: Option<Uncertain>,
    pub derived: Option<Uncertain>,
    /// |derived − tabulated| within max(tabulated σ, rounding slack).
    pub derived_agrees: Option<bool>,
}

impl RowCheck {
    pub fn passes(&self) -> bool {
        self.predicted_agrees.unwrap_or(true) && self.derived_agrees.unwrap_or(true)
    }
}

fn owns(step: &TransportPrimitive, id: &str) -> bool {
    step.id == id || step.components.iter().any(|c| c == id)
}

/// The row's test sequence as transport steps. Transitions are matched to
/// the row's own primitive first, then to any library entry.
pub fn row_sequence(row: &TableRow, library: &PrimitiveLibrary) -> Result<ShuttleSequence, TableCheckError> {
    let own = library.get(&row.primitive)?;
    let mut steps = Vec::new();
    for w in row.test_sequence.windows(2) {
        let direct = [own.clone(), own.reverse()]
            .into_iter()
            .filter_map(|p| p.apply(&w[0]).ok())
            .find(|s| s.target == w[1]);
        let step = match direct {
            Some(s) => s,
            None => library.infer_step(&w[0], &w[1])?,
        };
        steps.push(step);
    }
    Ok(ShuttleSequence::new(steps))
}

fn measured_prefix(row: &TableRow, library: &PrimitiveLibrary) -> Result<ShuttleSequence, TableCheckError> {
    let seq = row_sequence(row, library)?;
    Ok(ShuttleSequence::new(seq.steps[..row.measured_at].to_vec()))
}

struct Baseline {
    value: BTreeMap<ModeLabel, Uncertain>,
    covered: Vec<CoveredStep>,
}

fn baseline_for(row: &TableRow, library: &PrimitiveLibrary) -> Result<Baseline, TableCheckError> {
    match &row.baseline {
        BaselineRef::Preparation => {
            let n_ions = row.test_sequence[0].ions().len();
            let value = match n_ions {
                1 => library.preparation.single_ion.clone(),
                2 => library.preparation.two_ion.clone(),
                n => return Err(TableCheckError::BadRow { row: row.row, reason: format!("no preparation for {n} ions") }),
            };
            Ok(Baseline { value, covered: Vec::new() })
        }
        BaselineRef::Row(r) => {
            let base = library
                .row(*r)
                .ok_or_else(|| TableCheckError::BadRow { row: row.row, reason: format!("baseline row {r} missing") })?;
            if base.measured_ions != row.measured_ions {
                return Err(TableCheckError::BadRow {
                    row: row.row,
                    reason: format!("baseline row {r} measures other ions"),
                });
            }
            let covered = measured_prefix(base, library)?
                .steps
                .iter()
                .map(|s| CoveredStep { id: s.id.clone(), reversed: s.reversed })
                .collect();
            Ok(Baseline { value: base.measured_n.clone(), covered })
        }
    }
}

/// Recompute every row of the table: predicted n̄ at the measured
/// configuration, and Δn re-derived from the measured value.
pub fn check_table(library: &PrimitiveLibrary, graph: &TrapGraph) -> Result<Vec<RowCheck>, TableCheckError> {
    let mut out = Vec::new();
    for row in library.rows() {
        let prefix = measured_prefix(row, library)?;
        let base = baseline_for(row, library)?;
        let own = library.get(&row.primitive)?;
        for (&mode, &measured) in &row.measured_n {
            let Some(&baseline) = base.value.get(&mode) else {
                out.push(RowCheck {
                    row: row.row,
                    primitive: row.primitive.clone(),
                    ions: row.measured_ions.clone(),
                    mode,
                    measured,
                    baseline: Uncertain::ZERO,
                    predicted: None,
                    predicted_agrees: None,
                    table_delta: None,
                    derived: None,
                    derived_agrees: None,
                });
                continue;
            };
            let ion = row.measured_ions[0];
            let table_delta = own.cost.as_ref().and_then(|c| c.get(&ion)).and_then(|m| m.get(&mode)).copied();

            let mut config = ExcitationLedgerConfig::with_baseline(MotionalState::thermal([(mode, baseline)]));
            config.covered = base.covered.clone();
            let predicted = match simulate_sequence(&prefix, graph, &config, &PhaseSources::none()) {
                Ok(r) => r.state.occupations.get(&ion).and_then(|m| m.get(&mode)).copied(),
                Err(LedgerError::Uncovered { .. }) => None,
                Err(e) => return Err(e.into()),
            };
            let predicted_agrees = predicted.map(|p| (p.value - measured.value).abs() <= measured.sigma + 1e-12);

            let derived = match table_delta {
                Some(_) => derive_from_prefix(&prefix, &base.covered, &row.primitive, ion, mode, measured, baseline)?,
                None => None,
            };
            let derived_agrees = match (derived, table_delta) {
                (Some(d), Some(t)) => Some((d.value - t.value).abs() <= t.sigma.max(DERIVATION_SLACK) + 1e-12),
                _ => None,
            };
            out.push(RowCheck {
                row: row.row,
                primitive: row.primitive.clone(),
                ions: row.measured_ions.clone(),
                mode,
                measured,
                baseline,
                predicted,
                predicted_agrees,
                table_delta,
                derived,
                derived_agrees,
            });
        }
    }
    Ok(out)
}

fn derive_from_prefix(
    prefix: &ShuttleSequence,
    covered: &[CoveredStep],
    primitive: &str,
    ion: char,
    mode: ModeLabel,
    measured: Uncertain,
    baseline: Uncertain,
) -> Result<Option<Uncertain>, TableCheckError> {
    let mut remaining = covered.to_vec();
    let mut known = Vec::new();
    let mut passes = 0;
    for s in &prefix.steps {
        if let Some(i) = remaining.iter().position(|c| c.id == s.id && c.reversed == s.reversed) {
            remaining.remove(i);
            continue;
        }
        if owns(s, primitive) {
            passes += 1;
            continue;
        }
        match s.cost.as_ref() {
            Some(c) => known.push(c.get(&ion).and_then(|m| m.get(&mode)).copied().unwrap_or(Uncertain::ZERO)),
            None => return Ok(None),
        }
    }
    if passes == 0 {
        return Ok(None);
    }
    Ok(Some(derive_primitive_excitation(measured, baseline, &known, passes)?.delta_n))
}
