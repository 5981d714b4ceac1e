use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::CompileError;
use crate::dynamics::ModeLabel;
use crate::topology::{Well, WellConfiguration, ZoneLabel};
use crate::Uncertain;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrimitiveKind {
    Shuttle,
    Separate,
    Recombine,
    RotateWell,
}

impl PrimitiveKind {
    pub fn reversed(self) -> Self {
        match self {
            PrimitiveKind::Separate => PrimitiveKind::Recombine,
            PrimitiveKind::Recombine => PrimitiveKind::Separate,
            k => k,
        }
    }
}

/// Excess quanta per execution, per ion and mode.
pub type ExcitationCost = BTreeMap<char, BTreeMap<ModeLabel, Uncertain>>;

/// One transport step between two well configurations.
///
/// Library entries are templates written with ions `a`, `b`; compiled
/// sequences hold concrete instances produced by [`TransportPrimitive::apply`],
/// which relabels ions and carries spectator wells along.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportPrimitive {
    pub id: String,
    pub name: String,
    pub initial: WellConfiguration,
    #[serde(rename = "final")]
    pub target: WellConfiguration,
    pub kind: PrimitiveKind,
    pub duration_us: f64,
    #[serde(default)]
    pub distance_um: BTreeMap<char, f64>,
    /// `None` when no per-primitive excess was derived.
    #[serde(default, rename = "delta_n", skip_serializing_if = "Option::is_none")]
    pub cost: Option<ExcitationCost>,
    /// Measurement context for entries that share a name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    #[serde(default)]
    pub reversed: bool,
    /// Library ids this entry was assembled from, if composite.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub components: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<u32>,
}

impl TransportPrimitive {
    /// Check the structural invariants of a primitive.
    pub fn check(&self) -> Result<(), CompileError> {
        let bad = |msg: &str| Err(CompileError::InvalidPrimitive { id: self.id.clone(), reason: msg.to_string() });
        if self.initial.ions() != self.target.ions() {
            return bad("initial and final ion sets differ");
        }
        if !(self.duration_us > 0.0) {
            return bad("duration must be positive");
        }
        let (ni, nf) = (self.initial.wells().len(), self.target.wells().len());
        match self.kind {
            PrimitiveKind::Separate if !(ni == 1 && nf == 2) => return bad("separate must go from 1 well to 2"),
            PrimitiveKind::Recombine if !(ni == 2 && nf == 1) => return bad("recombine must go from 2 wells to 1"),
            PrimitiveKind::RotateWell => {
                let swap = |z: ZoneLabel| match z {
                    ZoneLabel::C => ZoneLabel::CPrime,
                    ZoneLabel::CPrime => ZoneLabel::C,
                    z => z,
                };
                let rotated: Vec<Well> = self
                    .initial
                    .wells()
                    .iter()
                    .map(|w| Well { zone: swap(w.zone), ions: w.ions.clone() })
                    .collect();
                if rotated != self.target.wells() || self.initial == self.target {
                    return bad("rotation may only exchange C and C'");
                }
            }
            _ => {}
        }
        if let Some(cost) = &self.cost {
            for (ion, modes) in cost {
                if !self.initial.ions().contains(ion) {
                    return bad("excitation cost names an ion not moved by the primitive");
                }
                if modes.values().any(|u| !(u.sigma >= 0.0)) {
                    return bad("negative uncertainty");
                }
            }
        }
        Ok(())
    }

    /// Same primitive run backwards: endpoints swapped, kind mirrored,
    /// duration, distances and excitation cost unchanged.
    pub fn reverse(&self) -> TransportPrimitive {
        TransportPrimitive {
            initial: self.target.clone(),
            target: self.initial.clone(),
            kind: self.kind.reversed(),
            reversed: !self.reversed,
            ..self.clone()
        }
    }

    pub fn has_cost(&self) -> bool {
        self.cost.is_some()
    }

    /// Instantiate this template on `current`.
    ///
    /// Finds an ion relabelling under which every well of the template's
    /// initial configuration appears verbatim in `current`, then replaces
    /// those wells by the relabelled final wells in place. Wells not touched
    /// by the template are spectators and keep their position in the list.
    pub fn apply(&self, current: &WellConfiguration) -> Result<TransportPrimitive, CompileError> {
        let template_ions: Vec<char> = self.initial.ions().into_iter().collect();
        let actual: Vec<char> = current.ions().into_iter().collect();
        let mapping = find_mapping(&template_ions, &actual, &|map| {
            self.initial.wells().iter().all(|tw| {
                let mapped: Vec<char> = tw.ions.iter().map(|c| map[c]).collect();
                current.wells().iter().any(|w| w.zone == tw.zone && w.ions == mapped)
            })
        })
        .ok_or_else(|| CompileError::NotApplicable { id: self.id.clone(), config: current.to_string() })?;

        let relabel = |c: char| mapping.get(&c).copied().unwrap_or(c);
        let from = self.initial.relabel(&relabel);
        let to = self.target.relabel(&relabel);
        let moved: BTreeSet<char> = from.ions();

        let mut wells: Vec<Well> = Vec::new();
        let mut emitted = vec![false; to.wells().len()];
        for w in current.wells() {
            if w.ions.iter().any(|c| moved.contains(c)) {
                for (k, tw) in to.wells().iter().enumerate() {
                    if !emitted[k] && tw.ions.iter().any(|c| w.ions.contains(c)) {
                        emitted[k] = true;
                        wells.push(tw.clone());
                    }
                }
            } else {
                wells.push(w.clone());
            }
        }
        let target = WellConfiguration::new(wells).map_err(|_| CompileError::Collision {
            id: self.id.clone(),
            config: current.to_string(),
        })?;

        let cost = self.cost.as_ref().map(|c| c.iter().map(|(ion, m)| (relabel(*ion), m.clone())).collect());
        let distance_um = self.distance_um.iter().map(|(ion, d)| (relabel(*ion), *d)).collect();
        Ok(TransportPrimitive {
            initial: current.clone(),
            target,
            distance_um,
            cost,
            ..self.clone()
        })
    }
}

/// First injective map template → actual (in lexicographic enumeration
/// order) accepted by `accept`.
fn find_mapping(
    template: &[char],
    actual: &[char],
    accept: &dyn Fn(&BTreeMap<char, char>) -> bool,
) -> Option<BTreeMap<char, char>> {
    fn go(
        k: usize,
        template: &[char],
        actual: &[char],
        used: &mut Vec<bool>,
        map: &mut BTreeMap<char, char>,
        accept: &dyn Fn(&BTreeMap<char, char>) -> bool,
    ) -> bool {
        if k == template.len() {
            return accept(map);
        }
        for (j, &a) in actual.iter().enumerate() {
            if used[j] {
                continue;
            }
            used[j] = true;
            map.insert(template[k], a);
            if go(k + 1, template, actual, used, map, accept) {
                return true;
            }
            map.remove(&template[k]);
            used[j] = false;
        }
        false
    }
    let mut map = BTreeMap::new();
    let mut used = vec![false; actual.len()];
    go(0, template, actual, &mut used, &mut map, accept).then_some(map)
}
