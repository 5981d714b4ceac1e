use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::primitive::{ExcitationCost, PrimitiveKind, TransportPrimitive};
use super::CompileError;
use crate::dynamics::ModeLabel;
use crate::topology::{TrapGraph, WellConfiguration};
use crate::Uncertain;

/// The measured-table data file compiled into the crate.
pub const TABLE1_JSON: &str = include_str!("../../data/table1.json");

/// Environment variable that points the CLI at an alternative table file.
pub const TABLE1_ENV: &str = "XJUNCTION_TABLE1";

/// Id of the composite C → V step (rotation at C followed by C' → V).
pub const C_TO_V: &str = "t4+t5";

/// Ground-state preparation values measured before each test sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preparation {
    pub single_ion: BTreeMap<ModeLabel, Uncertain>,
    pub two_ion: BTreeMap<ModeLabel, Uncertain>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineRef {
    Preparation,
    Row(u32),
}

/// One row of the measured table: the test sequence used to characterize
/// a primitive and the occupation measured in one of its configurations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub row: u32,
    pub primitive: String,
    pub test_sequence: Vec<WellConfiguration>,
    /// Index into `test_sequence` of the configuration measured.
    pub measured_at: usize,
    pub measured_ions: Vec<char>,
    pub measured_n: BTreeMap<ModeLabel, Uncertain>,
    pub baseline: BaselineRef,
}

#[derive(Debug, Deserialize)]
struct LibraryDoc {
    version: u32,
    preparation: Preparation,
    primitives: Vec<TransportPrimitive>,
    rows: Vec<TableRow>,
}

/// Measured transport primitives plus the derived entries the compiler
/// needs (composite C → V step, merged context variants).
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveLibrary {
    pub version: u32,
    pub preparation: Preparation,
    primitives: Vec<TransportPrimitive>,
    derived: Vec<TransportPrimitive>,
    rows: Vec<TableRow>,
}

impl PrimitiveLibrary {
    /// The built-in table.
    pub fn table1() -> Self {
        Self::from_json(TABLE1_JSON).expect("bundled table is valid")
    }

    /// Table from `path`, or from the file named by [`TABLE1_ENV`], or the
    /// built-in table, in that order of preference.
    pub fn load(path: Option<&Path>) -> Result<Self, CompileError> {
        let env_path = std::env::var_os(TABLE1_ENV).map(std::path::PathBuf::from);
        match path.map(Path::to_path_buf).or(env_path) {
            Some(p) => {
                let text = std::fs::read_to_string(&p)
                    .map_err(|e| CompileError::Library(format!("{}: {e}", p.display())))?;
                Self::from_json(&text)
            }
            None => Ok(Self::table1()),
        }
    }

    pub fn from_json(text: &str) -> Result<Self, CompileError> {
        let doc: LibraryDoc = serde_json::from_str(text).map_err(|e| CompileError::Library(e.to_string()))?;
        if doc.version != 1 {
            return Err(CompileError::Library(format!("unsupported table version {}", doc.version)));
        }
        let mut ids = std::collections::BTreeSet::new();
        for p in &doc.primitives {
            p.check()?;
            if !ids.insert(p.id.clone()) {
                return Err(CompileError::Library(format!("duplicate primitive id {}", p.id)));
            }
        }
        for r in &doc.rows {
            if !ids.contains(&r.primitive) {
                return Err(CompileError::Library(format!("row {} names unknown primitive {}", r.row, r.primitive)));
            }
            if r.measured_at >= r.test_sequence.len() {
                return Err(CompileError::Library(format!("row {} measures outside its test sequence", r.row)));
            }
        }
        let mut lib = PrimitiveLibrary {
            version: doc.version,
            preparation: doc.preparation,
            primitives: doc.primitives,
            derived: Vec::new(),
            rows: doc.rows,
        };
        lib.derived = lib.build_derived();
        Ok(lib)
    }

    fn build_derived(&self) -> Vec<TransportPrimitive> {
        let mut out = Vec::new();
        // Variants sharing a name but measured in different contexts are
        // merged so one step carries the cost seen by every ion.
        let mut by_name: BTreeMap<&str, Vec<&TransportPrimitive>> = BTreeMap::new();
        for p in &self.primitives {
            by_name.entry(p.name.as_str()).or_default().push(p);
        }
        for (name, group) in by_name {
            if group.len() < 2 {
                continue;
            }
            let mut cost: ExcitationCost = BTreeMap::new();
            for p in &group {
                for (ion, modes) in p.cost.iter().flatten() {
                    let slot = cost.entry(*ion).or_default();
                    for (m, u) in modes {
                        slot.insert(*m, *u);
                    }
                }
            }
            let ids: Vec<String> = group.iter().map(|p| p.id.clone()).collect();
            out.push(TransportPrimitive {
                id: ids.join("|"),
                name: name.to_string(),
                cost: Some(cost),
                context: None,
                components: ids,
                row: None,
                ..group[0].clone()
            });
        }
        // C → V is written as one step in chains; physically the well is
        // rotated at C before leaving along the V arm.
        if let (Some(rot), Some(v)) = (self.get_raw("t4"), self.get_raw("t5")) {
            let out_to_v = v.reverse();
            let mut cost: ExcitationCost = BTreeMap::new();
            for p in [rot, &out_to_v] {
                for (ion, modes) in p.cost.iter().flatten() {
                    let slot = cost.entry(*ion).or_default();
                    for (m, u) in modes {
                        let acc = slot.get(m).copied().unwrap_or(Uncertain::ZERO);
                        slot.insert(*m, acc + *u);
                    }
                }
            }
            let mut distance = rot.distance_um.clone();
            for (ion, d) in &out_to_v.distance_um {
                *distance.entry(*ion).or_default() += d;
            }
            out.push(TransportPrimitive {
                id: C_TO_V.to_string(),
                name: "C_a -> V_a".to_string(),
                initial: rot.initial.clone(),
                target: out_to_v.target.clone(),
                kind: PrimitiveKind::Shuttle,
                duration_us: rot.duration_us + out_to_v.duration_us,
                distance_um: distance,
                cost: Some(cost),
                context: None,
                reversed: false,
                components: vec!["t4".into(), "t5".into()],
                row: None,
            });
        }
        out
    }

    fn get_raw(&self, id: &str) -> Option<&TransportPrimitive> {
        self.primitives.iter().find(|p| p.id == id)
    }

    /// Look up a primitive (measured or derived) by id.
    pub fn get(&self, id: &str) -> Result<&TransportPrimitive, CompileError> {
        self.primitives
            .iter()
            .chain(&self.derived)
            .find(|p| p.id == id)
            .ok_or_else(|| CompileError::MissingPrimitive(id.to_string()))
    }

    /// Measured entries in table order.
    pub fn primitives(&self) -> &[TransportPrimitive] {
        &self.primitives
    }

    /// Entries built from the measured ones.
    pub fn derived(&self) -> &[TransportPrimitive] {
        &self.derived
    }

    pub fn rows(&self) -> &[TableRow] {
        &self.rows
    }

    pub fn row(&self, n: u32) -> Option<&TableRow> {
        self.rows.iter().find(|r| r.row == n)
    }

    /// All zones referenced by the library exist in `graph`.
    pub fn check_against(&self, graph: &TrapGraph) -> Result<(), CompileError> {
        for p in self.primitives.iter().chain(&self.derived) {
            for z in p.initial.zones().into_iter().chain(p.target.zones()) {
                if !graph.contains(z) {
                    return Err(CompileError::Library(format!("primitive {} uses zone {z} missing from graph", p.id)));
                }
            }
        }
        Ok(())
    }

    /// Find a primitive (forward or reversed) that takes `from` to `to`.
    ///
    /// Measured entries are tried in table order before derived ones, each
    /// forward before reversed.
    pub fn infer_step(&self, from: &WellConfiguration, to: &WellConfiguration) -> Result<TransportPrimitive, CompileError> {
        for p in self.primitives.iter().chain(&self.derived) {
            for candidate in [p.clone(), p.reverse()] {
                if let Ok(inst) = candidate.apply(from) {
                    if &inst.target == to {
                        return Ok(inst);
                    }
                }
            }
        }
        Err(CompileError::NoPrimitiveFor { from: from.to_string(), to: to.to_string() })
    }
}
