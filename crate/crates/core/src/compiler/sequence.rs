use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::library::{PrimitiveLibrary, C_TO_V};
use super::primitive::TransportPrimitive;
use super::CompileError;
use crate::topology::{parse_configuration, WellConfiguration, ZoneLabel};

/// A configuration in the chain where laser pulses may be applied to `ion`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marker {
    /// Index into the configuration chain (0 = before the first step).
    pub at: usize,
    pub ion: char,
    pub label: String,
}

/// An ordered chain of transport steps.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShuttleSequence {
    pub steps: Vec<TransportPrimitive>,
    /// Idle time (µs) at chain boundary `k`, i.e. before step `k`.
    pub idle_us: BTreeMap<usize, f64>,
    pub markers: Vec<Marker>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Step `boundary - 1` ends somewhere other than where step `boundary` starts.
    Contiguity {
        boundary: usize,
        left: WellConfiguration,
        right: WellConfiguration,
    },
    IonSetChanged {
        step: usize,
        expected: BTreeSet<char>,
        found: BTreeSet<char>,
    },
    InvalidStep {
        step: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violation: Option<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violation.is_none()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.violation {
            None => f.write_str("ok"),
            Some(Violation::Contiguity { boundary, left, right }) => {
                write!(f, "contiguity violation at boundary {boundary}: {left} != {right}")
            }
            Some(Violation::IonSetChanged { step, expected, found }) => {
                write!(f, "ion set changed at step {step}: expected {expected:?}, found {found:?}")
            }
            Some(Violation::InvalidStep { step, reason }) => write!(f, "invalid step {step}: {reason}"),
        }
    }
}

/// Where an ion starts and ends: (zone, index within the well).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub start: (ZoneLabel, usize),
    pub end: (ZoneLabel, usize),
}

pub type NetPermutation = BTreeMap<char, Placement>;

/// Placement map is the identity: every ion ends where it started.
pub fn is_identity(p: &NetPermutation) -> bool {
    p.values().all(|pl| pl.start == pl.end)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Totals {
    pub duration_us: f64,
    pub distance_um: BTreeMap<char, f64>,
}

impl ShuttleSequence {
    pub fn new(steps: Vec<TransportPrimitive>) -> Self {
        Self { steps, ..Default::default() }
    }

    /// Configurations visited: start of every step, then the final one.
    pub fn configurations(&self) -> Vec<WellConfiguration> {
        let mut out: Vec<WellConfiguration> = self.steps.iter().map(|s| s.initial.clone()).collect();
        if let Some(last) = self.steps.last() {
            out.push(last.target.clone());
        }
        out
    }

    /// Arrow-joined chain, e.g. `S_ab -> A_a B_b -> ...`.
    pub fn chain_string(&self) -> String {
        self.configurations().iter().map(ToString::to_string).collect::<Vec<_>>().join(" -> ")
    }

    pub fn idle_at(&self, boundary: usize) -> f64 {
        self.idle_us.get(&boundary).copied().unwrap_or(0.0)
    }

    /// `self` followed by `other`; idle annotations and markers of `other`
    /// are shifted past the end of `self`.
    pub fn concat(&self, other: &ShuttleSequence) -> ShuttleSequence {
        let n = self.steps.len();
        let mut out = self.clone();
        out.steps.extend(other.steps.iter().cloned());
        for (&k, &v) in &other.idle_us {
            *out.idle_us.entry(k + n).or_default() += v;
        }
        out.markers
            .extend(other.markers.iter().map(|m| Marker { at: m.at + n, ..m.clone() }));
        out
    }
}

/// Check contiguity, constant ion set and per-step invariants. Reports
/// the first violation found.
pub fn validate_sequence(seq: &ShuttleSequence) -> ValidationReport {
    let fail = |v| ValidationReport { violation: Some(v) };
    let Some(first) = seq.steps.first() else {
        return ValidationReport { violation: None };
    };
    let ions = first.initial.ions();
    for (k, step) in seq.steps.iter().enumerate() {
        if let Err(e) = step.check() {
            return fail(Violation::InvalidStep { step: k, reason: e.to_string() });
        }
        if step.initial.ions() != ions {
            return fail(Violation::IonSetChanged { step: k, expected: ions, found: step.initial.ions() });
        }
        if k > 0 && seq.steps[k - 1].target != step.initial {
            return fail(Violation::Contiguity {
                boundary: k,
                left: seq.steps[k - 1].target.clone(),
                right: step.initial.clone(),
            });
        }
    }
    ValidationReport { violation: None }
}

/// Run the chain backwards. Idle annotations and markers are mirrored onto
/// the reversed boundaries.
pub fn reverse_sequence(seq: &ShuttleSequence) -> ShuttleSequence {
    let n = seq.steps.len();
    ShuttleSequence {
        steps: seq.steps.iter().rev().map(TransportPrimitive::reverse).collect(),
        idle_us: seq.idle_us.iter().map(|(&k, &v)| (n - k, v)).collect(),
        markers: seq
            .markers
            .iter()
            .rev()
            .map(|m| Marker { at: n - m.at, ..m.clone() })
            .collect(),
    }
}

/// Start and end placement of every ion.
pub fn net_permutation(seq: &ShuttleSequence) -> NetPermutation {
    let (Some(first), Some(last)) = (seq.steps.first(), seq.steps.last()) else {
        return NetPermutation::new();
    };
    first
        .initial
        .ions()
        .into_iter()
        .filter_map(|ion| {
            let start = first.initial.locate(ion)?;
            let end = last.target.locate(ion)?;
            Some((ion, Placement { start, end }))
        })
        .collect()
}

/// Order-independent float sum, so a sequence and its reverse agree exactly.
fn canonical_sum(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs.into_iter().sum()
}

/// Summed duration (steps plus idle annotations) and per-ion distance.
pub fn totals(seq: &ShuttleSequence) -> Totals {
    let mut legs: BTreeMap<char, Vec<f64>> = BTreeMap::new();
    for ion in seq.steps.first().map(|s| s.initial.ions()).unwrap_or_default() {
        legs.insert(ion, Vec::new());
    }
    let mut durations: Vec<f64> = seq.idle_us.values().copied().collect();
    for s in &seq.steps {
        durations.push(s.duration_us);
        for (ion, d) in &s.distance_um {
            legs.entry(*ion).or_default().push(*d);
        }
    }
    let distance_um = legs.into_iter().map(|(ion, d)| (ion, canonical_sum(d))).collect();
    Totals { duration_us: canonical_sum(durations), distance_um }
}

fn chain(library: &PrimitiveLibrary, start: WellConfiguration, plan: &[(&str, bool)]) -> Result<ShuttleSequence, CompileError> {
    let mut current = start;
    let mut steps = Vec::with_capacity(plan.len());
    for &(id, reversed) in plan {
        let template = library.get(id)?;
        let template = if reversed { template.reverse() } else { template.clone() };
        let step = template.apply(&current)?;
        current = step.target.clone();
        steps.push(step);
    }
    Ok(ShuttleSequence::new(steps))
}

/// Reorder two ions held together in S through the junction:
/// `S_ab -> A_a B_b -> A_a C_b -> A_a V_b -> C_a V_b -> H_a V_b -> H_a C_b
/// -> H_a A_b -> C_a A_b -> B_a A_b -> S_ba`.
pub fn compile_reorder(ions: (char, char), library: &PrimitiveLibrary) -> Result<ShuttleSequence, CompileError> {
    let (a, b) = ions;
    if a == b {
        return Err(CompileError::BadIons(format!("need two distinct ions, got {a},{b}")));
    }
    let start = WellConfiguration::single(ZoneLabel::S, &format!("{a}{b}"))
        .map_err(|e| CompileError::BadIons(e.to_string()))?;
    let separate = "t6";
    let b_to_c = "t9|t10";
    let plan = [
        (separate, false), // S_ab -> A_a B_b
        (b_to_c, false),   // -> A_a C_b
        (C_TO_V, false),   // -> A_a V_b
        ("t2", false),     // -> C_a V_b
        ("t3", true),      // -> H_a V_b
        (C_TO_V, true),    // -> H_a C_b
        ("t2", true),      // -> H_a A_b
        ("t3", false),     // -> C_a A_b
        (b_to_c, true),    // -> B_a A_b
        (separate, true),  // -> S_ba
    ];
    let seq = chain(library, start, &plan)?;
    debug_assert!(validate_sequence(&seq).is_ok());
    Ok(seq)
}

/// Individual addressing and detection: `A_i B_j -> S_i R_j -> A_i B_j ->
/// L_i S_j -> A_i B_j`, starting from `A_a B_b`. Markers flag the two
/// configurations in which one ion sits in S.
pub fn compile_individual_address(target: char, library: &PrimitiveLibrary) -> Result<ShuttleSequence, CompileError> {
    let start = parse_configuration("A_a B_b").expect("literal parses");
    compile_individual_address_from(&start, target, library)
}

pub fn compile_individual_address_from(
    start: &WellConfiguration,
    target: char,
    library: &PrimitiveLibrary,
) -> Result<ShuttleSequence, CompileError> {
    let (Some(i), Some(j)) = (
        start.well_at(ZoneLabel::A).filter(|w| w.ions.len() == 1),
        start.well_at(ZoneLabel::B).filter(|w| w.ions.len() == 1),
    ) else {
        return Err(CompileError::BadIons(format!("expected two ions held as A_i B_j, got {start}")));
    };
    let (i, j) = (i.ions[0], j.ions[0]);
    if target != i && target != j {
        return Err(CompileError::TargetMissing(target));
    }
    let plan = [("t7", false), ("t7", true), ("t8", false), ("t8", true)];
    let mut seq = chain(library, start.clone(), &plan)?;
    seq.markers = vec![
        Marker { at: 1, ion: i, label: "address".into() },
        Marker { at: 3, ion: j, label: "address".into() },
    ];
    Ok(seq)
}

/// Configuration index at which `target` can be addressed in `seq`.
pub fn addressing_marker(seq: &ShuttleSequence, target: char) -> Option<&Marker> {
    seq.markers.iter().find(|m| m.ion == target)
}

/// Portable JSON form of a sequence: primitive ids plus endpoint strings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceDoc {
    pub chain: String,
    pub steps: Vec<StepDoc>,
    #[serde(default)]
    pub idle_us: BTreeMap<usize, f64>,
    #[serde(default)]
    pub markers: Vec<Marker>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepDoc {
    pub primitive: String,
    pub name: String,
    #[serde(default)]
    pub reversed: bool,
    pub initial: WellConfiguration,
    #[serde(rename = "final")]
    pub target: WellConfiguration,
    pub duration_us: f64,
}

impl SequenceDoc {
    pub fn from_sequence(seq: &ShuttleSequence) -> Self {
        SequenceDoc {
            chain: seq.chain_string(),
            steps: seq
                .steps
                .iter()
                .map(|s| StepDoc {
                    primitive: s.id.clone(),
                    name: s.name.clone(),
                    reversed: s.reversed,
                    initial: s.initial.clone(),
                    target: s.target.clone(),
                    duration_us: s.duration_us,
                })
                .collect(),
            idle_us: seq.idle_us.clone(),
            markers: seq.markers.clone(),
        }
    }

    /// Rebuild the sequence against `library`. Each step is re-instantiated
    /// from its primitive id and must reproduce the recorded final
    /// configuration.
    pub fn resolve(&self, library: &PrimitiveLibrary) -> Result<ShuttleSequence, CompileError> {
        let mut steps = Vec::with_capacity(self.steps.len());
        for (k, s) in self.steps.iter().enumerate() {
            let template = library.get(&s.primitive)?;
            let template = if s.reversed { template.reverse() } else { template.clone() };
            let inst = template.apply(&s.initial)?;
            if inst.target != s.target {
                return Err(CompileError::StepMismatch {
                    step: k,
                    expected: s.target.to_string(),
                    found: inst.target.to_string(),
                });
            }
            steps.push(inst);
        }
        Ok(ShuttleSequence { steps, idle_us: self.idle_us.clone(), markers: self.markers.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::parse_configuration as cfg;

    const EQ2: [&str; 11] = [
        "S_ab", "A_a B_b", "A_a C_b", "A_a V_b", "C_a V_b", "H_a V_b", "H_a C_b", "H_a A_b", "C_a A_b", "B_a A_b",
        "S_ba",
    ];

    #[test]
    fn reorder_chain_matches_token_for_token() {
        let lib = PrimitiveLibrary::table1();
        let seq = compile_reorder(('a', 'b'), &lib).unwrap();
        let got: Vec<String> = seq.configurations().iter().map(ToString::to_string).collect();
        assert_eq!(got, EQ2);
        assert!(validate_sequence(&seq).is_ok());
        let p = net_permutation(&seq);
        assert_eq!(p[&'a'].start, (ZoneLabel::S, 0));
        assert_eq!(p[&'a'].end, (ZoneLabel::S, 1));
        assert_eq!(p[&'b'].start, (ZoneLabel::S, 1));
        assert_eq!(p[&'b'].end, (ZoneLabel::S, 0));
    }

    #[test]
    fn reorder_other_labels() {
        let lib = PrimitiveLibrary::table1();
        let seq = compile_reorder(('x', 'y'), &lib).unwrap();
        assert_eq!(seq.configurations().last().unwrap().to_string(), "S_yx");
        assert!(compile_reorder(('a', 'a'), &lib).is_err());
    }

    #[test]
    fn reorder_inner_duration() {
        let lib = PrimitiveLibrary::table1();
        let seq = compile_reorder(('a', 'b'), &lib).unwrap();
        let inner: f64 = seq.steps[1..9].iter().map(|s| s.duration_us).sum();
        assert_eq!(inner, 1110.0);
        assert_eq!(totals(&seq).duration_us, 1110.0 + 620.0);
    }

    #[test]
    fn addressing_sequence() {
        let lib = PrimitiveLibrary::table1();
        let seq = compile_individual_address('a', &lib).unwrap();
        assert_eq!(seq.chain_string(), "A_a B_b -> S_a R_b -> A_a B_b -> L_a S_b -> A_a B_b");
        assert_eq!(addressing_marker(&seq, 'a').unwrap().at, 1);
        assert_eq!(addressing_marker(&seq, 'b').unwrap().at, 3);
        assert_eq!(totals(&seq).duration_us, 920.0);
        assert!(is_identity(&net_permutation(&seq)));
        assert_eq!(
            compile_individual_address('z', &lib).unwrap_err(),
            CompileError::TargetMissing('z')
        );
    }

    #[test]
    fn contiguity_violation_reported_at_boundary() {
        let lib = PrimitiveLibrary::table1();
        let sep = lib.get("t6").unwrap().clone();
        let other = lib.get("t7").unwrap().reverse();
        let seq = ShuttleSequence::new(vec![sep, other]);
        let report = validate_sequence(&seq);
        assert_eq!(
            report.violation,
            Some(Violation::Contiguity { boundary: 1, left: cfg("A_a B_b").unwrap(), right: cfg("S_a R_b").unwrap() })
        );
    }

    #[test]
    fn empty_sequence() {
        let seq = ShuttleSequence::default();
        assert!(validate_sequence(&seq).is_ok());
        assert!(net_permutation(&seq).is_empty());
        let t = totals(&seq);
        assert_eq!(t.duration_us, 0.0);
        assert!(t.distance_um.is_empty());
        assert_eq!(reverse_sequence(&seq), seq);
    }

    #[test]
    fn reversal() {
        let lib = PrimitiveLibrary::table1();
        let sep = ShuttleSequence::new(vec![lib.get("t6").unwrap().clone()]);
        let rev = reverse_sequence(&sep);
        assert_eq!(rev.chain_string(), "A_a B_b -> S_ab");

        let mut seq = compile_reorder(('a', 'b'), &lib).unwrap();
        seq.idle_us.insert(3, 12.0);
        let rev = reverse_sequence(&seq);
        assert_eq!(rev.configurations().last().unwrap().to_string(), "S_ab");
        assert_eq!(rev.configurations()[0].to_string(), "S_ba");
        assert!(validate_sequence(&rev).is_ok());
        assert_eq!(reverse_sequence(&rev), seq);
        assert_eq!(totals(&rev), totals(&seq));
        assert!(is_identity(&net_permutation(&seq.concat(&rev))));
    }

    #[test]
    fn doc_round_trip() {
        let lib = PrimitiveLibrary::table1();
        let seq = compile_reorder(('a', 'b'), &lib).unwrap();
        let doc = SequenceDoc::from_sequence(&seq);
        let json = serde_json::to_string(&doc).unwrap();
        let back: SequenceDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(back.resolve(&lib).unwrap(), seq);

        let mut bad = doc.clone();
        bad.steps[2].target = cfg("A_a H_b").unwrap();
        assert!(matches!(bad.resolve(&lib), Err(CompileError::StepMismatch { step: 2, .. })));
    }
}
