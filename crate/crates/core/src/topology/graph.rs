use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Named trapping zones of the X-junction array.
///
/// The declaration order is the lexicographic order of the printed labels,
/// which is what path tie-breaking uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ZoneLabel {
    A,
    B,
    C,
    #[serde(rename = "C'")]
    CPrime,
    H,
    L,
    R,
    S,
    V,
}

impl ZoneLabel {
    pub const ALL: [ZoneLabel; 9] = [
        ZoneLabel::A,
        ZoneLabel::B,
        ZoneLabel::C,
        ZoneLabel::CPrime,
        ZoneLabel::H,
        ZoneLabel::L,
        ZoneLabel::R,
        ZoneLabel::S,
        ZoneLabel::V,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ZoneLabel::A => "A",
            ZoneLabel::B => "B",
            ZoneLabel::C => "C",
            ZoneLabel::CPrime => "C'",
            ZoneLabel::H => "H",
            ZoneLabel::L => "L",
            ZoneLabel::R => "R",
            ZoneLabel::S => "S",
            ZoneLabel::V => "V",
        }
    }
}

impl fmt::Display for ZoneLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ZoneLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ZoneLabel::ALL
            .into_iter()
            .find(|z| z.as_str() == s)
            .ok_or_else(|| format!("unknown zone label {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Region {
    SArm,
    HArm,
    VArm,
    Junction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub label: ZoneLabel,
    /// (x, z) in µm, in the y = 0 midplane.
    pub position: [f64; 2],
    /// Direction of weakest confinement, unit length.
    pub weak_axis: [f64; 2],
    pub region: Region,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgeKind {
    /// Well moves through space.
    Transport,
    /// Well rotates in place (C ↔ C'); zero path length.
    Rotation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: ZoneLabel,
    pub to: ZoneLabel,
    /// µm.
    pub path_length: f64,
    pub crosses_junction: bool,
    pub kind: EdgeKind,
}

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("duplicate zone label {0}")]
    DuplicateZone(ZoneLabel),
    #[error("weak axis of zone {0} is not unit length")]
    WeakAxisNotUnit(ZoneLabel),
    #[error("edge {0}-{1} references a zone that does not exist")]
    DanglingEdge(ZoneLabel, ZoneLabel),
    #[error("transport edge {0}-{1} has non-positive length {2}")]
    NonPositiveLength(ZoneLabel, ZoneLabel, f64),
    #[error("rotation edge {0}-{1} joins zones at different positions")]
    RotationMoves(ZoneLabel, ZoneLabel),
    #[error("graph is not connected: {0} unreachable")]
    Disconnected(ZoneLabel),
    #[error("zone {0} not in graph")]
    UnknownZone(ZoneLabel),
    #[error("no path from {0} to {1}")]
    NoPath(ZoneLabel, ZoneLabel),
    #[error("invalid trap graph document: {0}")]
    Json(String),
}

/// Zones and connectivity of the trap array.
///
/// Construct through [`TrapGraph::new`] or [`TrapGraph::from_json`]; both
/// check the invariants (unique labels, unit weak axes, positive transport
/// lengths, connectivity).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrapGraph {
    zones: Vec<Zone>,
    edges: Vec<Edge>,
    /// Pseudo-potential bump locations, (x, z) µm.
    bump_positions: Vec<[f64; 2]>,
}

#[derive(Deserialize)]
struct TrapGraphDoc {
    zones: Vec<Zone>,
    edges: Vec<Edge>,
    #[serde(default)]
    bump_positions: Vec<[f64; 2]>,
}

impl<'de> Deserialize<'de> for TrapGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = TrapGraphDoc::deserialize(d)?;
        TrapGraph::new(doc.zones, doc.edges, doc.bump_positions).map_err(serde::de::Error::custom)
    }
}

impl TrapGraph {
    pub fn new(zones: Vec<Zone>, edges: Vec<Edge>, bump_positions: Vec<[f64; 2]>) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for z in &zones {
            if !seen.insert(z.label) {
                return Err(GraphError::DuplicateZone(z.label));
            }
            let norm = z.weak_axis[0].hypot(z.weak_axis[1]);
            if (norm - 1.0).abs() > 1e-12 {
                return Err(GraphError::WeakAxisNotUnit(z.label));
            }
        }
        let graph = TrapGraph { zones, edges, bump_positions };
        for e in &graph.edges {
            let (Some(a), Some(b)) = (graph.zone(e.from), graph.zone(e.to)) else {
                return Err(GraphError::DanglingEdge(e.from, e.to));
            };
            match e.kind {
                EdgeKind::Transport if !(e.path_length > 0.0) => {
                    return Err(GraphError::NonPositiveLength(e.from, e.to, e.path_length));
                }
                EdgeKind::Rotation if a.position != b.position || e.path_length != 0.0 => {
                    return Err(GraphError::RotationMoves(e.from, e.to));
                }
                _ => {}
            }
        }
        if let Some(first) = graph.zones.first() {
            let reach = graph.reachable(first.label);
            if let Some(z) = graph.zones.iter().find(|z| !reach.contains(&z.label)) {
                return Err(GraphError::Disconnected(z.label));
            }
        }
        Ok(graph)
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        serde_json::from_str(text).map_err(|e| GraphError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trap graph serializes")
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn bump_positions(&self) -> &[[f64; 2]] {
        &self.bump_positions
    }

    pub fn zone(&self, label: ZoneLabel) -> Option<&Zone> {
        self.zones.iter().find(|z| z.label == label)
    }

    pub fn contains(&self, label: ZoneLabel) -> bool {
        self.zone(label).is_some()
    }

    fn neighbours(&self, label: ZoneLabel) -> impl Iterator<Item = (ZoneLabel, f64)> + '_ {
        self.edges.iter().filter_map(move |e| {
            if e.from == label {
                Some((e.to, e.path_length))
            } else if e.to == label {
                Some((e.from, e.path_length))
            } else {
                None
            }
        })
    }

    fn reachable(&self, start: ZoneLabel) -> BTreeSet<ZoneLabel> {
        let mut seen = BTreeSet::from([start]);
        let mut stack = vec![start];
        while let Some(z) = stack.pop() {
            for (n, _) in self.neighbours(z) {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        seen
    }

    /// Edge joining two zones, in either direction.
    pub fn edge(&self, a: ZoneLabel, b: ZoneLabel) -> Option<&Edge> {
        self.edges
            .iter()
            .find(|e| (e.from == a && e.to == b) || (e.from == b && e.to == a))
    }
}

/// The X-junction array: a linear S-arm (L, A, S, B, R running towards the
/// junction), the junction C/C' at the origin, H on the +z arm and V on the
/// +x arm.
///
/// Inter-zone distances follow the per-primitive travel distances of the
/// measured transport table: S↔A and S↔B 170 µm, A↔C 880 µm (so B↔C is
/// 540 µm), B↔R 220 µm, A↔L 280 µm, H↔C 880 µm, C'↔V 540 µm. The absolute
/// placement (S at z = −710 µm) is a consequence of putting C at the origin.
pub fn default_trap() -> TrapGraph {
    use ZoneLabel::*;
    let along_z = [0.0, 1.0];
    let along_x = [1.0, 0.0];
    let zone = |label, x: f64, z: f64, weak_axis, region| Zone { label, position: [x, z], weak_axis, region };
    let zones = vec![
        zone(L, 0.0, -1160.0, along_z, Region::SArm),
        zone(A, 0.0, -880.0, along_z, Region::SArm),
        zone(S, 0.0, -710.0, along_z, Region::SArm),
        zone(B, 0.0, -540.0, along_z, Region::SArm),
        zone(R, 0.0, -320.0, along_z, Region::SArm),
        zone(C, 0.0, 0.0, along_z, Region::Junction),
        zone(CPrime, 0.0, 0.0, along_x, Region::Junction),
        zone(H, 0.0, 880.0, along_z, Region::HArm),
        zone(V, 540.0, 0.0, along_x, Region::VArm),
    ];
    let transport = |from, to, len, crosses_junction| Edge {
        from,
        to,
        path_length: len,
        crosses_junction,
        kind: EdgeKind::Transport,
    };
    let edges = vec![
        transport(L, A, 280.0, false),
        transport(A, S, 170.0, false),
        transport(S, B, 170.0, false),
        transport(B, R, 220.0, false),
        transport(R, C, 320.0, true),
        transport(C, H, 880.0, true),
        Edge { from: C, to: CPrime, path_length: 0.0, crosses_junction: true, kind: EdgeKind::Rotation },
        transport(CPrime, V, 540.0, true),
    ];
    let b = 150.0;
    let bumps = vec![[-b, 0.0], [b, 0.0], [0.0, -b], [0.0, b]];
    TrapGraph::new(zones, edges, bumps).expect("default trap is valid")
}

#[derive(PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dist {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Shortest path by summed edge length.
///
/// Ties are broken by comparing the zone-label sequences lexicographically,
/// so the result is deterministic.
pub fn path_between(graph: &TrapGraph, from: ZoneLabel, to: ZoneLabel) -> Result<(Vec<ZoneLabel>, f64), GraphError> {
    for z in [from, to] {
        if !graph.contains(z) {
            return Err(GraphError::UnknownZone(z));
        }
    }
    let mut settled = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Dist(0.0), vec![from])));
    while let Some(Reverse((Dist(d), path))) = heap.pop() {
        let here = *path.last().expect("paths are non-empty");
        if settled.contains_key(&here) {
            continue;
        }
        settled.insert(here, d);
        if here == to {
            return Ok((path, d));
        }
        for (next, len) in graph.neighbours(here) {
            if !settled.contains_key(&next) {
                let mut p = path.clone();
                p.push(next);
                heap.push(Reverse((Dist(d + len), p)));
            }
        }
    }
    Err(GraphError::NoPath(from, to))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ZoneLabel::*;

    #[test]
    fn default_trap_shape() {
        let g = default_trap();
        assert_eq!(g.zones().len(), 9);
        assert_eq!(g.bump_positions().len(), 4);
        let c = g.zone(C).unwrap();
        let cp = g.zone(CPrime).unwrap();
        assert_eq!(c.position, cp.position);
        let dot = c.weak_axis[0] * cp.weak_axis[0] + c.weak_axis[1] * cp.weak_axis[1];
        assert!(dot.abs() < 1e-12, "C and C' weak axes must be orthogonal");
    }

    #[test]
    fn measured_distances() {
        let g = default_trap();
        assert_eq!(path_between(&g, S, A).unwrap(), (vec![S, A], 170.0));
        assert_eq!(path_between(&g, A, C).unwrap().1, 880.0);
        assert_eq!(path_between(&g, B, C).unwrap().1, 540.0);
        assert_eq!(path_between(&g, CPrime, V).unwrap().1, 540.0);
        assert_eq!(path_between(&g, S, S).unwrap(), (vec![S], 0.0));
    }

    #[test]
    fn path_to_v_crosses_junction_and_rotates() {
        let g = default_trap();
        let (p, len) = path_between(&g, A, V).unwrap();
        assert_eq!(p, vec![A, S, B, R, C, CPrime, V]);
        assert_eq!(len, 880.0 + 540.0);
    }

    #[test]
    fn edge_lengths_match_geometry() {
        let g = default_trap();
        for e in g.edges() {
            let a = g.zone(e.from).unwrap().position;
            let b = g.zone(e.to).unwrap().position;
            let d = (a[0] - b[0]).hypot(a[1] - b[1]);
            assert!((d - e.path_length).abs() < 1e-9, "{:?}", e);
        }
    }

    #[test]
    fn nearby_zone_clearance_at_s() {
        // Ions parked in L or R while S is illuminated.
        let g = default_trap();
        assert!(path_between(&g, S, R).unwrap().1 >= 390.0);
        assert!(path_between(&g, L, S).unwrap().1 >= 390.0);
    }

    #[test]
    fn rejects_invalid_graphs() {
        let g = default_trap();
        let mut zones = g.zones().to_vec();
        zones.push(zones[0].clone());
        assert_eq!(
            TrapGraph::new(zones, g.edges().to_vec(), vec![]).unwrap_err(),
            GraphError::DuplicateZone(L)
        );

        let mut edges = g.edges().to_vec();
        edges[0].path_length = 0.0;
        assert!(matches!(
            TrapGraph::new(g.zones().to_vec(), edges, vec![]),
            Err(GraphError::NonPositiveLength(..))
        ));

        let edges: Vec<Edge> = g.edges().iter().filter(|e| e.to != V).cloned().collect();
        assert_eq!(
            TrapGraph::new(g.zones().to_vec(), edges, vec![]).unwrap_err(),
            GraphError::Disconnected(V)
        );

        let mut zones = g.zones().to_vec();
        zones[0].weak_axis = [0.0, 1.1];
        assert_eq!(
            TrapGraph::new(zones, g.edges().to_vec(), vec![]).unwrap_err(),
            GraphError::WeakAxisNotUnit(L)
        );
    }

    #[test]
    fn json_round_trip_validates() {
        let g = default_trap();
        let back = TrapGraph::from_json(&g.to_json()).unwrap();
        assert_eq!(back, g);
        let broken = g.to_json().replace("\"path_length\": 280.0", "\"path_length\": -1.0");
        assert!(TrapGraph::from_json(&broken).is_err());
    }

    #[test]
    fn symmetric_lengths() {
        let g = default_trap();
        for a in ZoneLabel::ALL {
            for b in ZoneLabel::ALL {
                let ab = path_between(&g, a, b).unwrap().1;
                let ba = path_between(&g, b, a).unwrap().1;
                assert_eq!(ab, ba);
            }
        }
    }
}
