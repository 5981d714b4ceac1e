//! Trap-array topology and the well-configuration notation.

mod config;
mod graph;

pub use config::{format_configuration, parse_configuration, ConfigError, IonId, Species, Well, WellConfiguration};
pub use graph::{default_trap, path_between, Edge, EdgeKind, GraphError, Region, TrapGraph, Zone, ZoneLabel};
