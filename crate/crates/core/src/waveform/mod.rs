//! Electrode voltages from potential constraints on a synthetic analytic
//! basis, transport ramps and filter pre-compensation.
//!
//! Positions are in µm and potentials in V (per unit charge), so
//! curvatures are V/µm². Derivatives come from order-4 Taylor jets and
//! are exact up to rounding.

mod analysis;
mod basis;
mod constraints;
mod filter;
mod io;
mod jet;
mod ramps;
mod signal;
mod solver;

use thiserror::Error;

pub use analysis::{find_minimum, local_modes, minima_along, LocalModes};
pub use basis::{Electrode, ElectrodeBasis, Frame, Moments, RfBump, RfModel};
pub use constraints::{
    curvature_for_frequency, frequency_for_curvature, ConstraintKind, PotentialConstraints, WellConstraint,
};
pub use filter::{apply_filter, precompensate, FilterModel, Precompensated};
pub use io::{header_path, read_waveform, to_csv_string, write_waveform, WaveformHeader};
pub use jet::Jet2;
pub use ramps::{
    junction_well, separation_ramp, weak_axis_frequency, well_rotation_ramp, RampOptions, RotationRamp, RotationStep,
    SeparationRamp, SeparationSpec, SeparationStep, DEFAULT_SATELLITE_MIN_OFFSET_UM,
};
pub use signal::{sample_count, Shape, Waveform, DEFAULT_UPDATE_RATE};
pub use solver::{
    min_norm_qp, solve_voltages, ConstraintReport, Overdetermined, QpError, QpSolution, SolveOptions, VoltageSolution,
    RANK_TOLERANCE,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveformError {
    #[error("invalid basis: {0}")]
    Basis(String),
    #[error("invalid constraints: {0}")]
    Constraints(String),
    #[error("constraint rows are dependent (null-space dimension {null_dimension})")]
    RankDeficient { null_dimension: usize },
    #[error("infeasible within voltage bounds: {constraint} misses by {violation:e}")]
    Infeasible { constraint: String, violation: f64 },
    #[error("ramp step {step}: {source}")]
    Step { step: usize, source: Box<WaveformError> },
    #[error("filter: {0}")]
    Filter(String),
    #[error("{0}")]
    Io(String),
    #[error("waveform format: {0}")]
    Format(String),
}

impl WaveformError {
    fn at_step(self, step: usize) -> Self {
        WaveformError::Step { step, source: Box::new(self) }
    }

    /// Infeasible or rank-deficient, possibly inside a ramp step.
    pub fn is_infeasible(&self) -> bool {
        match self {
            WaveformError::Infeasible { .. } | WaveformError::RankDeficient { .. } => true,
            WaveformError::Step { source, .. } => source.is_infeasible(),
            _ => false,
        }
    }
}
