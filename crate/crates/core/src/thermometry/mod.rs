//! Sideband-flopping forward models and weighted fits for mean phonon
//! numbers.
//!
//! Times are in seconds and rates in rad/s throughout; dataset CSV files
//! store durations in µs.

mod dataset;
mod distribution;
mod fit;
mod models;
mod rabi;
mod synth;
mod trials;

use thiserror::Error;

use crate::dynamics::ModeLabel;

pub use crate::dynamics::OccupationDistribution;
pub use dataset::{DataPoint, DatasetError, Sidecar, SidebandDataset};
pub use distribution::{
    auto_truncation, coherent_population, population, populations, thermal_population, MAX_FOCK, TAIL_TOLERANCE,
};
pub use fit::{binomial_sigma, fit, initial_guess, FitError, FitOptions, FitResult, ParamId};
pub use models::{
    expansion, single_ion_expansion, single_ion_flop, three_level, two_ion_expansion, two_ion_flop, two_mode_expansion,
    two_mode_flop, Crystal, Expansion, FlopModelParams, Sideband, ThreeLevelCoefficients,
};
pub use rabi::{coupling_factor, coupling_table, laguerre, rabi_frequency};
pub use synth::{synthesize_dataset, Sampling};
pub use trials::{compare_distributions, run_trials, RoundTripSpec, TrialOutcome};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThermoError {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),
    #[error("mode {0} has no n̄ or η")]
    MissingMode(ModeLabel),
}
