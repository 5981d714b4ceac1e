//! Motional-excitation and qubit-phase bookkeeping over shuttle sequences,
//! and two-ion normal modes.

mod ledger;
mod modes;
mod phase;
mod table;

pub use ledger::{
    derive_primitive_excitation, simulate_batch, simulate_from, simulate_sequence, CoveredStep, Derivation, ExcitationLedgerConfig,
    LedgerError, LedgerReport, LedgerState, MotionalState, OccupationDistribution, Occupations,
};
pub use modes::{equilibrium_spacing, two_ion_normal_modes, ModeError, ModeLabel, ModeSpec};
pub use phase::{
    ramsey_phase_check, second_order_zeeman_shift, ActiveWindow, AczProfile, PhaseSources, RamseyCheck,
    StepPath, BE9_CLOCK_C2_HZ_PER_UT2,
};
pub use table::{check_table, row_sequence, RowCheck, TableCheckError, DERIVATION_SLACK};
