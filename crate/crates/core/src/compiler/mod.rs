//! Transport-primitive library and shuttle-sequence compiler.

mod library;
mod primitive;
mod sequence;

use thiserror::Error;

pub use library::{BaselineRef, Preparation, PrimitiveLibrary, TableRow, C_TO_V, TABLE1_ENV, TABLE1_JSON};
pub use primitive::{ExcitationCost, PrimitiveKind, TransportPrimitive};
pub use sequence::{
    addressing_marker, compile_individual_address, compile_individual_address_from, compile_reorder, is_identity,
    net_permutation, reverse_sequence, totals, validate_sequence, Marker, NetPermutation, Placement, SequenceDoc,
    ShuttleSequence, StepDoc, Totals, ValidationReport, Violation,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CompileError {
    #[error("library has no primitive {0}")]
    MissingPrimitive(String),
    #[error("primitive {id} does not apply to {config}")]
    NotApplicable { id: String, config: String },
    #[error("primitive {id} would move an ion into an occupied zone from {config}")]
    Collision { id: String, config: String },
    #[error("no library primitive takes {from} to {to}")]
    NoPrimitiveFor { from: String, to: String },
    #[error("invalid primitive {id}: {reason}")]
    InvalidPrimitive { id: String, reason: String },
    #[error("step {step} ends in {found}, sequence file says {expected}")]
    StepMismatch { step: usize, expected: String, found: String },
    #[error("ion {0} is not present")]
    TargetMissing(char),
    #[error("bad ion selection: {0}")]
    BadIons(String),
    #[error("primitive library: {0}")]
    Library(String),
}
