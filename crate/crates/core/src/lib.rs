//! Planning, bookkeeping and analysis tools for ion shuttling in a
//! two-dimensional X-junction trap array.
//!
//! The crate is split along the lines of the experimental workflow:
//!
//! - [`topology`]: the trap graph (zones, arms, junction) and the
//!   well-configuration notation (`S_ab`, `A_a B_b`, ...).
//! - [`compiler`]: the measured transport-primitive library and the
//!   sequence compiler (reordering, individual addressing, reversal).
//! - [`dynamics`]: motional-excitation and qubit-phase ledgers over a
//!   sequence, and two-ion normal modes.
//! - [`thermometry`]: sideband-flopping forward models and weighted
//!   nonlinear fits for mean phonon numbers.
//! - [`waveform`]: constrained least-squares electrode voltages on a
//!   synthetic analytic basis, ramps and low-pass pre-compensation.
//!
//! Data-parallel loops (batch simulation, Monte-Carlo fit trials, per-step
//! voltage solves) run on rayon when the `parallel` feature is enabled and
//! fall back to plain iterators otherwise; see [`exec`].

pub mod compiler;
pub mod constants;
pub mod dynamics;
pub mod exec;
pub mod thermometry;
pub mod topology;
pub mod uncertain;
pub mod waveform;


pub use uncertain::Uncertain;
