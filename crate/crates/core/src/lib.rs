//! Simulation and metrology for a spin coupled to two rotating motional modes.
//!
//! Two engines evolve the same physics:
//!
//! * [`phasespace`] tracks each spin branch as a two-mode coherent state,
//!   which is exact for the linear Hamiltonians used here and has no cutoff.
//! * [`fock`] builds the Hamiltonians as matrices on a truncated Fock space
//!   and serves as the reference oracle.
//!
//! [`sequence`] runs pulse protocols on either engine and [`metrology`] turns
//! final states and closed forms into populations, sensitivities and
//! ambiguity resolution.

pub mod error;
pub mod fock;
pub mod metrology;
pub mod model;
pub mod phasespace;
pub mod sequence;
pub mod spin;

pub use error::{Error, Result};
pub use fock::{FockConfig, FockState, OperatorSet};
pub use model::{PhysicalParams, CONVENTIONS};
pub use phasespace::{CoherentBranch, Factorization, HybridState, Mode, Spin};
pub use metrology::{EngineKind, ReadoutResult, ScanResult, SequenceKind};
pub use sequence::{PulseElement, SequenceSpec};
pub use spin::{ReducedSpin, SpinState};
