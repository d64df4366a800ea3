//! Compile bounded probabilistic Turing machines into log-width probabilistic
//! circuits, realize those circuits as postselected quantum gate programs, and
//! decide acceptance by an amplified sweep of postselected runs.
//!
//! The classical side (machine oracle, configuration matrix, circuit
//! simulation) is exact over arbitrary-precision rationals; the quantum side
//! uses `f64` amplitudes with pinned tolerances. Every stage can be checked
//! against the exhaustive oracle at desk scale.

pub mod amplify;
pub mod canonical;
pub mod circuit;
pub mod cli;
pub mod config;
pub mod construct;
pub mod corpus;
pub mod error;
pub mod format;
pub mod machine;
pub mod quantum;

pub use error::{Error, Result};
pub use machine::{MachineKind, MachineSpec, OutcomeDistribution};
