//! Steady-state model of a cavity loaded with four-level atoms, used as an
//! all-optical switch for coherent perfect absorption.
//!
//! Units: ħ = 1 and every rate or detuning is in units of the excited-state
//! decay Γ.

// NaN-rejecting guards are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod invariants;
pub mod model;
pub mod nonlinear;
pub mod oracle;
pub mod params;
pub mod polariton;
pub mod run;
pub mod search;
pub mod spectra;

pub use error::{Error, Result};
pub use params::{ControlField, Dressing, DriveInputs, SystemParams};
pub use polariton::{Channel, PolaritonSet};
pub use config::{parse_config, RunConfig};
pub use run::{run_subcommand, Subcommand};
