//! Simulation and analysis of a superconducting qubit coupled to a bath of
//! two-level systems (TLSs).
//!
//! * [`model`]: Purcell exchange rates, the uniform-comb closed form and
//!   device parameter helpers.
//! * [`dynamics`]: exact propagation of the Solomon rate equations.
//! * [`sequence`]: ideal pulse sequences (hole burning, probing).
//! * [`fitting`]: multi-exponential least squares and trace I/O.
//! * [`regimes`]: lifetime maps and the frequency-dependent lifetime model.
//!
//! Frequencies and couplings are angular (rad/s), rates are 1/s and
//! densities are per rad/s unless a name says otherwise.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// 6.28 GHz is a qubit frequency, not τ.
#![cfg_attr(test, allow(clippy::approx_constant))]

pub mod dynamics;
pub mod error;
pub mod fitting;
pub mod model;
pub mod regimes;
pub mod sequence;
pub mod units;

pub use error::{Error, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
