//! Semiclassical dynamics of the extended Dicke model and its use as a
//! quantum battery.
//!
//! The crate is organised bottom-up:
//!
//! * [`elliptic`]: complete elliptic integral `K(k)` and the Jacobi functions
//!   `sn`, `cn`, `dn`. Every interface takes the *modulus* `k`, not the
//!   parameter `m = k²`.
//! * [`model`]: physical parameters, critical coupling and fixed points.
//! * [`dynamics`]: right-hand sides of the full, reduced (LMG) and canonical
//!   `(Q, φ)` equations of motion, plus an adaptive Dormand–Prince integrator.
//! * [`analytic`]: the closed-form "bound luminosity" solution.
//! * [`battery`]: stored energy, charging time, charging power and the
//!   `N`-scaling study.
//! * [`validate`]: cross-module oracle checks used by the command-line
//!   `validate` subcommand.
//!
//! Natural units with ħ = 1 are used throughout.

pub mod analytic;
pub mod battery;
pub mod dynamics;
pub mod elliptic;
mod error;
pub mod fit;
pub mod format;
pub mod model;
pub mod validate;

pub use error::{Error, Result};
