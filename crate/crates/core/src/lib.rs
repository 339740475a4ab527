//! Numerical laboratory for non-Abelian geometric phases of the
//! large-detuned three-level Λ system.
//!
//! Module map:
//! - [`matrix`]: fixed-size complex matrices, exponentials, Hermitian eigensolver.
//! - [`model`]: Hamiltonian, analytic eigensystem, mixing angle, dynamical matrix.
//! - [`gauge`]: Wilczek–Zee connections, field strength, oracles, gauge transformations.
//! - [`path`]: parameter loops and schedules.
//! - [`holonomy`]: path- and time-ordered products on the two-level subspace.
//! - [`propagator`]: exact three-level time evolution and adiabatic diagnostics.
//! - [`scenario`]: configuration, CSV reports and the claim runner used by the CLI.

#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod fit;
pub mod gauge;
pub mod holonomy;
pub mod matrix;
pub mod model;
pub mod path;
pub mod propagator;
pub mod scenario;

#[cfg(test)]
mod properties;

pub use error::{Error, Result};
pub use gauge::{Connection, ConnectionVariant, Curvature, GaugeField};
pub use matrix::{Mat2, Mat3, C64};
pub use model::{MixingAngle, SystemParams};
pub use path::ParameterPath;
