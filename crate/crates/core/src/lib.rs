//! Numerical suite for the mean-field Nelson model with fermions.
//!
//! The crate has four layers:
//!
//! * [`model`]: the periodic discretization shared by everything else (grids,
//!   retained boson modes, form factor, field reconstruction, densities).
//! * [`skg`]: a Strang-split integrator for the fermionic
//!   Schrödinger–Klein–Gordon system and its frozen-potential variant.
//! * [`semiclassics`]: finite-rank trace-norm diagnostics of Slater projectors.
//! * [`fock`]: the exact truncated-Fock many-body reference, reduced density
//!   matrices and the β-functionals.
//!
//! [`io`] holds the binary checkpoint and CSV formats.

pub mod error;
pub mod fock;
pub mod io;
pub mod linalg;
pub mod model;
pub mod semiclassics;
pub mod skg;

pub use error::{Error, Result};
pub use model::{FieldAmplitude, Model, ModelParams, OrbitalSet};
pub use num_complex::Complex64;
