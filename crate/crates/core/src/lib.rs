//! Energies of lattices carrying periodic arrays of vacancies and
//! substitutional defects.
//!
//! The crate evaluates lattice sums `Σ f(|p|²)` with certified truncation
//! bounds (theta functions, Epstein zeta functions, general completely
//! monotone and Lennard-Jones type potentials), the defect-modified energies
//! `E_f^κ`, and optimizes them over the two-dimensional fundamental domain.

pub mod enumerate;
pub mod experiments;
pub mod grammar;
pub mod json;
pub mod error;
pub mod kahan;
pub mod lattice;
pub mod optimize;
pub mod potentials;
pub mod quadrature;
pub mod special;
pub mod sums;

pub use error::{Error, Result};
pub use lattice::{classify_shape, Lattice, NamedLattice, Param2D, ShapeClass, ShiftVector};
pub use potentials::{DefectEntry, DefectSpec, LjRegime, Potential};
pub use sums::{EnergyValue, SumConfig, ZetaMode};
