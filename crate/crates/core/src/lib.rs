//! Trend filtering for exponential-family observations on d-dimensional
//! lattice graphs.
//!
//! The crate provides the lattice difference operators and their
//! eigenstructure, scalar exponential-family primitives, a linearized-ADMM
//! solver for the penalized likelihood and mean trend filters, unbiased risk
//! estimators (SURE / SUKL / PUKL / GSURE) for tuning, and a simulation
//! harness. The `ltf` binary exposes fit / tune / simulate / eig
//! subcommands over flat CSV grids with JSON sidecars.

pub mod error;
pub mod family;
pub mod gridio;
pub mod lattice;
pub mod risk;
pub mod rng;
pub mod sim;
pub mod solver;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
pub use family::{Family, SubExpParams};
pub use lattice::{LatticeSpec, NullSpaceBasis, SparseOperator};
pub use solver::{FitConfig, FitResult};
