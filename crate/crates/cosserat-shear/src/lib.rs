//! Two-dimensional Cosserat single-slip shear toolbox.
//!
//! The crate models a planar body whose deformation is a prescribed simple
//! shear along one slip system while each material point carries an
//! independent micro-rotation angle `alpha`. Minimising the mechanical
//! energy reduces the rotation field to a scalar reaction-diffusion problem:
//! `alpha` relaxes under an Allen-Cahn flow whose nonlinearity is a
//! double-well potential built from the elastic moduli. For a suitable
//! parameter range the relaxed field partitions the domain into cells of
//! nearly constant rotation separated by thin transition layers.
//!
//! Modules:
//! - [`params`]: material constants, the shear drive, slip systems, and the
//!   closed-form parameter conditions (two-well test, elastic-regime bound).
//! - [`potential`]: the scalar potentials `J` and `J_beta`, Newton search for
//!   stationary points, and branch tracing over the shear parameter.
//! - [`energy`]: the mechanical energy density assembled two independent
//!   ways (matrix form and expanded trigonometric form) plus total-energy
//!   quadrature over a field.
//! - [`field`]: uniform 2D grid scalar fields, Dirichlet boundary data,
//!   discrete operators, CSV/PGM I/O.
//! - [`solver`]: the harmonic limit solver and the Allen-Cahn evolution to
//!   stationarity (explicit and semi-implicit schemes).
//! - [`analysis`]: partition labelling, layer-width measurement, the
//!   boundary-data layer conditions, and the pointwise elastic-regime check.
//! - [`config`] / [`cli`]: strict scenario-file parsing and the batch
//!   subcommands.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod energy;
pub mod field;
pub mod params;
pub mod potential;
pub mod solver;

pub use field::{BoundarySpec, Grid2D, ScalarField, Segment, Side};
pub use params::{MaterialParams, ShearDrive, SlipSystem};
pub use potential::{BifurcationTrace, ExtremumKind, StationaryPoint};
pub use solver::{EvolutionDiagnostics, EvolveConfig, Mode, Scheme};
