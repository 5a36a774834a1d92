//! Numerical laboratory for finite-time blow-up in non-equidiffusive
//! reaction-diffusion systems with exponential and power nonlinearities.

pub mod analysis;
pub mod auxiliary;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod grid;
pub mod initial_data;
pub mod io;
pub mod model;
pub mod msystem;
pub mod ode;
pub mod quadrature;
pub mod similarity;
pub mod solver;

pub use error::{Error, Result};
pub use field::{FieldState, Sample, StopReason, Trajectory};
pub use grid::RadialGrid;
pub use model::{BoundaryCondition, ModelParams, Variant};
pub use solver::{Solver, SolverConfig};
