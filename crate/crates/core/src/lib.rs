//! Pseudospectral simulation and Littlewood-Paley analysis of the
//! two-dimensional Navier-Stokes-Korteweg system at low Mach number.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linear;
pub mod littlewood_paley;
pub mod nonlinear;
pub mod solvers;
pub mod spectral;

pub use error::{Error, Result};
pub use linear::LinearParams;
pub use littlewood_paley::{DyadicFilterBank, Flavor, NormSpec, TimeSeries, Truncation};
pub use nonlinear::PressureLaw;
pub use spectral::{FlowState, Grid, Rank, SpectralField};

/// Version string recorded in run manifests and reports.
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");
