//! Partial-wave scattering of massive charged Dirac fields on
//! de Sitter-Reissner-Nordstrom black holes, and recovery of the
//! black-hole parameters from fixed-energy reflection data.

pub mod asymptotics;
pub mod bessel;
pub mod dirac;
pub mod error;
pub mod geometry;
pub mod io;
pub mod inverse;
pub mod jost;
pub mod lsq;
pub mod ode;
pub mod potentials;
pub mod quadrature;
pub mod scattering;
pub mod special;

pub use error::{DsrnError, Result};
pub use geometry::{evaluate_f, find_horizons, BlackHoleParams, HorizonData, RadialPoint};
pub use potentials::{AsymptoticCoeffs, PotentialProfile, PotentialSample};
