//! Pseudo-spectral laboratory for forced incompressible Navier–Stokes flows
//! on the periodic box: exact-symbol operators, Littlewood–Paley norms,
//! explicit forcing families, Duhamel/Picard construction of mild solutions
//! and the experiments built on top of them.

pub mod config;
pub mod error;
pub mod experiments;
mod fft;
pub mod field;
pub mod forcing;
pub mod grid;
pub mod lp;
pub mod random;
pub mod snapshot;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{SpectralField, Trajectory};
pub use grid::Grid;
pub use lp::{BesovIndex, DyadicPartition, NormSample};
