//! Spinless relativistic (square-root Hamiltonian) particle in a one-dimensional
//! infinite well: closed-form spectrum and revival times, exact eigenbasis
//! evolution, a split-operator propagator, momentum-space diagonalization of
//! the finite well, and the observables built on top of them.

pub mod dst;
pub mod error;
pub mod grid;
pub mod io;
pub mod model;
pub mod momentum;
pub mod observables;
pub mod phase;
pub mod spectral;
pub mod split;
pub mod wavepacket;

pub use error::{Error, Result};
pub use grid::{GridState, SpatialGrid};
pub use model::{LevelIndex, RevivalTimes, WellModel};
pub use wavepacket::{CoefficientVector, Truncation, WavepacketSpec};
