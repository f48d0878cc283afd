//! Kähler geometry, invariant connections, spinors and Dirac spectra on
//! coadjoint orbits of compact Lie groups, computed from structure constants.

pub mod lie;
pub mod linalg;
pub mod orbit;
pub mod connection;
pub mod clifford;
pub mod irrep;
pub mod dirac;
pub mod quadrature;
pub mod checks;
pub mod config;
pub mod report;
pub mod pipeline;
