//! Two atoms in a single optical-lattice site, solved beyond the harmonic
//! approximation.
//!
//! The pipeline runs bottom-up: [`quantities`] derives trap scales,
//! [`potentials`] builds the interatomic curve and the separated lattice
//! polynomial, [`scattering`] tunes the curve to a scattering length,
//! [`solver`] produces centre-of-mass and relative orbitals, [`ci`] couples
//! them, and [`observables`] / [`feshbach`] turn the result into densities,
//! cuts and binding-energy curves.

pub mod angular;
pub mod basis;
pub mod ci;
pub mod config;
pub mod potentials;
pub mod error;
pub mod feshbach;
pub mod observables;
pub mod pipeline;
pub mod quantities;
pub mod roots;
pub mod scattering;
pub mod solver;

pub use error::{Error, Result};
