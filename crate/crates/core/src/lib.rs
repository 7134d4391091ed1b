//! Exact numerical models of long-range transverse-field Ising chains as
//! realized in linear ion traps.
//!
//! The pipeline runs from trap hardware parameters to spin physics:
//! [`ionchain`] solves the Coulomb crystal geometry and its transverse
//! phonon modes, [`couplings`] turns Raman-laser parameters and those modes
//! into a spin-spin coupling matrix `J_ij` (and fits its power-law range),
//! [`hilbert`] holds states of N spin-1/2 particles and propagates them
//! under declarative Hamiltonians, and [`experiments`] drives the four
//! measurement protocols built on top: disordered quench (MBL),
//! prethermalization, the driven discrete time crystal, and coupling
//! spectroscopy.

pub mod constants;
pub mod couplings;
pub mod experiments;
pub mod hilbert;
pub mod ionchain;

pub use couplings::{CouplingMatrix, LightShiftParams, PowerLawFit, RamanConfig};
pub use hilbert::{Axis, HamiltonianSpec, Method, Propagator, SpinState, Term};
pub use ionchain::{EquilibriumPositions, ModeSpectrum, TrapConfig};
