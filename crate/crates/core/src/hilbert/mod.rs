//! Pure states of N spin-1/2 particles and their dynamics.
//!
//! States live in the z basis; bit `i` of a basis index (site 0 = least
//! significant bit) is 1 when spin `i` points up along z. Hamiltonians are
//! declarative sums of Ising and field terms applied matrix-free by bitwise
//! kernels; propagation is exact eigendecomposition, Lanczos/Krylov, or a
//! midpoint exponential integrator for modulated drives.

mod hamiltonian;
mod propagate;
mod state;

pub use hamiltonian::{HamiltonianSpec, Term};
pub use propagate::{
    evolve, evolve_n_steps, evolve_series, EvolveError, Method, Propagator, StaticPropagation,
};
pub use state::{Axis, LocalSpin, SpinState, StateError};
