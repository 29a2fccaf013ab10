//! Exact-diagonalization laboratory for critical Rydberg chains.
//!
//! The crate builds blockade-constrained chain Hamiltonians with van der
//! Waals tails and second-order corrections, eigensolves them with a
//! thick-restart Lanczos, time-evolves states through modulation/sweep
//! schedules with a Krylov propagator, and compares the resulting
//! spectroscopy signals against analytic boundary-CFT level tables for the
//! Ising and tricritical Ising universality classes.
//!
//! Unit conventions (used everywhere, see [`hamiltonian::ChainParams`]):
//! ħ = 1, energies are stored as angular frequencies in units of 2π·MHz, so
//! a stored value of `6.0` means 2π × 6.0 MHz and is also the transition
//! frequency E/h in MHz. Times are in µs. CLI-facing frequencies are plain
//! MHz.

pub mod cft;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod hilbert;
pub mod operator;
pub mod spectral;pub use error::{Error, Result};
pub use hamiltonian::{ChainParams, TailRange};
pub use hilbert::{BasisState, ConstrainedBasis, ReflectionPermutation};
pub use operator::SparseOperator;
pub use spectral::{Spectrum, TransitionTable};

