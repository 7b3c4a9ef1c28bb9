//! Discrete Hamiltonian systems on uniform time grids: discrete calculus,
//! Helmholtz conditions for the inverse problem, Hamiltonian reconstruction,
//! and variational integrators.

pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod expr;
pub mod field;
pub mod grid;
pub mod helmholtz;
pub mod quadrature;
pub mod reconstruct;
pub mod sampling;
pub mod solve;
pub mod system;

pub use error::{Error, Result};
