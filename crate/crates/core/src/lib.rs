//! Nonlocal gradients `D_rho` with a scalable horizon on periodic grids.
//!
//! The crate covers radial kernel construction and scaling ([`kernels`]), the
//! Fourier symbol of the gradient ([`profile`]), spectral operators on a
//! torus ([`operator`]), limit experiments ([`analysis`]) and minimization of
//! the associated energies ([`solver`]).

pub mod analysis;
pub mod error;
pub mod grid;
pub mod kernels;
pub mod operator;
mod parallel;
pub mod profile;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
