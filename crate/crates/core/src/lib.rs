//! Two-dimensional topology optimization on structured quadrilateral grids.
//!
//! The design is described by a nodal discrimination function `psi` whose
//! zero level splits the domain into stiff material (`psi >= 0`) and a soft
//! ersatz material (`psi < 0`). Each iteration solves the state problem,
//! evaluates a pseudo-energy from the relaxed topological derivative,
//! shifts/normalizes and smooths it with a Laplacian (Helmholtz-type)
//! regularization, and then updates the topology in closed form by
//! root-finding the Lagrange multiplier that hits the current void-volume
//! target. The target is advanced over a pseudo-time schedule so every
//! intermediate volume yields a converged design.
//!
//! Modules:
//! - [`grid`]: mesh, node numbering and DOF connectivity.
//! - [`material`]: constitutive matrices and the relaxed interpolation law.
//! - [`fem`]: quadrature, element matrices, sparse assembly and linear solves.
//! - [`filter`]: the Laplacian regularization operator.
//! - [`problems`]: cost functions, sensitivities and the example library.
//! - [`optimizer`]: schedule, volume evaluation, multiplier search and the loop.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fem;
pub mod filter;
pub mod grid;
pub mod material;
pub mod optimizer;
pub mod problems;

pub use error::{Error, Result};
