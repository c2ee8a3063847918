//! Finite element machinery for bilinear quadrilaterals on unit squares.

mod assembly;
mod element;
mod quadrature;
mod solver;
mod sparse;

pub use assembly::{assemble_stiffness, Spring, StiffnessAssembler};
pub use element::{element_kit, shape_values, strain_displacement, ElementKit};
pub use quadrature::{gauss_rule, QuadratureRule};
pub use solver::{
    solve_linear, IncompleteCholesky, SkylineCholesky, SolverStrategy, SparseSystem, SpdSolver,
};
pub use sparse::{CsrMatrix, SparsityPattern};
