//! Div least-squares finite elements for
//! `-div(sigma grad u) - omega^2 eta u = f` on planar triangulations.
//!
//! The flux `q = sigma grad u` lives in a Raviart-Thomas or
//! Brezzi-Douglas-Marini space and the scalar in continuous Lagrange
//! elements. Besides the solver, the crate computes the projection-based
//! supercloseness quantities and runs mesh-refinement convergence studies.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod assembly;
pub mod cli;
pub mod element;
pub mod error;
pub mod field;
pub mod linalg;
pub mod mesh;
pub mod problems;
pub mod projections;
pub mod quadrature;
pub mod spaces;

pub use error::{Error, Result};
pub use mesh::{BoundaryTag, Mesh, Point};
