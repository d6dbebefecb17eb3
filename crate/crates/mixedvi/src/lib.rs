//! Finite-element solver and verification harness for an antiplane
//! frictional contact problem with a Lagrange multiplier on the contact
//! boundary.
//!
//! The library discretizes a rectangle with P1 triangles, assembles the
//! nonlinear power-growth diffusion operator together with the boundary
//! friction terms, and solves the coupled primal/multiplier system by a
//! Uzawa iteration with an inner Newton solve. An independent convex
//! energy-minimization oracle, exact a-priori bound constants, a
//! data-perturbation convergence study, and derivative-free parameter
//! optimization are layered on top for verification.
//!
//! All numerics are generic over the scalar type through [`Real`]; the
//! `*32`/`*64` aliases below fix the two standard widths.

#![warn(missing_docs)]

pub mod analysis;
pub mod assembly;
pub mod linalg;
pub mod mesh;
pub mod report;
pub mod scalar;
pub mod solver;

pub use scalar::Real;

/// Mesh with `f64` coordinates.
pub type Mesh64 = mesh::Mesh<f64>;
/// Mesh with `f32` coordinates.
pub type Mesh32 = mesh::Mesh<f32>;
/// Problem data in `f64`.
pub type ProblemSpec64 = assembly::ProblemSpec<f64>;
/// Problem data in `f32`.
pub type ProblemSpec32 = assembly::ProblemSpec<f32>;
/// Solver configuration in `f64`.
pub type SolverConfig64 = solver::SolverConfig<f64>;
/// Solver configuration in `f32`.
pub type SolverConfig32 = solver::SolverConfig<f32>;
/// Primal/multiplier state in `f64`.
pub type DiscreteState64 = solver::DiscreteState<f64>;
/// Primal/multiplier state in `f32`.
pub type DiscreteState32 = solver::DiscreteState<f32>;
/// Bound-constant report in `f64`.
pub type ConstantsReport64 = analysis::ConstantsReport<f64>;
/// Bound-constant report in `f32`.
pub type ConstantsReport32 = analysis::ConstantsReport<f32>;
