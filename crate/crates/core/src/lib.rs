//! Barrier-method solvers for the discrete p-Laplacian, `1 <= p <= inf`.
//!
//! The crate discretizes
//!
//! ```text
//! J(u) = (1/p) ∫ ‖∇(u + g)‖^p − ∫ f u        (1 <= p < inf)
//! J(u) = sup ‖∇(u + g)‖ − ∫ f u              (p = inf)
//! ```
//!
//! with piecewise linear elements on a simplicial mesh of a box, rewrites the
//! minimization as a linear objective over a convex set with one epigraph
//! variable per element, and solves that problem with self-concordant barrier
//! path following (short-step, long-step and adaptive-step variants).
//!
//! Everything here is `no_std` and only needs `alloc`; IO, configuration files,
//! timing and the command line live in the companion `plap` crate.
//!
//! Module map:
//!
//! - [`mesh`]: Freudenthal/Kuhn triangulations of boxes in 1, 2 and 3 dimensions.
//! - [`discretization`]: discrete gradients, quadrature, load vectors, energies,
//!   the a-priori radius and the linear cost.
//! - [`barrier`]: the barrier, its derivatives and the feasible set.
//! - [`newton`]: block-eliminated Newton systems and local dual norms.
//! - [`pathfollow`]: auxiliary and main path-following schemes.
//! - [`solver`]: end-to-end orchestration and reports.
//! - [`oracle`]: independent reference minimizers used for validation.
#![no_std]
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod barrier;
pub mod discretization;
mod error;
mod exponent;
pub mod linalg;
pub mod mesh;
pub mod newton;
pub mod oracle;
pub mod pathfollow;
pub mod solver;

pub use barrier::{BarrierDerivatives, Feasibility, Iterate};
pub use discretization::{DiscreteOperators, Problem, ProblemSpec, Prolongation};
pub use error::{Constraint, Error, Result};
pub use exponent::Exponent;
pub use mesh::{Mesh, MeshStats};
pub use newton::NewtonSystem;
pub use pathfollow::{Method, Phase, SolverConstants, StepEvent, TraceRecord};
pub use solver::{solve, solve_with, BoundaryData, BoundaryPreset, Forcing, SolveConfig, SolveReport};
