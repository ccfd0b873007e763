//! Phase-field topology optimization of Stokes–Brinkman flow on adaptively
//! refined triangular meshes.
//!
//! The crate implements one optimization pipeline:
//!
//! 1. **OPTIMIZE** — on the current mesh, minimize an augmented Lagrangian
//!    combining the flow energy of a Brinkman-penalized Stokes problem with a
//!    Ginzburg–Landau interface energy and a volume constraint
//!    ([`phasefield::optimize_on_mesh`]).
//! 2. **ESTIMATE** — evaluate residual-type per-element error indicators for
//!    the phase-field optimality condition and for the flow state
//!    ([`estimator`]).
//! 3. **MARK** — Dörfler marking on both indicator families
//!    ([`adapt::combined_mark`]).
//! 4. **REFINE** — newest-vertex bisection with conformity closure
//!    ([`mesh::bisect`]), or uniform refinement for comparison runs.
//!
//! The discretization uses nonconforming Crouzeix–Raviart elements for the
//! velocity (edge-midpoint dofs), piecewise constants for the pressure, and
//! conforming P1 for the phase field. Linear systems are solved by the sparse
//! symmetric-indefinite factorization in [`sparse`].
//!
//! The top-level driver is [`adapt::afem_drive`]; problem geometry and
//! boundary data are described by [`problem::ProblemSpec`].

pub mod adapt;
pub mod estimator;
pub mod fespace;
pub mod manufactured;
pub mod mesh;
pub mod phasefield;
pub mod problem;
pub mod quad;
pub mod sparse;
pub mod stokes;

/// Errors surfaced by the solver pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Mesh(#[from] mesh::MeshError),
    /// The state solve failed; `note` records whether the pressure gauge was
    /// active, the usual suspect when boundary tags are wrong.
    #[error("state solve failed ({note}): {source}")]
    StateSolve {
        note: &'static str,
        #[source]
        source: sparse::SolveError,
    },
    #[error("design update solve failed: {0}")]
    PhaseSolve(#[source] sparse::SolveError),
    #[error("boundary edge with midpoint ({0}, {1}) has no tag")]
    UntaggedBoundary(f64, f64),
}
