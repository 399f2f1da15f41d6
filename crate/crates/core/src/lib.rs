//! Residual minimization in discrete dual norms for linear operator
//! equations in Banach-space settings, discretized as a nonlinear
//! Petrov-Galerkin / monotone mixed finite element method in 1-D.
//!
//! The crate provides:
//! - finite-dimensional l_p machinery (duality maps, best approximation,
//!   geometric constants) in [`lp`];
//! - 1-D meshes, P^k / P^0 / custom finite element spaces and quadrature in
//!   [`mesh`] and [`quad`];
//! - Banach norms, duality pairings and the monotone mixed system assembly
//!   in [`norm`] and [`mixed`];
//! - Newton-with-continuation and constrained-descent solvers in [`solve`];
//! - the advection-reaction and Laplace applications with their studies in
//!   [`problems`];
//! - experiment plumbing (CSV/JSON reports, verification suites) in
//!   [`report`] and [`verify`], driven by the `resmin` binary.

pub mod func;
pub mod linalg;
pub mod lp;
pub mod mesh;
pub mod mixed;
pub mod norm;
pub mod oracle;
pub mod problems;
pub mod quad;
pub mod report;
pub mod solve;
pub mod verify;

pub use func::{scalar_fn, Coefficient, ScalarFn};
pub use mesh::{
    build_graded_basis, build_ideal_advection_test_space, make_uniform_mesh, Bc, CustomBasisFn,
    DiscreteFunction, FESpace, Family, Mesh1D,
};
pub use mixed::{
    assemble_mixed_jacobian, assemble_mixed_residual, discrete_dual_norm, discrete_infsup,
    BilinearForm, MixedProblem, RhsSpec,
};
pub use norm::{duality_pairing, NormSpec};
pub use quad::{lp_norm, GradedSpec, QuadratureRule, Side};
pub use solve::{
    aposteriori_bound, estimate_rate, solve_constrained_descent, solve_mixed, MixedSolution,
    SolverConfig,
};
