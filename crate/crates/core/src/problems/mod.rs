//! Problem definitions binding the abstract method to the two applications:
//! advection-reaction in L^p and the Laplacian in the W^{1,p}0-W^{1,q}0
//! setting, with their manufactured solutions and studies.

pub mod advection;
pub mod laplace;

pub use advection::{
    advection_weak_problem, cell_average_solve, cell_average_study, gibbs_ideal_best_lp,
    gibbs_overshoot, gibbs_scenario, AdvectionData, SourceTerm,
};
pub use laplace::{
    graded_instability_study, laplace_convergence_study, laplace_problem, GradedRow, GradedStudy,
    LaplaceData, LaplaceExact, LaplaceRhs, LaplaceRow, LaplaceStudy,
};

pub use laplace::graded_infsup_pair;
