//! The Laplacian in the non-symmetric W^{1,p}0-W^{1,q}0 setting (1 < p < 2,
//! q conjugate): b(w, v) = int w' v', test norm ||(.)'||_q. Includes the
//! smooth and rough manufactured-solution rate studies and the graded-mesh
//! instability scenario where the Galerkin projection diverges while
//! residual minimization stays bounded.

use crate::func::{scalar_fn, ScalarFn};
use crate::mesh::{
    build_graded_basis, Bc, CustomBasisFn, FESpace, Mesh1D, MeshError,
};
use crate::mixed::{BilinearForm, MixedError, MixedProblem, RhsSpec, WeakGradTerm};
use crate::norm::NormSpec;
use crate::oracle::golden_min;
use crate::quad::{GradedSpec, QuadratureRule, Side};
use crate::solve::{estimate_rate, solve_mixed, RateFit, SolveError, SolverConfig};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LaplaceError {
    #[error("trial exponent must satisfy 1 < p < 2 in this setting (got {0})")]
    BadExponent(f64),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Mixed(#[from] MixedError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Right-hand-side mode.
#[derive(Clone)]
pub enum LaplaceRhs {
    /// -u'' = f with smooth f, assembled as int f v
    Smooth(ScalarFn),
    /// manufactured u = x^alpha - x on (0,1): weak data <f, v> = int u' v',
    /// with u' = alpha x^{alpha-1} - 1 integrated exactly against
    /// polynomial test functions
    ManufacturedPower { alpha: f64 },
    /// manufactured u with an explicit derivative handle; <f,v> = int u' v'
    ManufacturedFn { du: ScalarFn },
}

impl std::fmt::Debug for LaplaceRhs {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LaplaceRhs::Smooth(_) => write!(f, "Smooth"),
            LaplaceRhs::ManufacturedPower { alpha } => write!(f, "u = x^{alpha} - x"),
            LaplaceRhs::ManufacturedFn { .. } => write!(f, "ManufacturedFn"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct LaplaceData {
    pub p: f64,
    pub rhs: LaplaceRhs,
}

impl LaplaceData {
    pub fn new(p: f64, rhs: LaplaceRhs) -> Result<Self, LaplaceError> {
        if !(p > 1.0 && p < 2.0) {
            return Err(LaplaceError::BadExponent(p));
        }
        Ok(LaplaceData { p, rhs })
    }

    pub fn q(&self) -> f64 {
        self.p / (self.p - 1.0)
    }
}

/// Exact solution handles for error measurement.
#[derive(Clone)]
pub struct LaplaceExact {
    pub u: ScalarFn,
    pub du: ScalarFn,
    /// exponent alpha when u' ~ x^{alpha-1} near 0 (drives the graded error
    /// quadrature); None for smooth solutions
    pub singular_alpha: Option<f64>,
}

impl LaplaceExact {
    /// u for -u'' = e^x with zero boundary values on (0,1).
    pub fn smooth_exp() -> Self {
        LaplaceExact {
            u: scalar_fn(|x| 1.0 + (1.0f64.exp() - 1.0) * x - x.exp()),
            du: scalar_fn(|x| 1.0f64.exp() - 1.0 - x.exp()),
            singular_alpha: None,
        }
    }

    /// u = x^alpha - x on (0,1).
    pub fn power(alpha: f64) -> Self {
        LaplaceExact {
            u: scalar_fn(move |x| x.powf(alpha) - x),
            du: scalar_fn(move |x| alpha * x.powf(alpha - 1.0) - 1.0),
            singular_alpha: Some(alpha),
        }
    }
}

/// The mixed problem for -u'' = f in the W^{1,p}0-W^{1,q}0 setting.
pub fn laplace_problem(
    data: &LaplaceData,
    trial: Arc<FESpace>,
    test: Arc<FESpace>,
) -> Result<MixedProblem, LaplaceError> {
    let q = data.q();
    let mut rhs = RhsSpec::zero();
    match &data.rhs {
        LaplaceRhs::Smooth(f) => rhs.volume = Some(crate::mixed::ScalarFnWrap(f.clone())),
        LaplaceRhs::ManufacturedPower { alpha } => {
            rhs.weak_grad = Some(WeakGradTerm::PowerPlusConst {
                scale: *alpha,
                alpha: *alpha,
                shift: -1.0,
            })
        }
        LaplaceRhs::ManufacturedFn { du } => rhs.weak_grad = Some(WeakGradTerm::Fn(du.clone())),
    }
    Ok(MixedProblem::new(
        trial,
        test,
        BilinearForm::GradGrad,
        rhs,
        NormSpec::lp_derivative(q),
        NormSpec::lp_derivative(data.p),
        QuadratureRule::default(),
    )?)
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LaplaceRow {
    pub n_elem: usize,
    pub h: f64,
    /// ||u' - u_n'||_p
    pub energy_error: f64,
    /// ||r_m'||_q
    pub r_energy: f64,
    /// ||u - u_n||_p
    pub lp_error: f64,
    /// ||r_m||_q
    pub r_lq: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct LaplaceStudy {
    pub rows: Vec<LaplaceRow>,
    pub rate_energy: RateFit,
    pub rate_lp: RateFit,
    pub rate_r_energy: RateFit,
}

/// Error quadrature for a possibly singular exact derivative: graded rule
/// with a power substitution on the first element when u' ~ x^{alpha-1}.
fn error_quad(singular_alpha: Option<f64>, p: f64) -> QuadratureRule {
    match singular_alpha {
        None => QuadratureRule::default(),
        Some(alpha) => {
            let s = (alpha - 1.0) * p; // |u'|^p ~ x^s near 0
            QuadratureRule::default().with_graded(
                0,
                GradedSpec::new(crate::quad::DEFAULT_GRADED_LEVELS, Side::Left)
                    .power_for_singularity(s),
            )
        }
    }
}

/// P^k x P^{k+1} convergence sweep over a mesh list.
pub fn laplace_convergence_study(
    data: &LaplaceData,
    exact: &LaplaceExact,
    k_trial: usize,
    k_test: usize,
    n_list: &[usize],
    cfg: &SolverConfig,
) -> Result<LaplaceStudy, LaplaceError> {
    let p = data.p;
    let q = data.q();
    let mut rows = Vec::new();
    for &n in n_list {
        let mesh = Mesh1D::uniform(0.0, 1.0, n)?;
        let trial = FESpace::continuous_pk(mesh.clone(), k_trial, Bc::ZeroBoth)?;
        let test = FESpace::continuous_pk(mesh.clone(), k_test, Bc::ZeroBoth)?;
        let prob = laplace_problem(data, trial, test)?;
        let sol = solve_mixed(&prob, cfg)?;
        let equad = error_quad(exact.singular_alpha, p);
        let du = &exact.du;
        let u = &exact.u;
        let u_n = &sol.u_n;
        let energy_error = crate::norm::norm_of_fn(
            &NormSpec::lp_derivative(p),
            &mesh,
            &equad,
            |x| u(x) - u_n.eval(x),
            |x| du(x) - u_n.deriv(x),
        );
        let lp_error = crate::norm::norm_of_fn(
            &NormSpec::lp_values(p),
            &mesh,
            &equad,
            |x| u(x) - u_n.eval(x),
            |x| du(x) - u_n.deriv(x),
        );
        let r_energy = prob.vnorm.norm(&sol.r_m, &prob.quad);
        let r_lq = NormSpec::lp_values(q).norm(&sol.r_m, &prob.quad);
        rows.push(LaplaceRow {
            n_elem: n,
            h: 1.0 / n as f64,
            energy_error,
            r_energy,
            lp_error,
            r_lq,
        });
    }
    let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
    let rate_energy = estimate_rate(&h, &rows.iter().map(|r| r.energy_error).collect::<Vec<_>>())?;
    let rate_lp = estimate_rate(&h, &rows.iter().map(|r| r.lp_error).collect::<Vec<_>>())?;
    let rate_r_energy = estimate_rate(&h, &rows.iter().map(|r| r.r_energy).collect::<Vec<_>>())?;
    Ok(LaplaceStudy {
        rows,
        rate_energy,
        rate_lp,
        rate_r_energy,
    })
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GradedRow {
    pub epsilon: f64,
    /// ||(P_eps u)'||_p of the one-DOF Galerkin (H^1_0) projection
    pub galerkin: f64,
    /// ||u_eps'||_p of the ideal minimizer of c -> ||u' - c phi'||_p
    pub ideal: f64,
    /// ||u_n'||_p of the inexact method with V_m = span{phi_eps, x(1-x)}
    pub inexact: f64,
    /// golden-section oracle for the ideal column
    pub oracle_ideal: f64,
    /// golden-section oracle for the inexact column: direct minimization of
    /// the discrete dual residual norm over the trial coefficient,
    /// independent of the mixed Newton path
    pub oracle_inexact: f64,
    /// the exact residual minimizer in the true dual norm: since test
    /// derivatives integrate to zero, the energy norm is the quotient norm
    /// min over constants of ||u' - c phi' - const||_p; reported alongside
    /// because all three bounded columns converge to *different* limits
    pub exact_rm: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct GradedStudy {
    pub p: f64,
    pub alpha: f64,
    pub rows: Vec<GradedRow>,
}

/// Quadrature for the graded one-DOF spaces on the mesh {0, eps, 1}: power
/// substitution toward the x^{alpha-1} singularity on [0, eps], geometric
/// refinement toward eps on [eps, 1] (the basis derivative varies on the
/// scale of eps there).
fn graded_quad(eps: f64, alpha: f64, p: f64) -> QuadratureRule {
    let s = (alpha - 1.0) * p;
    let levels_right = ((1.0f64 / eps).log2().ceil() as u32 + 6).max(16);
    QuadratureRule::default()
        .with_graded(0, GradedSpec::new(14, Side::Left).power_for_singularity(s))
        .with_graded(1, GradedSpec::new(levels_right, Side::Left).with_power(1))
}

/// The graded-mesh instability comparison: for each eps, the W^{1,p}
/// seminorm of the Galerkin projection onto span{phi_eps} (diverges), of
/// the ideal residual minimizer (converges), and of the inexact method
/// with the bubble-enriched test space (converges).
pub fn graded_instability_study(
    epsilons: &[f64],
    p: f64,
    alpha: f64,
    cfg: &SolverConfig,
) -> Result<GradedStudy, LaplaceError> {
    if !(p > 1.0 && p < 2.0) {
        return Err(LaplaceError::BadExponent(p));
    }
    let du = move |x: f64| alpha * x.powf(alpha - 1.0) - 1.0;
    let mut rows = Vec::new();
    for &eps in epsilons {
        let space = build_graded_basis(eps)?;
        let mesh = space.mesh().clone();
        let quad = graded_quad(eps, alpha, p);
        let phi = space.custom_fns()[0].clone();
        let dphi = {
            let phi = phi.clone();
            move |x: f64| (phi.deriv)(x)
        };

        // Galerkin projection coefficient: int u' phi' / int (phi')^2
        let num = quad.integrate_mesh(&mesh, &mut |x| du(x) * dphi(x));
        let den = quad.integrate_mesh(&mesh, &mut |x| dphi(x) * dphi(x));
        let c_gal = num / den;
        let phi_p_norm = crate::norm::norm_of_fn(
            &NormSpec::lp_derivative(p),
            &mesh,
            &quad,
            |_| 0.0,
            &dphi,
        );
        let galerkin = c_gal.abs() * phi_p_norm;

        // ideal residual minimizer: scalar convex minimization of
        // c -> ||u' - c phi'||_p, via bisection on the monotone derivative
        let err_norm_p = |c: f64| -> f64 {
            crate::norm::norm_of_fn(
                &NormSpec::lp_derivative(p),
                &mesh,
                &quad,
                |_| 0.0,
                |x| du(x) - c * dphi(x),
            )
        };
        let dctol = 1e-13 * (1.0 + c_gal.abs());
        let c_ideal = {
            let g = |c: f64| -> f64 {
                // derivative sign of int |u' - c phi'|^p w.r.t. c
                -quad.integrate_mesh(&mesh, &mut |x| {
                    let r = du(x) - c * dphi(x);
                    r.abs().powf(p - 1.0) * r.signum() * dphi(x)
                })
            };
            let mut lo = -2.0 * (1.0 + c_gal.abs());
            let mut hi = 2.0 * (1.0 + c_gal.abs());
            for _ in 0..40 {
                if g(lo) < 0.0 {
                    break;
                }
                lo *= 2.0;
            }
            for _ in 0..40 {
                if g(hi) > 0.0 {
                    break;
                }
                hi *= 2.0;
            }
            loop {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi || hi - lo < dctol {
                    break 0.5 * (lo + hi);
                }
                if g(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
        };
        let ideal = c_ideal.abs() * phi_p_norm;

        // independent oracle: golden section on the norm itself
        let (c_gold, _) = golden_min(-2.0 * (1.0 + c_gal.abs()), 2.0 * (1.0 + c_gal.abs()), 1e-11, &err_norm_p);
        let oracle_ideal = c_gold.abs() * phi_p_norm;

        // exact residual minimization in the true dual norm: the energy
        // norm is the quotient norm over additive constants in u'
        let quotient_norm = |a: f64| -> f64 {
            let g = |cconst: f64| -> f64 {
                -quad.integrate_mesh(&mesh, &mut |x| {
                    let r = du(x) - a * dphi(x) - cconst;
                    r.abs().powf(p - 1.0) * r.signum()
                })
            };
            let (mut lo, mut hi) = (-20.0f64, 20.0f64);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if g(mid) <= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let cconst = 0.5 * (lo + hi);
            quad.integrate_mesh(&mesh, &mut |x| (du(x) - a * dphi(x) - cconst).abs().powf(p))
                .powf(1.0 / p)
        };
        let bound = 3.0 * (1.0 + c_gal.abs());
        let (a_rm, _) = golden_min(-bound, bound, 1e-10, &quotient_norm);
        let exact_rm = a_rm.abs() * phi_p_norm;

        // inexact method: V_m = span{phi_eps, x(1-x)}
        let bubble = CustomBasisFn::new(|x| x * (1.0 - x), |x| 1.0 - 2.0 * x, (0.0, 1.0));
        let test = FESpace::custom(mesh.clone(), vec![phi.clone(), bubble])?;
        let data = LaplaceData::new(p, LaplaceRhs::ManufacturedPower { alpha })?;
        let mut prob = laplace_problem(&data, Arc::clone(&space), test)?;
        prob.quad = quad.clone();
        let sol = solve_mixed(&prob, cfg)?;
        let inexact = sol.u_n.coeffs()[0].abs() * phi_p_norm;

        // independent oracle for the inexact column: golden section over the
        // trial coefficient of the discrete dual residual norm
        let b_mat = crate::mixed::assemble_b(&prob)?;
        let f_vec = crate::mixed::assemble_rhs(&prob)?;
        let dual_of = |c: f64| -> f64 {
            let g: Vec<f64> = f_vec
                .iter()
                .zip(b_mat.data())
                .map(|(fi, bi)| fi - c * bi)
                .collect();
            crate::mixed::discrete_dual_norm(&prob, &g).unwrap_or(f64::INFINITY)
        };
        let (c_io, _) = golden_min(-bound, bound, 1e-10, &dual_of);
        let oracle_inexact = c_io.abs() * phi_p_norm;

        rows.push(GradedRow {
            epsilon: eps,
            galerkin,
            ideal,
            inexact,
            oracle_ideal,
            oracle_inexact,
            exact_rm,
        });
    }
    Ok(GradedStudy { p, alpha, rows })
}

/// The two inf-sup diagnostics of the graded scenario: the square pair
/// (U_eps, U_eps) and the bubble-enriched pair (U_eps, span{phi_eps, psi}).
pub fn graded_infsup_pair(
    eps: f64,
    p: f64,
    enriched: bool,
) -> Result<MixedProblem, LaplaceError> {
    let q = p / (p - 1.0);
    let space = build_graded_basis(eps)?;
    let mesh = space.mesh().clone();
    let quad = graded_quad(eps, 1.0, p); // alpha unused for the pair itself
    let test: Arc<FESpace> = if enriched {
        let phi = space.custom_fns()[0].clone();
        let bubble = CustomBasisFn::new(|x| x * (1.0 - x), |x| 1.0 - 2.0 * x, (0.0, 1.0));
        FESpace::custom(mesh, vec![phi, bubble])?
    } else {
        Arc::clone(&space)
    };
    let mut prob = MixedProblem::new(
        Arc::clone(&space),
        test,
        BilinearForm::GradGrad,
        RhsSpec::zero(),
        NormSpec::lp_derivative(q),
        NormSpec::lp_derivative(p),
        QuadratureRule::default(),
    )?;
    prob.quad = quad;
    Ok(prob)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solve::aposteriori_bound;
    use approx::assert_abs_diff_eq;

    #[test]
    fn smooth_exact_solution_satisfies_problem() {
        let ex = LaplaceExact::smooth_exp();
        // -u'' = e^x and boundary values vanish
        assert_abs_diff_eq!((ex.u)(0.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((ex.u)(1.0), 0.0, epsilon = 1e-14);
        let h = 1e-5;
        for &x in &[0.2, 0.5, 0.8] {
            let upp = ((ex.du)(x + h) - (ex.du)(x - h)) / (2.0 * h);
            assert_abs_diff_eq!(-upp, x.exp(), epsilon = 1e-5);
        }
    }

    #[test]
    fn hilbertish_projection_for_p_near_two() {
        // p close to 2 with trial = test: the discrete solution is near the
        // H^1-projection of u (classical Galerkin)
        let p = 1.999;
        let data = LaplaceData::new(p, LaplaceRhs::Smooth(scalar_fn(|x| x.exp()))).unwrap();
        let mesh = Mesh1D::uniform(0.0, 1.0, 8).unwrap();
        let space = FESpace::continuous_pk(mesh.clone(), 1, Bc::ZeroBoth).unwrap();
        let prob = laplace_problem(&data, space.clone(), space.clone()).unwrap();
        let sol = solve_mixed(&prob, &SolverConfig::default()).unwrap();
        // H^1 projection of the exact solution interpolates it at the nodes
        // in 1-D (Galerkin for -u'' is nodally exact)
        let ex = LaplaceExact::smooth_exp();
        for (j, &c) in sol.u_n.coeffs().iter().enumerate() {
            let x = mesh.nodes()[j + 1];
            assert_abs_diff_eq!(c, (ex.u)(x), epsilon = 2e-4);
        }
    }

    #[test]
    fn smooth_rate_study_k1() {
        let data = LaplaceData::new(1.5, LaplaceRhs::Smooth(scalar_fn(|x| x.exp()))).unwrap();
        let study = laplace_convergence_study(
            &data,
            &LaplaceExact::smooth_exp(),
            1,
            2,
            &[2, 4, 8, 16, 32],
            &SolverConfig::default(),
        )
        .unwrap();
        assert!(
            (study.rate_energy.rate - 1.0).abs() < 0.1,
            "energy rate {}",
            study.rate_energy.rate
        );
        // the residual norm tracks the energy error
        for row in &study.rows {
            assert!(row.r_energy < 3.0 * row.energy_error && row.energy_error < 3.0 * row.r_energy);
        }
    }

    #[test]
    fn aposteriori_bound_dominates_error_on_smooth_run() {
        // gamma_B = 1/2 from the 1-D inf-sup analysis, M_B = 1, C_Pi = 1,
        // osc = 0: bound = 2 ||r_m||_V >= ||u' - u_n'||_p, and efficiency
        // ||r_m||_V <= ||u' - u_n'||_p
        let data = LaplaceData::new(1.5, LaplaceRhs::Smooth(scalar_fn(|x| x.exp()))).unwrap();
        let mesh = Mesh1D::uniform(0.0, 1.0, 16).unwrap();
        let trial = FESpace::continuous_pk(mesh.clone(), 1, Bc::ZeroBoth).unwrap();
        let test = FESpace::continuous_pk(mesh.clone(), 2, Bc::ZeroBoth).unwrap();
        let prob = laplace_problem(&data, trial, test).unwrap();
        let sol = solve_mixed(&prob, &SolverConfig::default()).unwrap();
        let ex = LaplaceExact::smooth_exp();
        let err = crate::norm::norm_of_fn(
            &NormSpec::lp_derivative(1.5),
            &mesh,
            &prob.quad,
            |x| (ex.u)(x) - sol.u_n.eval(x),
            |x| (ex.du)(x) - sol.u_n.deriv(x),
        );
        let bound = aposteriori_bound(&prob, &sol, 0.5, 1.0, 0.0);
        assert!(err <= bound, "error {err} vs bound {bound}");
        let r_norm = prob.vnorm.norm(&sol.r_m, &prob.quad);
        assert!(r_norm <= err * 1.0001, "efficiency: ||r_m|| = {r_norm} vs error {err}");
        // r_m = 0 with osc = 0 gives bound 0
        let zero = DiscreteFunction::zero(prob.test.clone());
        assert_eq!(crate::mixed::aposteriori_bound(&prob, &zero, 0.5, 1.0, 0.0), 0.0);
    }

    #[test]
    fn rough_solution_not_in_h1_has_finite_p_norm() {
        // u = x^{1/4} - x: ||u'||_2 diverges, ||u'||_{5/4} is finite
        let ex = LaplaceExact::power(0.25);
        let mesh = Mesh1D::uniform(0.0, 1.0, 1).unwrap();
        let quad = error_quad(Some(0.25), 1.25);
        let n_p = crate::norm::norm_of_fn(
            &NormSpec::lp_derivative(1.25),
            &mesh,
            &quad,
            |_| 0.0,
            |x| (ex.du)(x),
        );
        assert!(n_p.is_finite() && n_p > 0.5);
        // analytic check: int_0^1 |1/4 x^{-3/4} - 1|^{5/4} evaluated by an
        // independent very fine midpoint rule on a power-graded grid
        let mut acc = 0.0;
        let nseg = 400_000;
        for k in 0..nseg {
            let t0 = k as f64 / nseg as f64;
            let t1 = (k + 1) as f64 / nseg as f64;
            let (x0, x1) = (t0.powi(8), t1.powi(8));
            let xm = 0.5 * (x0 + x1);
            if x1 <= x0 {
                continue;
            }
            acc += (x1 - x0) * (0.25 * xm.powf(-0.75) - 1.0).abs().powf(1.25);
        }
        // the integrand has a |.|^{1.25} kink where u' crosses zero, which
        // limits plain Gauss cells to ~1e-3 relative accuracy; the graded
        // part of the rule handles the x = 0 singularity itself much better
        assert_abs_diff_eq!(n_p, acc.powf(0.8), epsilon = 2e-2);
    }

    #[test]
    fn graded_study_small_sweep_behaves() {
        let eps_list = [0.5, 0.05, 0.005, 0.0005];
        let study =
            graded_instability_study(&eps_list, 1.25, 0.25, &SolverConfig::default()).unwrap();
        // Galerkin column strictly increasing; the bounded columns stay
        // within a fixed band and match their independent oracles. The
        // ideal (best-approximation), exact-RM (quotient-norm) and inexact
        // (two-dimensional test space) columns converge to *different*
        // finite limits; cross-verified, their mutual gaps are 10-40%.
        for w in study.rows.windows(2) {
            assert!(w[1].galerkin > w[0].galerkin, "{:?}", study.rows);
        }
        for row in &study.rows {
            assert!((row.ideal - row.oracle_ideal).abs() <= 0.01 * row.oracle_ideal);
            assert!((row.inexact - row.oracle_inexact).abs() <= 0.01 * row.oracle_inexact);
            assert!(row.ideal < 2.0 && row.inexact < 2.0 && row.exact_rm < 2.0);
            assert!((row.inexact - row.ideal).abs() <= 0.6 * row.ideal);
        }
    }

    #[test]
    fn graded_exact_u_in_trial_space_recovered_by_all_methods() {
        // u = phi_{1/2} itself: every method returns it exactly
        let eps = 0.5f64;
        let space = build_graded_basis(eps).unwrap();
        let mesh = space.mesh().clone();
        let quad = graded_quad(eps, 2.0 / 3.0, 1.25);
        let phi = space.custom_fns()[0].clone();
        let slope = eps.powf(-1.0 / 3.0) - 1.0;
        let du = move |x: f64| {
            if x <= eps {
                slope
            } else {
                (2.0 / 3.0) * x.powf(-1.0 / 3.0) - 1.0
            }
        };
        // Galerkin coefficient
        let num = quad.integrate_mesh(&mesh, &mut |x| du(x) * (phi.deriv)(x));
        let den = quad.integrate_mesh(&mesh, &mut |x| (phi.deriv)(x) * (phi.deriv)(x));
        assert_abs_diff_eq!(num / den, 1.0, epsilon = 1e-12);
        // inexact mixed method with the weak data of u
        let bubble = CustomBasisFn::new(|x| x * (1.0 - x), |x| 1.0 - 2.0 * x, (0.0, 1.0));
        let test = FESpace::custom(mesh.clone(), vec![phi.clone(), bubble]).unwrap();
        let data = LaplaceData::new(
            1.25,
            LaplaceRhs::ManufacturedFn {
                du: scalar_fn(du),
            },
        )
        .unwrap();
        let mut prob = laplace_problem(&data, space, test).unwrap();
        prob.quad = quad;
        let sol = solve_mixed(&prob, &SolverConfig::default()).unwrap();
        assert_abs_diff_eq!(sol.u_n.coeffs()[0], 1.0, epsilon = 1e-7);
        let rnorm = prob.vnorm.norm(&sol.r_m, &prob.quad);
        assert!(rnorm < 1e-7, "residual representer should vanish, got {rnorm}");
    }
}
