//! The monotone mixed system: trial/test pair, bilinear form, right-hand
//! side, assembly of the nonlinear residual and its Jacobian, discrete dual
//! norms, and the discrete inf-sup diagnostic.
//!
//! The discrete system in coefficients (r over V_m, u over U_n) is
//!   < J_V(r), v_i > + b(u, v_i) = <f, v_i>   for every test basis v_i,
//!   b(w_j, r) = 0                            for every trial basis w_j.

use crate::func::{Coefficient, ScalarFn};
use crate::linalg::{self, DMat};
use crate::lp::phi_delta;
use crate::mesh::{DiscreteFunction, FESpace};
use crate::norm::NormSpec;
use crate::quad::{integrate_power_times_poly, QuadratureRule};
use rand::Rng;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MixedError {
    #[error("dim V_m = {test} < dim U_n = {trial}; the Fortin condition needs dim V_m >= dim U_n")]
    DimMismatch { trial: usize, test: usize },
    #[error("assembly produced a non-finite entry ({0})")]
    NonFinite(&'static str),
    #[error("point source at x = {0} needs a test space that is continuous there")]
    PointSourceOnDiscontinuity(f64),
    #[error("duality-map inversion did not converge (residual {residual:.3e})")]
    DualMapInversion { residual: f64 },
    #[error(transparent)]
    Linalg(#[from] linalg::LinalgError),
}

/// b(w, v) evaluated through pointwise traces (x, w, w', v, v').
#[derive(Clone)]
pub enum BilinearForm {
    /// int w' v'
    GradGrad,
    /// int w (mu v - (beta v)')
    AdvectionWeak { beta: Coefficient, mu: Coefficient },
    /// arbitrary integrand (x, w, w', v, v')
    Custom(Arc<dyn Fn(f64, f64, f64, f64, f64) -> f64 + Send + Sync>),
}

impl BilinearForm {
    #[inline]
    fn integrand(&self, x: f64, w: f64, dw: f64, v: f64, dv: f64) -> f64 {
        match self {
            BilinearForm::GradGrad => dw * dv,
            BilinearForm::AdvectionWeak { beta, mu } => {
                w * (mu.value(x) * v - (beta.deriv(x) * v + beta.value(x) * dv))
            }
            BilinearForm::Custom(f) => f(x, w, dw, v, dv),
        }
    }
}

impl std::fmt::Debug for BilinearForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BilinearForm::GradGrad => write!(f, "GradGrad"),
            BilinearForm::AdvectionWeak { .. } => write!(f, "AdvectionWeak"),
            BilinearForm::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// Weak-gradient data term int g(x) v'(x) dx.
#[derive(Clone)]
pub enum WeakGradTerm {
    Fn(ScalarFn),
    /// g(x) = scale * x^{alpha-1} + shift, integrated exactly against
    /// piecewise-polynomial test functions (integration by parts), so the
    /// singular manufactured right-hand sides do not pollute rate studies.
    PowerPlusConst { scale: f64, alpha: f64, shift: f64 },
}

impl std::fmt::Debug for WeakGradTerm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeakGradTerm::Fn(_) => write!(f, "WeakGradTerm::Fn"),
            WeakGradTerm::PowerPlusConst { scale, alpha, shift } => {
                write!(f, "WeakGradTerm::PowerPlusConst({scale} x^{{{alpha}-1}} + {shift})")
            }
        }
    }
}

/// Right-hand-side functional <f, v>, assembled against the test basis.
#[derive(Debug, Clone, Default)]
pub struct RhsSpec {
    /// int f v
    pub volume: Option<ScalarFnWrap>,
    /// int g v'
    pub weak_grad: Option<WeakGradTerm>,
    /// sum of c * v(x0) point terms (Dirac sources, inflow boundary data)
    pub points: Vec<(f64, f64)>,
    /// direct action on the test basis (random test functionals)
    pub coeffs: Option<Vec<f64>>,
}

#[derive(Clone)]
pub struct ScalarFnWrap(pub ScalarFn);

impl std::fmt::Debug for ScalarFnWrap {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "ScalarFn")
    }
}

impl RhsSpec {
    pub fn zero() -> Self {
        RhsSpec::default()
    }

    pub fn from_coeffs(c: Vec<f64>) -> Self {
        RhsSpec {
            coeffs: Some(c),
            ..Default::default()
        }
    }

    pub fn volume_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RhsSpec {
            volume: Some(ScalarFnWrap(Arc::new(f))),
            ..Default::default()
        }
    }
}

/// Trial space, test space, bilinear form, right-hand side, and the norms
/// carried by V (driving the duality map) and U (for inf-sup ratios).
#[derive(Debug, Clone)]
pub struct MixedProblem {
    pub trial: Arc<FESpace>,
    pub test: Arc<FESpace>,
    pub bform: BilinearForm,
    pub rhs: RhsSpec,
    pub vnorm: NormSpec,
    pub unorm: NormSpec,
    pub quad: QuadratureRule,
}

impl MixedProblem {
    pub fn new(
        trial: Arc<FESpace>,
        test: Arc<FESpace>,
        bform: BilinearForm,
        rhs: RhsSpec,
        vnorm: NormSpec,
        unorm: NormSpec,
        quad: QuadratureRule,
    ) -> Result<Self, MixedError> {
        if test.dim() < trial.dim() {
            return Err(MixedError::DimMismatch {
                trial: trial.dim(),
                test: test.dim(),
            });
        }
        for &(x, _) in &rhs.points {
            if test.discontinuities().iter().any(|&d| (d - x).abs() < 1e-12) {
                return Err(MixedError::PointSourceOnDiscontinuity(x));
            }
        }
        Ok(MixedProblem {
            trial,
            test,
            bform,
            rhs,
            vnorm,
            unorm,
            quad,
        })
    }

    /// Continuation copy with a different V-norm exponent.
    pub fn with_vnorm_rho(&self, rho: f64) -> Self {
        let mut p = self.clone();
        p.vnorm = self.vnorm.with_rho(rho);
        p
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.test.dim(), self.trial.dim())
    }
}

/// B[i][j] = b(w_j, v_i), i over the test basis, j over the trial basis.
pub fn assemble_b(prob: &MixedProblem) -> Result<DMat, MixedError> {
    let m = prob.test.dim();
    let n = prob.trial.dim();
    let mesh = prob.trial.mesh();
    assert_eq!(
        mesh.nodes(),
        prob.test.mesh().nodes(),
        "trial and test spaces must share the mesh"
    );
    let mut b = DMat::zeros(m, n);
    for e in 0..mesh.n_elements() {
        let (xl, xr) = mesh.element(e);
        let tdofs = prob.trial.element_dofs(e);
        let vdofs = prob.test.element_dofs(e);
        if tdofs.is_empty() || vdofs.is_empty() {
            continue;
        }
        prob.quad.for_each_point(e, xl, xr, &mut |x, w| {
            for &(tl, tg) in &tdofs {
                let (wv, wd) = prob.trial.eval_local(e, tl, x);
                for &(vl, vg) in &vdofs {
                    let (vv, vd) = prob.test.eval_local(e, vl, x);
                    b.add_to(vg, tg, w * prob.bform.integrand(x, wv, wd, vv, vd));
                }
            }
        });
    }
    if b.data().iter().any(|x| !x.is_finite()) {
        return Err(MixedError::NonFinite("B matrix"));
    }
    Ok(b)
}

/// f_i = <f, v_i> over the test basis.
pub fn assemble_rhs(prob: &MixedProblem) -> Result<Vec<f64>, MixedError> {
    let m = prob.test.dim();
    let mesh = prob.test.mesh();
    let mut f = vec![0.0; m];
    if let Some(ScalarFnWrap(src)) = &prob.rhs.volume {
        for e in 0..mesh.n_elements() {
            let (xl, xr) = mesh.element(e);
            let vdofs = prob.test.element_dofs(e);
            prob.quad.for_each_point(e, xl, xr, &mut |x, w| {
                let s = src(x);
                for &(vl, vg) in &vdofs {
                    let (vv, _) = prob.test.eval_local(e, vl, x);
                    f[vg] += w * s * vv;
                }
            });
        }
    }
    match &prob.rhs.weak_grad {
        Some(WeakGradTerm::Fn(g)) => {
            for e in 0..mesh.n_elements() {
                let (xl, xr) = mesh.element(e);
                let vdofs = prob.test.element_dofs(e);
                prob.quad.for_each_point(e, xl, xr, &mut |x, w| {
                    let s = g(x);
                    for &(vl, vg) in &vdofs {
                        let (_, vd) = prob.test.eval_local(e, vl, x);
                        f[vg] += w * s * vd;
                    }
                });
            }
        }
        Some(WeakGradTerm::PowerPlusConst { scale, alpha, shift }) => {
            match prob.test.local_poly_degree() {
                Some(k) => {
                    // exact per-element integration of scale x^{alpha-1} v'
                    // plus shift (v(b) - v(a))
                    for e in 0..mesh.n_elements() {
                        let (xl, xr) = mesh.element(e);
                        for (vl, vg) in prob.test.element_dofs(e) {
                            let power_part = integrate_power_times_poly(
                                *alpha,
                                xl.max(0.0),
                                xr,
                                k.saturating_sub(1),
                                |x, j| prob.test.eval_local_deriv_n(e, vl, x, j + 1),
                            );
                            let (vb, _) = prob.test.eval_local(e, vl, xr);
                            let (va, _) = prob.test.eval_local(e, vl, xl);
                            f[vg] += scale * power_part + shift * (vb - va);
                        }
                    }
                }
                None => {
                    // custom test space: quadrature with whatever grading the
                    // problem's rule prescribes
                    for e in 0..mesh.n_elements() {
                        let (xl, xr) = mesh.element(e);
                        let vdofs = prob.test.element_dofs(e);
                        prob.quad.for_each_point(e, xl, xr, &mut |x, w| {
                            let s = scale * x.powf(alpha - 1.0) + shift;
                            for &(vl, vg) in &vdofs {
                                let (_, vd) = prob.test.eval_local(e, vl, x);
                                f[vg] += w * s * vd;
                            }
                        });
                    }
                }
            }
        }
        None => {}
    }
    for &(x0, c) in &prob.rhs.points {
        let e = mesh.find_element(x0);
        for (vl, vg) in prob.test.element_dofs(e) {
            let (vv, _) = prob.test.eval_local(e, vl, x0);
            f[vg] += c * vv;
        }
    }
    if let Some(c) = &prob.rhs.coeffs {
        for (fi, ci) in f.iter_mut().zip(c) {
            *fi += ci;
        }
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(MixedError::NonFinite("rhs vector"));
    }
    Ok(f)
}

/// One normalized duality-map component over the test space: returns
/// (action vector <J r, v_i>, optional Jacobian d<J r, v_i>/dr_j).
/// All evaluation is sup-scaled; `delta` smooths |t| as sqrt(t^2+delta^2).
fn jv_component(
    space: &Arc<FESpace>,
    quad: &QuadratureRule,
    rho: f64,
    delta: f64,
    r: &[f64],
    trace: &dyn Fn(usize, f64, f64, f64) -> f64, // (elem, x, value, deriv) -> T at x
    want_jacobian: bool,
) -> (Vec<f64>, Option<DMat>) {
    let mesh = space.mesh();
    let m = space.dim();
    let rf = DiscreteFunction::new(Arc::clone(space), r.to_vec()).unwrap();

    // pass 1: sup of |T r| over the scheme
    let hilbert = (rho - 2.0).abs() < 1e-14;
    let mut scale = delta.abs();
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element(e);
        quad.for_each_point(e, a, b, &mut |x, _| {
            let (v, d) = rf.eval_on(e, x);
            scale = scale.max(trace(e, x, v, d).abs());
        });
    }
    if scale == 0.0 {
        if hilbert {
            // the Hilbert map is linear: zero action, Gram Jacobian
            scale = 1.0;
        } else {
            // duality map fixes the origin; the exact Jacobian limit at the
            // origin is 0 for rho > 2 (the solver smooths with delta > 0
            // whenever it needs an invertible block)
            let jac = want_jacobian.then(|| DMat::zeros(m, m));
            return (vec![0.0; m], jac);
        }
    }
    let dh = delta / scale;

    // pass 2: accumulate s_hat^rho, M_hat and (optionally) H_hat
    let mut s_pow = 0.0f64;
    let mut mhat = vec![0.0f64; m];
    let mut hhat = want_jacobian.then(|| DMat::zeros(m, m));
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element(e);
        let vdofs = space.element_dofs(e);
        let mut tvals = vec![0.0; vdofs.len()];
        quad.for_each_point(e, a, b, &mut |x, w| {
            let (rv, rd) = rf.eval_on(e, x);
            let t = trace(e, x, rv, rd) / scale;
            let ph = phi_delta(t, dh);
            s_pow += w * if hilbert { t * t + dh * dh } else { ph.powf(rho) };
            // density phi^{rho-2} t, exact (= t) in the Hilbert case
            let dens = if hilbert {
                t
            } else if ph == 0.0 {
                0.0
            } else {
                ph.powf(rho - 2.0) * t
            };
            for (k, &(vl, _)) in vdofs.iter().enumerate() {
                let (vv, vd) = space.eval_local(e, vl, x);
                tvals[k] = trace(e, x, vv, vd);
            }
            for (k, &(_, vg)) in vdofs.iter().enumerate() {
                mhat[vg] += w * dens * tvals[k];
            }
            if let Some(h) = hhat.as_mut() {
                // phi^{rho-4}((rho-1) t^2 + dh^2): exactly 1 at rho = 2;
                // the t = 0, delta = 0 limit is 0 for rho > 2 (kink in the
                // density), and the solver never needs delta = 0 Jacobians
                // for rho < 2
                let wdens = if hilbert {
                    1.0
                } else if ph == 0.0 {
                    0.0
                } else {
                    ph.powf(rho - 4.0) * ((rho - 1.0) * t * t + dh * dh)
                };
                for (k1, &(_, g1)) in vdofs.iter().enumerate() {
                    for (k2, &(_, g2)) in vdofs.iter().enumerate() {
                        h.add_to(g1, g2, w * wdens * tvals[k1] * tvals[k2]);
                    }
                }
            }
        });
    }
    let s_hat = s_pow.powf(1.0 / rho);
    if s_hat == 0.0 && !hilbert {
        let jac = want_jacobian.then(|| DMat::zeros(m, m));
        return (vec![0.0; m], jac);
    }
    // action_i = scale * s_hat^{2-rho} * M_hat_i (the prefactor is exactly 1
    // in the Hilbert case)
    let pref = if hilbert { scale } else { scale * s_hat.powf(2.0 - rho) };
    let action: Vec<f64> = mhat.iter().map(|&v| pref * v).collect();
    let jac = hhat.map(|h| {
        // A = (2-rho) s_hat^{2(1-rho)} M_hat M_hat^T + s_hat^{2-rho} H_hat
        // (the sup-scale powers cancel by degree-0 homogeneity)
        let c1 = if hilbert {
            0.0
        } else {
            (2.0 - rho) * s_hat.powf(2.0 * (1.0 - rho))
        };
        let c2 = if hilbert { 1.0 } else { s_hat.powf(2.0 - rho) };
        DMat::from_fn(m, m, |i, j| c1 * mhat[i] * mhat[j] + c2 * h.get(i, j))
    });
    (action, jac)
}

/// <J_V(r), v_i> for all test basis functions, with optional Jacobian,
/// delta-smoothed. Sum of one or two normalized components per NormSpec.
pub fn jv_action_jacobian(
    space: &Arc<FESpace>,
    vnorm: &NormSpec,
    quad: &QuadratureRule,
    r: &[f64],
    delta: f64,
    want_jacobian: bool,
) -> (Vec<f64>, Option<DMat>) {
    match vnorm {
        NormSpec::LpValues { rho } => jv_component(
            space,
            quad,
            *rho,
            delta,
            r,
            &|_, _, v, _| v,
            want_jacobian,
        ),
        NormSpec::LpDerivative { rho } => jv_component(
            space,
            quad,
            *rho,
            delta,
            r,
            &|_, _, _, d| d,
            want_jacobian,
        ),
        NormSpec::Graph {
            rho_value,
            rho_div,
            beta,
        } => {
            let (a1, j1) = jv_component(
                space,
                quad,
                *rho_value,
                delta,
                r,
                &|_, _, v, _| v,
                want_jacobian,
            );
            let b = beta.clone();
            let (a2, j2) = jv_component(
                space,
                quad,
                *rho_div,
                delta,
                r,
                &move |_, x, v, d| b.deriv(x) * v + b.value(x) * d,
                want_jacobian,
            );
            let action = a1.iter().zip(&a2).map(|(x, y)| x + y).collect();
            let jac = match (j1, j2) {
                (Some(m1), Some(m2)) => {
                    Some(DMat::from_fn(m1.rows(), m1.cols(), |i, j| m1.get(i, j) + m2.get(i, j)))
                }
                _ => None,
            };
            (action, jac)
        }
    }
}

/// Block residual of the mixed system at (r, u): F = (F_a, F_b) with
/// F_a = Jv(r) + B u - f over V_m and F_b = B^T r over U_n. The duality
/// map is evaluated exactly (delta = 0).
pub fn assemble_mixed_residual(
    prob: &MixedProblem,
    r_m: &DiscreteFunction,
    u_n: &DiscreteFunction,
) -> Result<Vec<f64>, MixedError> {
    assemble_mixed_residual_smoothed(prob, r_m, u_n, 0.0)
}

/// Residual of the delta-smoothed system (the object Newton iterates on).
pub fn assemble_mixed_residual_smoothed(
    prob: &MixedProblem,
    r_m: &DiscreteFunction,
    u_n: &DiscreteFunction,
    delta: f64,
) -> Result<Vec<f64>, MixedError> {
    let b = assemble_b(prob)?;
    let f = assemble_rhs(prob)?;
    let (jv, _) = jv_action_jacobian(&prob.test, &prob.vnorm, &prob.quad, r_m.coeffs(), delta, false);
    residual_from_parts(&b, &f, &jv, r_m.coeffs(), u_n.coeffs())
}

pub(crate) fn residual_from_parts(
    b: &DMat,
    f: &[f64],
    jv: &[f64],
    r: &[f64],
    u: &[f64],
) -> Result<Vec<f64>, MixedError> {
    let m = b.rows();
    let n = b.cols();
    let bu = b.matvec(u);
    let btr = b.t_matvec(r);
    let mut out = Vec::with_capacity(m + n);
    for i in 0..m {
        out.push(jv[i] + bu[i] - f[i]);
    }
    out.extend_from_slice(&btr);
    if out.iter().any(|x| !x.is_finite()) {
        return Err(MixedError::NonFinite("mixed residual"));
    }
    Ok(out)
}

/// Jacobian of the delta-smoothed residual: [[A(r), B], [B^T, 0]].
/// A is symmetric; the off-diagonal blocks are the constant B and B^T.
pub fn assemble_mixed_jacobian(
    prob: &MixedProblem,
    r_m: &DiscreteFunction,
    _u_n: &DiscreteFunction,
    delta: f64,
) -> Result<DMat, MixedError> {
    let b = assemble_b(prob)?;
    let (_, jac) = jv_action_jacobian(&prob.test, &prob.vnorm, &prob.quad, r_m.coeffs(), delta, true);
    let a = jac.expect("jacobian requested");
    Ok(pack_saddle(&a, &b))
}

pub(crate) fn pack_saddle(a: &DMat, b: &DMat) -> DMat {
    let m = b.rows();
    let n = b.cols();
    DMat::from_fn(m + n, m + n, |i, j| {
        if i < m && j < m {
            a.get(i, j)
        } else if i < m {
            b.get(i, j - m)
        } else if j < m {
            b.get(j, i - m)
        } else {
            0.0
        }
    })
}

/// Invert the duality map on V_m: find r with <J_V(r), v_i> = g_i for all i.
/// Newton with delta-continuation; the rho = 2 Gram solve seeds the iteration.
pub fn invert_duality_map(
    space: &Arc<FESpace>,
    vnorm: &NormSpec,
    quad: &QuadratureRule,
    g: &[f64],
) -> Result<DiscreteFunction, MixedError> {
    let m = space.dim();
    assert_eq!(g.len(), m);
    let gscale = linalg::norm2(g);
    if gscale == 0.0 {
        return Ok(DiscreteFunction::zero(Arc::clone(space)));
    }
    // Hilbert-case Gram matrix (rho = 2, exact) as preconditioner/seed
    let spec2 = vnorm.with_rho(2.0);
    let (_, gram) = jv_action_jacobian(space, &spec2, quad, &vec![1.0; m], 0.0, true);
    let gram = gram.unwrap();
    let mut r = linalg::solve_lu(gram, g.to_vec())?;
    let rho = vnorm.rho();
    if (rho - 2.0).abs() < 1e-14 {
        return Ok(DiscreteFunction::new(Arc::clone(space), r).unwrap());
    }

    // scale-aware smoothing schedule
    let rf0 = DiscreteFunction::new(Arc::clone(space), r.clone()).unwrap();
    let rnorm0 = vnorm.norm(&rf0, quad).max(1e-14);
    let mut deltas = Vec::new();
    let mut d = 1e-2 * rnorm0;
    while d > 1e-12 * rnorm0 {
        deltas.push(d);
        d *= 0.1;
    }
    deltas.push(0.0);

    for &delta in &deltas {
        for _ in 0..60 {
            let (act, jac) =
                jv_action_jacobian(space, vnorm, quad, &r, delta, true);
            let res: Vec<f64> = act.iter().zip(g).map(|(a, b)| a - b).collect();
            let rn = linalg::norm2(&res);
            if rn <= 1e-13 * gscale {
                break;
            }
            let step = linalg::solve_lu(jac.unwrap(), res.iter().map(|x| -x).collect())?;
            // backtracking on the residual norm
            let mut alpha = 1.0;
            let mut ok = false;
            while alpha >= 1e-12 {
                let trial: Vec<f64> = r.iter().zip(&step).map(|(a, s)| a + alpha * s).collect();
                let (act_t, _) = jv_action_jacobian(space, vnorm, quad, &trial, delta, false);
                let rn_t = linalg::norm2(
                    &act_t.iter().zip(g).map(|(a, b)| a - b).collect::<Vec<_>>(),
                );
                if rn_t <= (1.0 - 1e-4 * alpha) * rn {
                    r = trial;
                    ok = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !ok {
                break;
            }
        }
    }
    let (act, _) = jv_action_jacobian(space, vnorm, quad, &r, 0.0, false);
    let res = linalg::norm2(&act.iter().zip(g).map(|(a, b)| a - b).collect::<Vec<_>>());
    if res > 1e-8 * gscale {
        return Err(MixedError::DualMapInversion { residual: res / gscale });
    }
    Ok(DiscreteFunction::new(Arc::clone(space), r).unwrap())
}

/// Discrete dual norm of a functional given by its action g on the V_m
/// basis: sup over V_m of <g, v>/||v||_V, computed as ||J^{-1} g||_V.
pub fn discrete_dual_norm(prob: &MixedProblem, g: &[f64]) -> Result<f64, MixedError> {
    let r = invert_duality_map(&prob.test, &prob.vnorm, &prob.quad, g)?;
    Ok(prob.vnorm.norm(&r, &prob.quad))
}

/// A-posteriori error bound (1/gamma_B) osc + (C_Pi/gamma_B) ||r_m||_V.
pub fn aposteriori_bound(
    prob: &MixedProblem,
    r_m: &DiscreteFunction,
    gamma_b: f64,
    c_pi: f64,
    osc: f64,
) -> f64 {
    assert!(gamma_b > 0.0 && c_pi > 0.0 && osc >= 0.0);
    osc / gamma_b + c_pi / gamma_b * prob.vnorm.norm(r_m, &prob.quad)
}

/// Discrete inf-sup diagnostic: a certified upper bound on
/// inf over the U_n unit sphere of sup over V_m of b(w,v)/(||w||_U ||v||_V).
/// The inner sup is the discrete dual norm of w -> b(w, .); the outer inf is
/// sampled (coordinate directions first, then random) and polished by a
/// derivative-free local descent.
pub fn discrete_infsup(prob: &MixedProblem, samples: usize, seed: u64) -> Result<f64, MixedError> {
    use rand::SeedableRng;
    let n = prob.trial.dim();
    let b = assemble_b(prob)?;
    let ratio = |w: &[f64]| -> Result<f64, MixedError> {
        let wf = DiscreteFunction::new(Arc::clone(&prob.trial), w.to_vec()).unwrap();
        let un = prob.unorm.norm(&wf, &prob.quad);
        if un < 1e-13 {
            return Ok(f64::INFINITY);
        }
        let g = b.matvec(w);
        Ok(discrete_dual_norm(prob, &g)? / un)
    };

    let mut best = f64::INFINITY;
    let mut best_w = vec![0.0; n];
    // coordinate directions (exact for one-dimensional trial spaces)
    for j in 0..n {
        let mut w = vec![0.0; n];
        w[j] = 1.0;
        let v = ratio(&w)?;
        if v < best {
            best = v;
            best_w = w;
        }
    }
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples.max(100) {
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0f64..1.0)).collect();
        if w.iter().all(|x| x.abs() < 1e-3) {
            continue;
        }
        let v = ratio(&w)?;
        if v < best {
            best = v;
            best_w = w;
        }
    }
    // local descent polish (scale-invariant objective)
    if n > 1 {
        let obj = |w: &[f64]| ratio(w).unwrap_or(f64::INFINITY);
        let (w, v) = crate::oracle::nelder_mead(&obj, &best_w, 0.3, 200, 1e-10);
        if v < best {
            best = v;
            best_w = w;
        }
        let (_, v) = crate::oracle::nelder_mead(&obj, &best_w, 0.05, 200, 1e-12);
        if v < best {
            best = v;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Bc, Mesh1D};
    use crate::norm::basis_function;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn laplace_toy(n: usize, k_trial: usize, k_test: usize, rho: f64) -> MixedProblem {
        let mesh = Mesh1D::uniform(0.0, 1.0, n).unwrap();
        let trial = FESpace::continuous_pk(mesh.clone(), k_trial, Bc::ZeroBoth).unwrap();
        let test = FESpace::continuous_pk(mesh, k_test, Bc::ZeroBoth).unwrap();
        MixedProblem::new(
            trial,
            test,
            BilinearForm::GradGrad,
            RhsSpec::volume_fn(|x| x.exp()),
            NormSpec::lp_derivative(rho),
            NormSpec::lp_derivative(2.0),
            QuadratureRule::default(),
        )
        .unwrap()
    }

    #[test]
    fn dim_requirement_enforced() {
        let mesh = Mesh1D::uniform(0.0, 1.0, 4).unwrap();
        let trial = FESpace::continuous_pk(mesh.clone(), 2, Bc::ZeroBoth).unwrap();
        let test = FESpace::continuous_pk(mesh, 1, Bc::ZeroBoth).unwrap();
        assert!(matches!(
            MixedProblem::new(
                trial,
                test,
                BilinearForm::GradGrad,
                RhsSpec::zero(),
                NormSpec::lp_derivative(2.0),
                NormSpec::lp_derivative(2.0),
                QuadratureRule::default(),
            ),
            Err(MixedError::DimMismatch { .. })
        ));
    }

    #[test]
    fn zero_data_zero_iterate_gives_zero_residual() {
        let mut prob = laplace_toy(3, 1, 2, 3.0);
        prob.rhs = RhsSpec::zero();
        let r = DiscreteFunction::zero(prob.test.clone());
        let u = DiscreteFunction::zero(prob.trial.clone());
        let res = assemble_mixed_residual(&prob, &r, &u).unwrap();
        assert!(res.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn hilbert_case_solved_by_one_linear_solve() {
        // rho = 2: the system is linear; assemble and solve directly,
        // then the residual at the solution is ~ machine precision
        let prob = laplace_toy(4, 1, 2, 2.0);
        let b = assemble_b(&prob).unwrap();
        let f = assemble_rhs(&prob).unwrap();
        let r0 = DiscreteFunction::zero(prob.test.clone());
        let u0 = DiscreteFunction::zero(prob.trial.clone());
        let jac = assemble_mixed_jacobian(&prob, &r0, &u0, 0.0).unwrap();
        let m = b.rows();
        let n = b.cols();
        let mut rhs = f.clone();
        rhs.extend(std::iter::repeat(0.0).take(n));
        let z = linalg::solve_lu(jac, rhs).unwrap();
        let r = DiscreteFunction::new(prob.test.clone(), z[..m].to_vec()).unwrap();
        let u = DiscreteFunction::new(prob.trial.clone(), z[m..].to_vec()).unwrap();
        let res = assemble_mixed_residual(&prob, &r, &u).unwrap();
        let scale = 1.0 + linalg::norm2(&f);
        assert!(linalg::norm2(&res) <= 1e-12 * scale, "residual {}", linalg::norm2(&res));
    }

    #[test]
    fn residual_matches_independent_recomputation() {
        // double-assembly oracle: recompute the block residual entry by
        // entry with a fresh quadrature loop over shuffled element order
        let prob = laplace_toy(4, 1, 2, 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let r = DiscreteFunction::new(
            prob.test.clone(),
            (0..prob.test.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let u = DiscreteFunction::new(
            prob.trial.clone(),
            (0..prob.trial.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let res = assemble_mixed_residual(&prob, &r, &u).unwrap();

        // independent path: scalar quadrature per entry at the same rule
        // order, elements visited in a shuffled order
        let mesh = prob.test.mesh().clone();
        let quad = QuadratureRule::gauss(prob.quad.points());
        let mut order: Vec<usize> = (0..mesh.n_elements()).collect();
        order.reverse();
        order.swap(0, 1);
        let m = prob.test.dim();
        // exact J_V action: ||r'||_q^{2-q} int |r'|^{q-2} r' v_i'
        let q = 3.0;
        let mut s_pow = 0.0;
        for &e in &order {
            let (a, b) = mesh.element(e);
            s_pow += quad.integrate_element(e, a, b, &mut |x| r.eval_on(e, x).1.abs().powf(q));
        }
        let s = s_pow.powf(1.0 / q);
        let f = assemble_rhs(&prob).unwrap();
        for i in 0..m {
            let vi = basis_function(&prob.test, i);
            let mut jterm = 0.0;
            let mut bterm = 0.0;
            for &e in &order {
                let (a, b) = mesh.element(e);
                jterm += quad.integrate_element(e, a, b, &mut |x| {
                    let rd = r.eval_on(e, x).1;
                    rd.abs().powf(q - 2.0) * rd * vi.eval_on(e, x).1
                });
                bterm += quad.integrate_element(e, a, b, &mut |x| {
                    u.eval_on(e, x).1 * vi.eval_on(e, x).1
                });
            }
            let want = s.powf(2.0 - q) * jterm + bterm - f[i];
            assert_abs_diff_eq!(res[i], want, epsilon = 1e-9);
        }
        for j in 0..prob.trial.dim() {
            let wj = basis_function(&prob.trial, j);
            let mut bterm = 0.0;
            for &e in &order {
                let (a, b) = mesh.element(e);
                bterm += quad.integrate_element(e, a, b, &mut |x| {
                    wj.eval_on(e, x).1 * r.eval_on(e, x).1
                });
            }
            assert_abs_diff_eq!(res[m + j], bterm, epsilon = 1e-10);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let prob = laplace_toy(3, 1, 2, 3.0);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let delta = 1e-3;
        let r: Vec<f64> = (0..prob.test.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u: Vec<f64> = (0..prob.trial.dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let rf = DiscreteFunction::new(prob.test.clone(), r.clone()).unwrap();
        let uf = DiscreteFunction::new(prob.trial.clone(), u.clone()).unwrap();
        let jac = assemble_mixed_jacobian(&prob, &rf, &uf, delta).unwrap();
        let m = prob.test.dim();
        let n = prob.trial.dim();
        let h = 1e-6;
        let res_at = |z: &[f64]| {
            let rf = DiscreteFunction::new(prob.test.clone(), z[..m].to_vec()).unwrap();
            let uf = DiscreteFunction::new(prob.trial.clone(), z[m..].to_vec()).unwrap();
            assemble_mixed_residual_smoothed(&prob, &rf, &uf, delta).unwrap()
        };
        let mut z: Vec<f64> = r.clone();
        z.extend_from_slice(&u);
        let scale = linalg::norm2(&res_at(&z)) + 1.0;
        for col in 0..m + n {
            let mut zp = z.clone();
            let mut zm = z.clone();
            zp[col] += h;
            zm[col] -= h;
            let fp = res_at(&zp);
            let fm = res_at(&zm);
            for row in 0..m + n {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                assert!(
                    (jac.get(row, col) - fd).abs() <= 2e-4 * scale,
                    "J[{row},{col}] = {} vs FD {}",
                    jac.get(row, col),
                    fd
                );
            }
        }
    }

    #[test]
    fn smoothed_jacobian_finite_at_zero() {
        let prob = laplace_toy(3, 1, 2, 3.0);
        let r = DiscreteFunction::zero(prob.test.clone());
        let u = DiscreteFunction::zero(prob.trial.clone());
        let jac = assemble_mixed_jacobian(&prob, &r, &u, 1e-2).unwrap();
        assert!(jac.data().iter().all(|x| x.is_finite()));
        // the J_V block must be nonsingular under smoothing
        let m = prob.test.dim();
        let a = DMat::from_fn(m, m, |i, j| jac.get(i, j));
        assert!(linalg::rcond(&a).unwrap() > 1e-10);
    }

    #[test]
    fn dual_norm_zero_and_hilbert_formula() {
        let prob = laplace_toy(3, 1, 2, 2.0);
        let m = prob.test.dim();
        assert_eq!(discrete_dual_norm(&prob, &vec![0.0; m]).unwrap(), 0.0);
        // rho = 2: ||g||_* = sqrt(g^T G^{-1} g) with G the derivative Gram
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let got = discrete_dual_norm(&prob, &g).unwrap();
        let (_, gram) = jv_action_jacobian(
            &prob.test,
            &prob.vnorm,
            &prob.quad,
            &vec![1.0; m],
            0.0,
            true,
        );
        let x = linalg::solve_lu(gram.unwrap(), g.clone()).unwrap();
        let want = linalg::dot(&g, &x).sqrt();
        assert_abs_diff_eq!(got, want, epsilon = 1e-12);
    }

    #[test]
    fn dual_norm_matches_sphere_scan_in_2d() {
        // dim V_m = 2, rho = 3: dense scan of <g,v>/||v|| over the
        // coefficient circle as the oracle
        let mesh = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        let test = FESpace::continuous_pk(mesh.clone(), 1, Bc::ZeroRight).unwrap();
        assert_eq!(test.dim(), 2);
        let trial = FESpace::continuous_pk(mesh, 1, Bc::ZeroBoth).unwrap();
        let prob = MixedProblem::new(
            trial,
            test,
            BilinearForm::GradGrad,
            RhsSpec::zero(),
            NormSpec::lp_derivative(3.0),
            NormSpec::lp_derivative(2.0),
            QuadratureRule::default(),
        )
        .unwrap();
        let g = vec![0.7, -0.3];
        let got = discrete_dual_norm(&prob, &g).unwrap();
        let mut best: f64 = 0.0;
        let steps = 20000;
        for k in 0..steps {
            let th = 2.0 * std::f64::consts::PI * k as f64 / steps as f64;
            let c = [th.cos(), th.sin()];
            let v = DiscreteFunction::new(prob.test.clone(), c.to_vec()).unwrap();
            let nv = prob.vnorm.norm(&v, &prob.quad);
            let val = (g[0] * c[0] + g[1] * c[1]) / nv;
            best = best.max(val);
        }
        assert!((got - best).abs() < 1e-5 * best.max(1.0), "got {got}, scan {best}");
    }

    #[test]
    fn infsup_identity_pairing_is_one() {
        // U_n = V_m with b the Hilbert inner product of V: ratio is 1 for
        // every w, so the inf-sup equals 1
        let mesh = Mesh1D::uniform(0.0, 1.0, 3).unwrap();
        let space = FESpace::continuous_pk(mesh, 1, Bc::ZeroBoth).unwrap();
        let prob = MixedProblem::new(
            space.clone(),
            space,
            BilinearForm::GradGrad,
            RhsSpec::zero(),
            NormSpec::lp_derivative(2.0),
            NormSpec::lp_derivative(2.0),
            QuadratureRule::default(),
        )
        .unwrap();
        let g = discrete_infsup(&prob, 150, 42).unwrap();
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn point_source_on_flagged_discontinuity_rejected() {
        use crate::mesh::CustomBasisFn;
        let mesh = Mesh1D::uniform(0.0, 1.0, 2).unwrap();
        let f1 = CustomBasisFn::new(|x| if x < 0.5 { x } else { 0.0 }, |x| if x < 0.5 { 1.0 } else { 0.0 }, (0.0, 0.5))
            .with_jump(0.5);
        let test = FESpace::custom(mesh.clone(), vec![f1]).unwrap();
        let trial = FESpace::p0(Mesh1D::new(vec![0.0, 1.0]).unwrap());
        let mut rhs = RhsSpec::zero();
        rhs.points.push((0.5, 1.0));
        let err = MixedProblem::new(
            trial,
            test,
            BilinearForm::GradGrad,
            rhs,
            NormSpec::lp_derivative(2.0),
            NormSpec::lp_values(2.0),
            QuadratureRule::default(),
        );
        assert!(matches!(err, Err(MixedError::PointSourceOnDiscontinuity(_))));
    }
}
