//! Banach norms on discrete spaces and the associated duality pairings.
//!
//! Three norm kinds cover the applications: L^rho of values, L^rho of the
//! derivative (the W^{1,rho}_0 seminorm used as a norm under Dirichlet
//! conditions), and the graph norm ||w||_rho^2 + ||(beta w)'||_rho^2 of the
//! advective derivative. The duality map of each is a normalized rho-power
//! density; everything is evaluated at the quadrature level so the defining
//! identities hold to rounding.

use crate::func::Coefficient;
use crate::lp::phi_delta;
use crate::mesh::{DiscreteFunction, FESpace, Mesh1D};
use crate::quad::QuadratureRule;
use std::sync::Arc;

/// Which Banach norm a space carries; determines the duality map.
#[derive(Debug, Clone)]
pub enum NormSpec {
    /// (int |w|^rho)^{1/rho}
    LpValues { rho: f64 },
    /// (int |w'|^rho)^{1/rho}
    LpDerivative { rho: f64 },
    /// sqrt( ||w||_v^2 + ||(beta w)'||_d^2 )
    Graph {
        rho_value: f64,
        rho_div: f64,
        beta: Coefficient,
    },
}

impl NormSpec {
    pub fn lp_values(rho: f64) -> Self {
        assert!(rho > 1.0, "reflexive smooth setting needs rho > 1");
        NormSpec::LpValues { rho }
    }

    pub fn lp_derivative(rho: f64) -> Self {
        assert!(rho > 1.0, "reflexive smooth setting needs rho > 1");
        NormSpec::LpDerivative { rho }
    }

    pub fn graph(rho: f64, beta: Coefficient) -> Self {
        assert!(rho > 1.0, "reflexive smooth setting needs rho > 1");
        NormSpec::Graph {
            rho_value: rho,
            rho_div: rho,
            beta,
        }
    }

    /// Primary exponent (used by the p-continuation path).
    pub fn rho(&self) -> f64 {
        match self {
            NormSpec::LpValues { rho } | NormSpec::LpDerivative { rho } => *rho,
            NormSpec::Graph { rho_value, .. } => *rho_value,
        }
    }

    /// Same norm kind with a replaced exponent (continuation stages).
    pub fn with_rho(&self, rho: f64) -> Self {
        match self {
            NormSpec::LpValues { .. } => NormSpec::LpValues { rho },
            NormSpec::LpDerivative { .. } => NormSpec::LpDerivative { rho },
            NormSpec::Graph { beta, .. } => NormSpec::Graph {
                rho_value: rho,
                rho_div: rho,
                beta: beta.clone(),
            },
        }
    }

    /// Norm of a discrete function.
    pub fn norm(&self, u: &DiscreteFunction, quad: &QuadratureRule) -> f64 {
        let mesh = u.space().mesh();
        match self {
            NormSpec::LpValues { rho } => {
                lp_norm_of(mesh, quad, *rho, |e, x, f: &DiscreteFunction| f.eval_on(e, x).0, u)
            }
            NormSpec::LpDerivative { rho } => {
                lp_norm_of(mesh, quad, *rho, |e, x, f: &DiscreteFunction| f.eval_on(e, x).1, u)
            }
            NormSpec::Graph {
                rho_value,
                rho_div,
                beta,
            } => {
                let nv = lp_norm_of(mesh, quad, *rho_value, |e, x, f: &DiscreteFunction| f.eval_on(e, x).0, u);
                let nd = lp_norm_of(mesh, quad, *rho_div, |e, x, f: &DiscreteFunction| {
                    let (v, d) = f.eval_on(e, x);
                    beta.deriv(x) * v + beta.value(x) * d
                }, u);
                (nv * nv + nd * nd).sqrt()
            }
        }
    }
}

fn lp_norm_of(
    mesh: &Mesh1D,
    quad: &QuadratureRule,
    rho: f64,
    eval: impl Fn(usize, f64, &DiscreteFunction) -> f64,
    u: &DiscreteFunction,
) -> f64 {
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element(e);
        total += quad.integrate_element(e, a, b, &mut |x| eval(e, x, u).abs().powf(rho));
    }
    total.powf(1.0 / rho)
}

/// < J_V(r), v > for the given norm: the normalized rho-power pairing.
/// Returns 0 for r = 0 (the duality map fixes the origin).
pub fn duality_pairing(
    vnorm: &NormSpec,
    r: &DiscreteFunction,
    v: &DiscreteFunction,
    quad: &QuadratureRule,
) -> f64 {
    match vnorm {
        NormSpec::LpValues { rho } => {
            pairing_component(*rho, 0.0, quad, r, v, |e, x, f| f.eval_on(e, x).0)
        }
        NormSpec::LpDerivative { rho } => {
            pairing_component(*rho, 0.0, quad, r, v, |e, x, f| f.eval_on(e, x).1)
        }
        NormSpec::Graph {
            rho_value,
            rho_div,
            beta,
        } => {
            let value_part = pairing_component(*rho_value, 0.0, quad, r, v, |e, x, f| f.eval_on(e, x).0);
            let b2 = beta.clone();
            let div_part = pairing_component(*rho_div, 0.0, quad, r, v, move |e, x, f| {
                let (val, der) = f.eval_on(e, x);
                b2.deriv(x) * val + b2.value(x) * der
            });
            value_part + div_part
        }
    }
}

/// One normalized component ||T r||^{2-rho} int |T r|^{rho-2} (T r)(T v),
/// with the |t| kink smoothed as sqrt(t^2 + delta^2). Evaluation is
/// sup-normalized so large exponents (q = 101) stay inside f64 range.
fn pairing_component(
    rho: f64,
    delta: f64,
    quad: &QuadratureRule,
    r: &DiscreteFunction,
    v: &DiscreteFunction,
    trace: impl Fn(usize, f64, &DiscreteFunction) -> f64,
) -> f64 {
    let mesh = r.space().mesh();
    // pass 1: scale = max |T r| over quadrature points (plus delta)
    let mut scale = delta.abs();
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element(e);
        quad.integrate_element(e, a, b, &mut |x| {
            scale = scale.max(trace(e, x, r).abs());
            0.0
        });
    }
    if scale == 0.0 {
        return 0.0;
    }
    let dh = delta / scale;
    // pass 2: s_hat^rho and the pairing integral in scaled units
    let mut s_pow = 0.0;
    let mut m = 0.0;
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element(e);
        s_pow += quad.integrate_element(e, a, b, &mut |x| {
            let t = trace(e, x, r) / scale;
            phi_delta(t, dh).powf(rho)
        });
        m += quad.integrate_element(e, a, b, &mut |x| {
            let t = trace(e, x, r) / scale;
            let ph = phi_delta(t, dh);
            let dens = if ph == 0.0 { 0.0 } else { ph.powf(rho - 2.0) * t };
            dens * trace(e, x, v)
        });
    }
    let s_hat = s_pow.powf(1.0 / rho);
    if s_hat == 0.0 {
        return 0.0;
    }
    // < J r, v > = s^{2-rho} * scale^{rho-1} * m = scale * s_hat^{2-rho} * m
    scale * s_hat.powf(2.0 - rho) * m
}

/// Norm of a closed-form function pair (value, derivative) under a NormSpec,
/// used for exact-solution error measures.
pub fn norm_of_fn(
    spec: &NormSpec,
    mesh: &Mesh1D,
    quad: &QuadratureRule,
    value: impl Fn(f64) -> f64,
    deriv: impl Fn(f64) -> f64,
) -> f64 {
    match spec {
        NormSpec::LpValues { rho } => raw_lp(mesh, quad, *rho, |x| value(x)),
        NormSpec::LpDerivative { rho } => raw_lp(mesh, quad, *rho, |x| deriv(x)),
        NormSpec::Graph {
            rho_value,
            rho_div,
            beta,
        } => {
            let nv = raw_lp(mesh, quad, *rho_value, |x| value(x));
            let nd = raw_lp(mesh, quad, *rho_div, |x| beta.deriv(x) * value(x) + beta.value(x) * deriv(x));
            (nv * nv + nd * nd).sqrt()
        }
    }
}

fn raw_lp(mesh: &Mesh1D, quad: &QuadratureRule, rho: f64, f: impl Fn(f64) -> f64) -> f64 {
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let (a, b) = mesh.element(e);
        total += quad.integrate_element(e, a, b, &mut |x| f(x).abs().powf(rho));
    }
    total.powf(1.0 / rho)
}

/// Helper: a DiscreteFunction representing a single basis coefficient.
pub fn basis_function(space: &Arc<FESpace>, i: usize) -> DiscreteFunction {
    let mut c = vec![0.0; space.dim()];
    c[i] = 1.0;
    DiscreteFunction::new(Arc::clone(space), c).unwrap()
}
