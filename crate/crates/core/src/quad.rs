//! Gauss-Legendre quadrature with optional geometric grading toward an
//! element endpoint, for integrands with algebraic endpoint singularities
//! (x^{alpha-1} data terms, x^{-1/3} derivatives of the graded basis).

use crate::mesh::Mesh1D;
use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("integrand returned a non-finite value on element {element} (x = {x})")]
    NonFiniteSample { element: usize, x: f64 },
    #[error("invalid quadrature configuration: {0}")]
    Config(String),
}

/// Gauss-Legendre nodes/weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn legendre_and_deriv(n: usize, x: f64) -> (f64, f64) {
    // three-term recurrence for P_n and its derivative
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

impl GaussRule {
    pub fn new(q: usize) -> Self {
        assert!(q >= 1, "need at least one quadrature point");
        let cache: &'static Mutex<BTreeMap<usize, GaussRule>> = {
            static CACHE: OnceLock<Mutex<BTreeMap<usize, GaussRule>>> = OnceLock::new();
            CACHE.get_or_init(|| Mutex::new(BTreeMap::new()))
        };
        if let Some(r) = cache.lock().unwrap().get(&q) {
            return r.clone();
        }
        let mut nodes = vec![0.0; q];
        let mut weights = vec![0.0; q];
        for i in 0..q.div_ceil(2) {
            // Chebyshev-based initial guess, then Newton
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (p, dp) = legendre_and_deriv(q, x);
                let dx = p / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_and_deriv(q, x);
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[q - 1 - i] = x;
            weights[i] = w;
            weights[q - 1 - i] = w;
        }
        let rule = GaussRule { nodes, weights };
        cache.lock().unwrap().insert(q, rule.clone());
        rule
    }

    /// Integrate f over [a, b].
    pub fn integrate(&self, a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }
}

/// Which endpoint of an element an integrand is singular (or steep) at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// Geometric subdivision of an element toward one endpoint. The innermost
/// cell is integrated under the substitution x = a + w t^m (m = `power`),
/// which regularizes integrable algebraic singularities at the endpoint.
/// The substitution resolves the singular endpoint exactly when it sits at
/// x = 0 (all the singular data terms here do); elsewhere the resolution is
/// limited by f64 spacing near the endpoint, which is fine for bounded
/// steep integrands.
#[derive(Debug, Clone, Copy)]
pub struct GradedSpec {
    pub levels: u32,
    pub toward: Side,
    pub power: u32,
}

impl GradedSpec {
    pub fn new(levels: u32, toward: Side) -> Self {
        GradedSpec {
            levels,
            toward,
            power: 16,
        }
    }

    pub fn with_power(mut self, power: u32) -> Self {
        self.power = power.max(1);
        self
    }

    /// Power exponent that regularizes |x|^s-type integrands: after
    /// x = w t^m the integrand scales like t^{m(s+1)-1}; we aim for
    /// exponent >= 5.
    pub fn power_for_singularity(mut self, s: f64) -> Self {
        if s > -1.0 {
            let m = (6.0 / (s + 1.0)).ceil().max(2.0);
            self.power = m as u32;
        }
        self
    }
}

/// Per-element Gauss-Legendre rule of order `points`, with optional graded
/// subdivision on flagged elements. Integrates polynomials of degree
/// <= 2*points - 1 exactly on each plain element.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    points: usize,
    graded: BTreeMap<usize, GradedSpec>,
}

pub const DEFAULT_QUAD_POINTS: usize = 10;
pub const DEFAULT_GRADED_LEVELS: u32 = 12;

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::gauss(DEFAULT_QUAD_POINTS)
    }
}

impl QuadratureRule {
    pub fn gauss(points: usize) -> Self {
        QuadratureRule {
            points,
            graded: BTreeMap::new(),
        }
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn with_graded(mut self, element: usize, spec: GradedSpec) -> Self {
        self.graded.insert(element, spec);
        self
    }

    pub fn graded_spec(&self, element: usize) -> Option<&GradedSpec> {
        self.graded.get(&element)
    }

    /// Integrate f over element `element` = [a, b] of some mesh.
    pub fn integrate_element(&self, element: usize, a: f64, b: f64, f: &mut impl FnMut(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        self.for_each_point(element, a, b, &mut |x, w| acc += w * f(x));
        acc
    }

    /// Visit every quadrature point (x, weight) of the element's scheme.
    /// Assembly loops use this to evaluate all basis functions per point.
    pub fn for_each_point(&self, element: usize, a: f64, b: f64, f: &mut impl FnMut(f64, f64)) {
        let rule = GaussRule::new(self.points);
        match self.graded.get(&element) {
            None => visit_plain(&rule, a, b, f),
            Some(spec) => visit_graded(&rule, a, b, spec, f),
        }
    }

    /// Integrate f over the whole mesh.
    pub fn integrate_mesh(&self, mesh: &Mesh1D, f: &mut impl FnMut(f64) -> f64) -> f64 {
        let mut acc = 0.0;
        for j in 0..mesh.n_elements() {
            let (a, b) = mesh.element(j);
            acc += self.integrate_element(j, a, b, f);
        }
        acc
    }
}

fn visit_plain(rule: &GaussRule, a: f64, b: f64, f: &mut impl FnMut(f64, f64)) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    for (x, w) in rule.nodes.iter().zip(&rule.weights) {
        f(mid + half * x, w * half);
    }
}

fn visit_graded(rule: &GaussRule, a: f64, b: f64, spec: &GradedSpec, f: &mut impl FnMut(f64, f64)) {
    let len = b - a;
    let mut outer = 1.0f64; // relative offset of the current cell's outer edge
    for _ in 0..spec.levels {
        let inner = outer * 0.5;
        let (ca, cb) = match spec.toward {
            Side::Left => (a + inner * len, a + outer * len),
            Side::Right => (b - outer * len, b - inner * len),
        };
        visit_plain(rule, ca, cb, f);
        outer = inner;
    }
    // innermost cell with power substitution toward the singular endpoint:
    // x = endpoint +- w t^m, weight w m t^{m-1}
    let w = outer * len;
    let m = spec.power as f64;
    let panels = 6;
    for k in 0..panels {
        let ta = k as f64 / panels as f64;
        let tb = (k + 1) as f64 / panels as f64;
        visit_plain(rule, ta, tb, &mut |t, wt| {
            let x = match spec.toward {
                Side::Left => a + w * t.powf(m),
                Side::Right => b - w * t.powf(m),
            };
            f(x, wt * w * m * t.powf(m - 1.0));
        });
    }
}

/// L^p norm of an integrand over a mesh: (sum over elements of w |f|^p)^{1/p}.
/// Non-finite samples are reported with the offending element.
pub fn lp_norm(
    f: &mut impl FnMut(f64) -> f64,
    mesh: &Mesh1D,
    p: f64,
    quad: &QuadratureRule,
) -> Result<f64, QuadError> {
    assert!(p >= 1.0, "lp_norm requires p >= 1");
    let mut total = 0.0;
    for j in 0..mesh.n_elements() {
        let (a, b) = mesh.element(j);
        let mut bad: Option<f64> = None;
        let contrib = quad.integrate_element(j, a, b, &mut |x| {
            let v = f(x);
            if !v.is_finite() && bad.is_none() {
                bad = Some(x);
            }
            v.abs().powf(p)
        });
        if let Some(x) = bad {
            return Err(QuadError::NonFiniteSample { element: j, x });
        }
        if !contrib.is_finite() {
            return Err(QuadError::NonFiniteSample { element: j, x: a });
        }
        total += contrib;
    }
    Ok(total.powf(1.0 / p))
}

/// Exact integral of x^{alpha-1} * P(x) over [a, b] (0 <= a < b) where P is
/// given through its derivatives at the endpoints, via repeated integration
/// by parts:
///   int x^{alpha-1} P = sum_j (-1)^j [P^(j)(x) x^{alpha+j}]_a^b / prod_{i<=j}(alpha+i)
/// `derivs_at(x, j)` must return P^(j)(x); `max_deg` bounds the degree of P.
pub fn integrate_power_times_poly(
    alpha: f64,
    a: f64,
    b: f64,
    max_deg: usize,
    mut derivs_at: impl FnMut(f64, usize) -> f64,
) -> f64 {
    assert!(alpha > 0.0 && a >= 0.0 && b > a);
    let mut acc = 0.0;
    let mut denom = 1.0;
    let mut sign = 1.0;
    for j in 0..=max_deg {
        denom *= alpha + j as f64;
        let pow = alpha + j as f64;
        let term_b = derivs_at(b, j) * b.powf(pow);
        let term_a = if a == 0.0 { 0.0 } else { derivs_at(a, j) * a.powf(pow) };
        acc += sign * (term_b - term_a) / denom;
        sign = -sign;
    }
    acc
}
