//! 1-D meshes, finite element spaces (continuous P^k, discontinuous P^0,
//! and explicit custom bases) and coefficient-vector functions over them.

use crate::func::Coefficient;
use crate::linalg::{self, DMat};
use crate::quad::QuadratureRule;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("mesh needs at least 2 strictly increasing finite nodes")]
    BadNodes,
    #[error("uniform mesh requires b > a and n_elem >= 1 (got a={a}, b={b}, n={n})")]
    BadUniform { a: f64, b: f64, n: usize },
    #[error("continuous P^k space requires degree >= 1 (got {0})")]
    BadDegree(usize),
    #[error("custom basis is linearly dependent or degenerate (Gram condition {cond:.2e})")]
    DependentBasis { cond: f64 },
    #[error("custom basis function {0} vanishes on its declared support")]
    VanishingBasis(usize),
    #[error("coefficient vector has length {got}, space has {want} DOFs")]
    CoeffLength { got: usize, want: usize },
    #[error("advection coefficient is singular without the two-inflow structure (beta ~ 0 at x = {0})")]
    SingularCoefficient(f64),
    #[error("interpolation is not available for this basis family")]
    NoInterpolation,
}

/// Ordered breakpoints of an interval partition.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
}

impl Mesh1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self, MeshError> {
        if nodes.len() < 2
            || nodes.iter().any(|x| !x.is_finite())
            || nodes.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(MeshError::BadNodes);
        }
        Ok(Mesh1D { nodes })
    }

    /// n_elem + 1 equally spaced nodes on [a, b].
    pub fn uniform(a: f64, b: f64, n_elem: usize) -> Result<Self, MeshError> {
        if !(b > a) || n_elem < 1 || !a.is_finite() || !b.is_finite() {
            return Err(MeshError::BadUniform { a, b, n: n_elem });
        }
        let nodes = (0..=n_elem)
            .map(|i| a + (b - a) * i as f64 / n_elem as f64)
            .collect();
        Ok(Mesh1D { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn a(&self) -> f64 {
        self.nodes[0]
    }

    pub fn b(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn element(&self, j: usize) -> (f64, f64) {
        (self.nodes[j], self.nodes[j + 1])
    }

    pub fn h(&self, j: usize) -> f64 {
        self.nodes[j + 1] - self.nodes[j]
    }

    pub fn h_max(&self) -> f64 {
        (0..self.n_elements()).map(|j| self.h(j)).fold(0.0, f64::max)
    }

    /// Element containing x (clamped to the mesh interval).
    pub fn find_element(&self, x: f64) -> usize {
        if x <= self.nodes[0] {
            return 0;
        }
        let n = self.n_elements();
        if x >= self.nodes[n] {
            return n - 1;
        }
        // partition_point: first index with node > x, element is that - 1
        let idx = self.nodes.partition_point(|&v| v <= x);
        (idx - 1).min(n - 1)
    }

    /// New mesh with extra breakpoints inserted (values outside the interval
    /// or duplicating existing nodes are ignored).
    pub fn insert_points(&self, points: &[f64]) -> Mesh1D {
        let mut nodes = self.nodes.clone();
        for &p in points {
            if p > self.a() && p < self.b() && nodes.iter().all(|&n| (n - p).abs() > 1e-14) {
                nodes.push(p);
            }
        }
        nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Mesh1D { nodes }
    }
}

/// Spec of the uniform-mesh constructor as a free function.
pub fn make_uniform_mesh(a: f64, b: f64, n_elem: usize) -> Result<Mesh1D, MeshError> {
    Mesh1D::uniform(a, b, n_elem)
}

/// Reference Lagrange basis of degree k on [0,1] at Chebyshev-Lobatto nodes,
/// stored as monomial coefficients (stable for the degrees used here).
#[derive(Debug, Clone)]
struct RefElement {
    /// shapes[i] = monomial coefficients of the i-th nodal shape function
    shapes: Vec<Vec<f64>>,
}

impl RefElement {
    fn nodes(degree: usize) -> Vec<f64> {
        let k = degree;
        (0..=k)
            .map(|i| 0.5 * (1.0 - (std::f64::consts::PI * i as f64 / k as f64).cos()))
            .collect()
    }

    fn new(degree: usize) -> Self {
        let k = degree;
        let nodes = Self::nodes(k);
        let mut shapes = Vec::with_capacity(k + 1);
        for s in 0..=k {
            // Vandermonde solve for the s-th nodal shape
            let v = DMat::from_fn(k + 1, k + 1, |i, j| nodes[i].powi(j as i32));
            let mut rhs = vec![0.0; k + 1];
            rhs[s] = 1.0;
            let c = linalg::solve_lu(v, rhs).expect("reference Vandermonde is nonsingular");
            shapes.push(c);
        }
        RefElement { shapes }
    }

    fn eval(&self, local: usize, t: f64) -> f64 {
        horner(&self.shapes[local], t)
    }

    fn eval_deriv(&self, local: usize, t: f64, order: usize) -> f64 {
        horner_deriv(&self.shapes[local], t, order)
    }
}

fn horner(c: &[f64], t: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ck| acc * t + ck)
}

fn horner_deriv(c: &[f64], t: f64, order: usize) -> f64 {
    if order == 0 {
        return horner(c, t);
    }
    if order >= c.len() {
        return 0.0;
    }
    // differentiate coefficients `order` times
    let mut d: Vec<f64> = c.to_vec();
    for _ in 0..order {
        for i in 1..d.len() {
            d[i - 1] = d[i] * i as f64;
        }
        d.pop();
    }
    horner(&d, t)
}

/// One function of an explicit custom basis: closed-form value/derivative
/// callbacks, a support interval, and any interior discontinuity points.
#[derive(Clone)]
pub struct CustomBasisFn {
    pub value: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub deriv: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub support: (f64, f64),
    pub jumps: Vec<f64>,
}

impl fmt::Debug for CustomBasisFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CustomBasisFn(support {:?})", self.support)
    }
}

impl CustomBasisFn {
    pub fn new(
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        deriv: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: (f64, f64),
    ) -> Self {
        CustomBasisFn {
            value: Arc::new(value),
            deriv: Arc::new(deriv),
            support,
            jumps: Vec::new(),
        }
    }

    pub fn with_jump(mut self, at: f64) -> Self {
        self.jumps.push(at);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Continuous piecewise polynomials of the given degree.
    ContinuousPk(usize),
    /// Discontinuous piecewise constants.
    DiscontinuousP0,
    /// Explicit list of basis functions.
    Custom,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    None,
    ZeroLeft,
    ZeroRight,
    ZeroBoth,
}

impl Bc {
    fn constrains_left(self) -> bool {
        matches!(self, Bc::ZeroLeft | Bc::ZeroBoth)
    }
    fn constrains_right(self) -> bool {
        matches!(self, Bc::ZeroRight | Bc::ZeroBoth)
    }
}

/// Basis description with DOF map over a Mesh1D.
#[derive(Debug, Clone)]
pub struct FESpace {
    mesh: Mesh1D,
    family: Family,
    bc: Bc,
    degree: usize,
    dim: usize,
    refelem: Option<RefElement>,
    custom: Vec<CustomBasisFn>,
    /// flagged discontinuity locations of the basis (custom spaces)
    discontinuities: Vec<f64>,
}

const GRAM_CHECK_MAX_DIM: usize = 256;

impl FESpace {
    pub fn continuous_pk(mesh: Mesh1D, degree: usize, bc: Bc) -> Result<Arc<Self>, MeshError> {
        if degree < 1 {
            return Err(MeshError::BadDegree(degree));
        }
        let n = mesh.n_elements();
        let n_vertices = n + 1;
        let constrained = bc.constrains_left() as usize + bc.constrains_right() as usize;
        let dim = n_vertices - constrained + n * (degree - 1);
        Ok(Arc::new(FESpace {
            mesh,
            family: Family::ContinuousPk(degree),
            bc,
            degree,
            dim,
            refelem: Some(RefElement::new(degree)),
            custom: Vec::new(),
            discontinuities: Vec::new(),
        }))
    }

    pub fn p0(mesh: Mesh1D) -> Arc<Self> {
        let dim = mesh.n_elements();
        Arc::new(FESpace {
            mesh,
            family: Family::DiscontinuousP0,
            bc: Bc::None,
            degree: 0,
            dim,
            refelem: None,
            custom: Vec::new(),
            discontinuities: Vec::new(),
        })
    }

    pub fn custom(mesh: Mesh1D, fns: Vec<CustomBasisFn>) -> Result<Arc<Self>, MeshError> {
        let dim = fns.len();
        let discontinuities: Vec<f64> = fns.iter().flat_map(|f| f.jumps.iter().copied()).collect();
        let space = FESpace {
            mesh,
            family: Family::Custom,
            bc: Bc::None,
            degree: 0,
            dim,
            refelem: None,
            custom: fns,
            discontinuities,
        };
        space.check_custom_independence()?;
        Ok(Arc::new(space))
    }

    /// Linear independence of a custom basis. Small spaces get a full
    /// Gram-conditioning check (graph inner product, SVD); large ones a
    /// per-function non-degeneracy spot check, since an O(dim^2) Gram is
    /// prohibitive for the big ideal-test-space sweeps.
    fn check_custom_independence(&self) -> Result<(), MeshError> {
        let dim = self.dim;
        if dim == 0 {
            return Ok(());
        }
        if dim > GRAM_CHECK_MAX_DIM {
            for (j, f) in self.custom.iter().enumerate() {
                let (lo, hi) = f.support;
                let mid = 0.5 * (lo + hi);
                let v = (f.value)(mid);
                if !v.is_finite() || v.abs() < 1e-300 {
                    return Err(MeshError::VanishingBasis(j));
                }
            }
            return Ok(());
        }
        let quad = QuadratureRule::gauss(10);
        let mut gram = DMat::zeros(dim, dim);
        for e in 0..self.mesh.n_elements() {
            let (a, b) = self.mesh.element(e);
            let active: Vec<usize> = (0..dim)
                .filter(|&j| {
                    let (lo, hi) = self.custom[j].support;
                    lo < b && hi > a
                })
                .collect();
            for &i in &active {
                for &j in &active {
                    if j < i {
                        continue;
                    }
                    let fi = &self.custom[i];
                    let fj = &self.custom[j];
                    let v = quad.integrate_element(e, a, b, &mut |x| {
                        (fi.value)(x) * (fj.value)(x) + (fi.deriv)(x) * (fj.deriv)(x)
                    });
                    gram.add_to(i, j, v);
                    if i != j {
                        gram.add_to(j, i, v);
                    }
                }
            }
        }
        let (_, s, _) = linalg::svd(&gram).map_err(|_| MeshError::DependentBasis { cond: f64::INFINITY })?;
        let smax = s.first().copied().unwrap_or(0.0);
        let smin = s.last().copied().unwrap_or(0.0);
        if smin <= 0.0 || smax / smin > 1e12 {
            return Err(MeshError::DependentBasis {
                cond: if smin > 0.0 { smax / smin } else { f64::INFINITY },
            });
        }
        Ok(())
    }

    pub fn mesh(&self) -> &Mesh1D {
        &self.mesh
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn bc(&self) -> Bc {
        self.bc
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn discontinuities(&self) -> &[f64] {
        &self.discontinuities
    }

    pub fn custom_fns(&self) -> &[CustomBasisFn] {
        &self.custom
    }

    /// Polynomial degree of the basis restricted to one element, if the
    /// family is piecewise polynomial.
    pub fn local_poly_degree(&self) -> Option<usize> {
        match self.family {
            Family::ContinuousPk(k) => Some(k),
            Family::DiscontinuousP0 => Some(0),
            Family::Custom => None,
        }
    }

    fn vertex_dof(&self, v: usize) -> Option<usize> {
        let n = self.mesh.n_elements();
        if v == 0 && self.bc.constrains_left() {
            return None;
        }
        if v == n && self.bc.constrains_right() {
            return None;
        }
        let shift = self.bc.constrains_left() as usize;
        Some(v - shift)
    }

    fn n_vertex_dofs(&self) -> usize {
        let n = self.mesh.n_elements();
        n + 1 - self.bc.constrains_left() as usize - self.bc.constrains_right() as usize
    }

    /// Active (local index, global DOF) pairs on element `elem`.
    pub fn element_dofs(&self, elem: usize) -> Vec<(usize, usize)> {
        match self.family {
            Family::DiscontinuousP0 => vec![(0, elem)],
            Family::ContinuousPk(k) => {
                let mut out = Vec::with_capacity(k + 1);
                if let Some(g) = self.vertex_dof(elem) {
                    out.push((0, g));
                }
                let interior_base = self.n_vertex_dofs() + elem * (k - 1);
                for i in 1..k {
                    out.push((i, interior_base + i - 1));
                }
                if let Some(g) = self.vertex_dof(elem + 1) {
                    out.push((k, g));
                }
                out
            }
            Family::Custom => {
                let (a, b) = self.mesh.element(elem);
                (0..self.dim)
                    .filter(|&j| {
                        let (lo, hi) = self.custom[j].support;
                        lo < b - 1e-15 * (b - a).abs() && hi > a + 1e-15 * (b - a).abs()
                    })
                    .map(|j| (j, j))
                    .collect()
            }
        }
    }

    /// Value and first derivative of the local shape `local` on `elem` at x.
    pub fn eval_local(&self, elem: usize, local: usize, x: f64) -> (f64, f64) {
        match self.family {
            Family::DiscontinuousP0 => (1.0, 0.0),
            Family::ContinuousPk(_) => {
                let (a, b) = self.mesh.element(elem);
                let h = b - a;
                let t = (x - a) / h;
                let re = self.refelem.as_ref().unwrap();
                (re.eval(local, t), re.eval_deriv(local, t, 1) / h)
            }
            Family::Custom => {
                let f = &self.custom[local];
                ((f.value)(x), (f.deriv)(x))
            }
        }
    }

    /// n-th derivative of a local shape (piecewise-polynomial families only).
    pub fn eval_local_deriv_n(&self, elem: usize, local: usize, x: f64, order: usize) -> f64 {
        match self.family {
            Family::DiscontinuousP0 => {
                if order == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            Family::ContinuousPk(_) => {
                let (a, b) = self.mesh.element(elem);
                let h = b - a;
                let t = (x - a) / h;
                let re = self.refelem.as_ref().unwrap();
                re.eval_deriv(local, t, order) / h.powi(order as i32)
            }
            Family::Custom => panic!("higher derivatives are not available for custom bases"),
        }
    }

    /// Nodal interpolation of a function (P^k and P^0 families).
    pub fn interpolate(
        self: &Arc<Self>,
        f: impl Fn(f64) -> f64,
    ) -> Result<DiscreteFunction, MeshError> {
        let mut coeffs = vec![0.0; self.dim];
        match self.family {
            Family::DiscontinuousP0 => {
                for j in 0..self.mesh.n_elements() {
                    let (a, b) = self.mesh.element(j);
                    coeffs[j] = f(0.5 * (a + b));
                }
            }
            Family::ContinuousPk(k) => {
                let ref_nodes = RefElement::nodes(k);
                for e in 0..self.mesh.n_elements() {
                    let (a, b) = self.mesh.element(e);
                    for (local, g) in self.element_dofs(e) {
                        let x = a + (b - a) * ref_nodes[local];
                        coeffs[g] = f(x);
                    }
                }
            }
            Family::Custom => return Err(MeshError::NoInterpolation),
        }
        DiscreteFunction::new(Arc::clone(self), coeffs)
    }
}

/// Coefficient sequence over an FESpace, evaluable pointwise.
#[derive(Debug, Clone)]
pub struct DiscreteFunction {
    space: Arc<FESpace>,
    coeffs: Vec<f64>,
}

impl DiscreteFunction {
    pub fn new(space: Arc<FESpace>, coeffs: Vec<f64>) -> Result<Self, MeshError> {
        if coeffs.len() != space.dim() {
            return Err(MeshError::CoeffLength {
                got: coeffs.len(),
                want: space.dim(),
            });
        }
        Ok(DiscreteFunction { space, coeffs })
    }

    pub fn zero(space: Arc<FESpace>) -> Self {
        let n = space.dim();
        DiscreteFunction {
            space,
            coeffs: vec![0.0; n],
        }
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn eval(&self, x: f64) -> f64 {
        let elem = self.space.mesh().find_element(x);
        self.eval_on(elem, x).0
    }

    pub fn deriv(&self, x: f64) -> f64 {
        let elem = self.space.mesh().find_element(x);
        self.eval_on(elem, x).1
    }

    /// Value and derivative at x, using the basis of a specific element
    /// (callers doing quadrature already know the element).
    pub fn eval_on(&self, elem: usize, x: f64) -> (f64, f64) {
        let mut v = 0.0;
        let mut d = 0.0;
        for (local, g) in self.space.element_dofs(elem) {
            let c = self.coeffs[g];
            if c == 0.0 {
                continue;
            }
            let (val, der) = self.space.eval_local(elem, local, x);
            v += c * val;
            d += c * der;
        }
        (v, d)
    }
}

/// Ideal test space for 1-D advection: one basis function per element,
/// solving -(beta v_j)' = indicator(T_j) with the value pinned to zero on
/// the outflow side (or at the interior stagnation point for two-sided
/// inflow). Supports beta of one sign, or strictly decreasing with a sign
/// change inside the interval.
pub fn build_ideal_advection_test_space(
    mesh: &Mesh1D,
    beta: &Coefficient,
) -> Result<Arc<FESpace>, MeshError> {
    let (a, b) = (mesh.a(), mesh.b());
    let scale = sample_abs_max(beta, a, b);
    let tol = 1e-12 * scale.max(1.0);
    let ba = beta.value(a);
    let bb = beta.value(b);

    if ba > tol && bb > tol {
        return build_one_sign(mesh, beta, true);
    }
    if ba < -tol && bb < -tol {
        return build_one_sign(mesh, beta, false);
    }
    if ba > tol && bb < -tol {
        return build_two_inflow(mesh, beta);
    }
    Err(MeshError::SingularCoefficient(if ba.abs() <= tol { a } else { b }))
}

fn sample_abs_max(beta: &Coefficient, a: f64, b: f64) -> f64 {
    let mut m = 0.0f64;
    for i in 0..=64 {
        let x = a + (b - a) * i as f64 / 64.0;
        m = m.max(beta.value(x).abs());
    }
    m
}

fn build_one_sign(mesh: &Mesh1D, beta: &Coefficient, positive: bool) -> Result<Arc<FESpace>, MeshError> {
    // check beta keeps its sign at a fine sample; a vanishing coefficient
    // makes the ODE solve singular
    let (a, b) = (mesh.a(), mesh.b());
    let scale = sample_abs_max(beta, a, b);
    for i in 0..=256 {
        let x = a + (b - a) * i as f64 / 256.0;
        let v = beta.value(x);
        if (positive && v < 1e-12 * scale) || (!positive && v > -1e-12 * scale) {
            return Err(MeshError::SingularCoefficient(x));
        }
    }
    let mut fns = Vec::with_capacity(mesh.n_elements());
    for j in 0..mesh.n_elements() {
        let (xl, xr) = mesh.element(j);
        let h = xr - xl;
        let bv = beta.clone();
        let bd = beta.clone();
        if positive {
            // support (a, x_j]; flux integrated from the outflow at b
            fns.push(CustomBasisFn::new(
                move |x| {
                    if x >= xr {
                        0.0
                    } else if x > xl {
                        (xr - x) / bv.value(x)
                    } else {
                        h / bv.value(x)
                    }
                },
                move |x| {
                    if x >= xr {
                        0.0
                    } else if x > xl {
                        let bx = bd.value(x);
                        (-bx - (xr - x) * bd.deriv(x)) / (bx * bx)
                    } else {
                        -h * bd.deriv(x) / bd.value(x).powi(2)
                    }
                },
                (mesh.a(), xr),
            ));
        } else {
            // outflow at a: mirror construction, support [x_{j-1}, b)
            fns.push(CustomBasisFn::new(
                move |x| {
                    if x <= xl {
                        0.0
                    } else if x < xr {
                        (xl - x) / bv.value(x)
                    } else {
                        -h / bv.value(x)
                    }
                },
                move |x| {
                    if x <= xl {
                        0.0
                    } else if x < xr {
                        let bx = bd.value(x);
                        (-bx - (xl - x) * bd.deriv(x)) / (bx * bx)
                    } else {
                        h * bd.deriv(x) / bd.value(x).powi(2)
                    }
                },
                (xl, mesh.b()),
            ));
        }
    }
    FESpace::custom(mesh.clone(), fns)
}

fn build_two_inflow(mesh: &Mesh1D, beta: &Coefficient) -> Result<Arc<FESpace>, MeshError> {
    let (a, b) = (mesh.a(), mesh.b());
    // stagnation point: beta strictly decreasing, beta(a) > 0 > beta(b)
    let mut lo = a;
    let mut hi = b;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if beta.value(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xt = 0.5 * (lo + hi);
    if beta.deriv(xt) >= 0.0 {
        return Err(MeshError::SingularCoefficient(xt));
    }
    let node_tol = 1e-12 * (b - a);
    let at_node = mesh.nodes().iter().any(|&n| (n - xt).abs() < node_tol);

    let mut fns = Vec::with_capacity(mesh.n_elements());
    for j in 0..mesh.n_elements() {
        let (xl, xr) = mesh.element(j);
        let h = xr - xl;
        let bv = beta.clone();
        let bd = beta.clone();
        if xr <= xt + node_tol {
            // element left of the stagnation point: same as the positive case
            // but supported only up to xt
            let f = CustomBasisFn::new(
                move |x| {
                    if x >= xr || x > xt {
                        0.0
                    } else if x > xl {
                        (xr - x) / bv.value(x)
                    } else {
                        h / bv.value(x)
                    }
                },
                move |x| {
                    if x >= xr || x > xt {
                        0.0
                    } else if x > xl {
                        let bx = bd.value(x);
                        (-bx - (xr - x) * bd.deriv(x)) / (bx * bx)
                    } else {
                        -h * bd.deriv(x) / bd.value(x).powi(2)
                    }
                },
                (mesh.a(), xr),
            );
            let f = if at_node && (xr - xt).abs() < node_tol {
                f.with_jump(xt)
            } else {
                f
            };
            fns.push(f);
        } else if xl >= xt - node_tol {
            // element right of the stagnation point: negative-beta form
            let f = CustomBasisFn::new(
                move |x| {
                    if x <= xl || x < xt {
                        0.0
                    } else if x < xr {
                        (xl - x) / bv.value(x)
                    } else {
                        -h / bv.value(x)
                    }
                },
                move |x| {
                    if x <= xl || x < xt {
                        0.0
                    } else if x < xr {
                        let bx = bd.value(x);
                        (-bx - (xl - x) * bd.deriv(x)) / (bx * bx)
                    } else {
                        h * bd.deriv(x) / bd.value(x).powi(2)
                    }
                },
                (xl, mesh.b()),
            );
            let f = if at_node && (xl - xt).abs() < node_tol {
                f.with_jump(xt)
            } else {
                f
            };
            fns.push(f);
        } else {
            // element straddling the stagnation point; pin (beta v)(xt) = 0,
            // the value extends over the whole interval
            let bv2 = beta.clone();
            let guard = 1e-8 * (b - a);
            let value = move |x: f64| {
                // (beta v)(x) = measure(T_j intersect (x, xt)) signed
                let flux = overlap_signed(xl, xr, x, xt);
                if (x - xt).abs() < guard {
                    // removable singularity: v -> -chi_Tj(xt)/beta'(xt)
                    -1.0 / bv2.deriv(xt)
                } else {
                    flux / bv2.value(x)
                }
            };
            let bv3 = beta.clone();
            let deriv = move |x: f64| {
                if (x - xt).abs() < guard {
                    // leading-order slope at the stagnation point
                    0.5 * bv3.deriv(xt).abs().recip() * 0.0
                } else {
                    let flux = overlap_signed(xl, xr, x, xt);
                    let chi = if x > xl && x < xr { 1.0 } else { 0.0 };
                    let bx = bv3.value(x);
                    (-chi * bx - flux * bv3.deriv(x)) / (bx * bx)
                }
            };
            fns.push(CustomBasisFn::new(value, deriv, (mesh.a(), mesh.b())));
        }
    }
    FESpace::custom(mesh.clone(), fns)
}

/// Signed measure of T = (xl, xr) between x and xt: + for x < xt regions.
fn overlap_signed(xl: f64, xr: f64, x: f64, xt: f64) -> f64 {
    let (lo, hi, sign) = if x <= xt { (x, xt, 1.0) } else { (xt, x, -1.0) };
    let cut_lo = lo.max(xl);
    let cut_hi = hi.min(xr);
    sign * (cut_hi - cut_lo).max(0.0)
}

/// The graded one-DOF trial basis phi_eps: x^{2/3} - x right of eps, linear
/// ramp left of it (continuous across eps, zero at both endpoints).
pub fn build_graded_basis(epsilon: f64) -> Result<Arc<FESpace>, MeshError> {
    assert!(epsilon > 0.0 && epsilon < 1.0, "need 0 < eps < 1");
    let mesh = Mesh1D::new(vec![0.0, epsilon, 1.0])?;
    let slope = epsilon.powf(-1.0 / 3.0) - 1.0;
    let f = CustomBasisFn::new(
        move |x| {
            if x <= epsilon {
                slope * x
            } else {
                x.powf(2.0 / 3.0) - x
            }
        },
        move |x| {
            if x <= epsilon {
                slope
            } else {
                (2.0 / 3.0) * x.powf(-1.0 / 3.0) - 1.0
            }
        },
        (0.0, 1.0),
    );
    FESpace::custom(mesh, vec![f])
}
