//! Discrete operators and functionals of the contact problem.
//!
//! The primal field is P1 (piecewise linear) on the triangulation, the
//! multiplier is piecewise constant per contact edge. Bulk integrals are
//! exact because P1 gradients are constant per triangle; boundary integrals
//! use 2-point Gauss where the integrand is smooth and closed-form
//! antiderivatives where absolute values are involved, so none of the
//! verification tolerances absorb quadrature error.

use crate::linalg::BandMatrix;
use crate::mesh::{Mesh, SegmentTag, TraceEdge};
use crate::scalar::{lit, Real};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Selector for the boundary nonlinearity `j` on the upper segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FrictionKind {
    /// `j(s) = s / sqrt(s^2 + 1)`: odd, nondecreasing, bounded by 1,
    /// Lipschitz with constant 1.
    #[default]
    SmoothSign,
}

impl FrictionKind {
    /// Evaluates `j(s)`.
    pub fn eval<T: Real>(self, s: T) -> T {
        match self {
            FrictionKind::SmoothSign => s / (s * s + T::one()).sqrt(),
        }
    }

    /// Evaluates `j'(s)`.
    pub fn slope<T: Real>(self, s: T) -> T {
        match self {
            FrictionKind::SmoothSign => {
                let q = s * s + T::one();
                T::one() / (q * q.sqrt())
            }
        }
    }

    /// Antiderivative with `potential(0) = 0`; convex because `j` is
    /// nondecreasing.
    pub fn potential<T: Real>(self, s: T) -> T {
        match self {
            FrictionKind::SmoothSign => (s * s + T::one()).sqrt() - T::one(),
        }
    }

    /// Uniform bound on `|j|`.
    pub fn bound<T: Real>(self) -> T {
        match self {
            FrictionKind::SmoothSign => T::one(),
        }
    }

    /// Lipschitz constant of `j`.
    pub fn lipschitz<T: Real>(self) -> T {
        match self {
            FrictionKind::SmoothSign => T::one(),
        }
    }
}

/// Physical data of one problem instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProblemSpec<T> {
    /// Material coefficient, strictly positive.
    pub mu_star: T,
    /// Growth exponent of the operator, at least 2.
    pub r: T,
    /// Friction bound on the contact segment, nonnegative.
    pub theta: T,
    /// Friction coefficient on the upper segment, nonnegative.
    pub g: T,
    /// Traction on the right segment: `f(s) = f_coeffs[0] + f_coeffs[1] * s / L`
    /// with `s` the arc length from the segment's lexicographically smallest
    /// corner and `L` the segment length.
    pub f_coeffs: [T; 2],
    /// Boundary nonlinearity on the upper segment.
    pub j_kind: FrictionKind,
}

/// Violated data constraints, one message per violation.
pub fn data_violations<T: Real>(
    mu_star: T,
    r: T,
    theta: T,
    g: T,
    f_coeffs: [T; 2],
) -> Vec<String> {
    let mut v = Vec::new();
    if !(mu_star > T::zero()) || !mu_star.is_finite() {
        v.push(format!(
            "mu_star = {mu_star} invalid: the material coefficient must be positive and finite"
        ));
    }
    if !(r >= lit::<T>(2.0)) || !r.is_finite() {
        v.push(format!(
            "r = {r} invalid: the growth exponent must satisfy r >= 2"
        ));
    }
    if !(theta >= T::zero()) || !theta.is_finite() {
        v.push(format!(
            "theta = {theta} invalid: the contact friction bound must be nonnegative"
        ));
    }
    if !(g >= T::zero()) || !g.is_finite() {
        v.push(format!(
            "g = {g} invalid: the upper-segment friction coefficient must be nonnegative"
        ));
    }
    if !f_coeffs[0].is_finite() || !f_coeffs[1].is_finite() {
        v.push("f_coeffs invalid: traction coefficients must be finite".to_string());
    }
    v
}

/// Rejection of invalid problem data.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    /// One or more data constraints are violated.
    #[error("invalid problem data: {}", reasons.join("; "))]
    Invalid {
        /// One message per violated constraint.
        reasons: Vec<String>,
    },
}

impl<T: Real> ProblemSpec<T> {
    /// Validating constructor.
    pub fn new(
        mu_star: T,
        r: T,
        theta: T,
        g: T,
        f_coeffs: [T; 2],
        j_kind: FrictionKind,
    ) -> Result<Self, SpecError> {
        let reasons = data_violations(mu_star, r, theta, g, f_coeffs);
        if !reasons.is_empty() {
            return Err(SpecError::Invalid { reasons });
        }
        Ok(Self {
            mu_star,
            r,
            theta,
            g,
            f_coeffs,
            j_kind,
        })
    }

    /// Conjugate exponent `r' = r / (r - 1)`.
    pub fn r_conjugate(&self) -> T {
        conjugate_exponent(self.r)
    }

    /// Traction value at arc-length coordinate `s` on a segment of length `len`.
    pub fn traction_at(&self, s: T, len: T) -> T {
        self.f_coeffs[0] + self.f_coeffs[1] * (s / len)
    }
}

/// Conjugate exponent `p' = p / (p - 1)`.
pub fn conjugate_exponent<T: Real>(p: T) -> T {
    p / (p - T::one())
}

/// Assembly failures.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AssemblyError {
    /// Array length does not match the mesh.
    #[error("array length mismatch: expected {expected}, got {got}")]
    DimensionMismatch {
        /// Required length.
        expected: usize,
        /// Supplied length.
        got: usize,
    },
    /// Negative regularization parameter.
    #[error("regularization eps must be nonnegative")]
    NegativeEps,
    /// The operator derivative is unbounded at zero gradient for r > 2.
    #[error("tangent assembly requires eps > 0 when r > 2 (derivative unbounded at zero gradient)")]
    UnregularizedTangent,
}

/// 2-point Gauss rule on the unit interval as `(t, weight)` pairs;
/// `integral over an edge ~= length * sum w_q * f(t_q)`, exact to degree 3.
pub fn gauss2<T: Real>() -> [(T, T); 2] {
    let a = lit::<T>(0.5 - 0.5 / 3.0_f64.sqrt());
    let b = lit::<T>(0.5 + 0.5 / 3.0_f64.sqrt());
    let w = lit::<T>(0.5);
    [(a, w), (b, w)]
}

/// Sign with `sgn(0) = 0`.
fn sgn0<T: Real>(x: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.signum()
    }
}

/// Exact `int_0^len |w(t)|^p dt` for `w` linear from `ua` to `ub`, `p >= 1`.
pub fn abs_power_edge_integral<T: Real>(ua: T, ub: T, len: T, p: T) -> T {
    let d = ub - ua;
    let scale = ua.abs().max(ub.abs());
    if d.abs() <= lit::<T>(1e-9) * scale.max(T::min_positive_value()) || scale == T::zero() {
        let m = (ua + ub) * lit::<T>(0.5);
        return len * m.abs().powf(p);
    }
    // Substitute w for t: (len/d) * [sgn(w)|w|^{p+1}/(p+1)] from ua to ub.
    let anti = |w: T| sgn0(w) * w.abs().powf(p + T::one()) / (p + T::one());
    (len / d) * (anti(ub) - anti(ua))
}

/// Gradient of [`abs_power_edge_integral`] with respect to `(ua, ub)`.
///
/// At kinks of the integrand (`p = 1` with a sign change at an endpoint) this
/// returns an element of the subdifferential.
pub fn abs_power_edge_gradient<T: Real>(ua: T, ub: T, len: T, p: T) -> (T, T) {
    let d = ub - ua;
    let scale = ua.abs().max(ub.abs());
    if d.abs() <= lit::<T>(1e-7) * scale.max(T::min_positive_value()) || scale == T::zero() {
        let m = (ua + ub) * lit::<T>(0.5);
        let gm = if p == T::one() {
            sgn0(m)
        } else {
            p * m.abs().powf(p - T::one()) * sgn0(m)
        };
        let half = len * lit::<T>(0.5);
        return (half * gm, half * gm);
    }
    // d/dua = p * int |w|^{p-1} sgn(w) (ub - w)/d dt, evaluated in closed form
    // after the same substitution as the integral.
    let pw = |w: T| w.abs().powf(p);
    let pw1 = |w: T| sgn0(w) * w.abs().powf(p + T::one());
    let c = len / (d * d);
    let p1 = p + T::one();
    let ga = c * ((ub * pw(ub) - p * pw1(ub) / p1) - (ub * pw(ua) - p * pw1(ua) / p1));
    let gb = c * ((p * pw1(ub) / p1 - ua * pw(ub)) - (p * pw1(ua) / p1 - ua * pw(ua)));
    (ga, gb)
}

/// Exact `int_0^len sqrt(w(t)^2 + delta^2) dt` for linear `w`.
pub fn smoothed_abs_edge_integral<T: Real>(ua: T, ub: T, len: T, delta: T) -> T {
    let d = ub - ua;
    let scale = ua.abs().max(ub.abs()).max(delta);
    if d.abs() <= lit::<T>(1e-7) * scale {
        let m = (ua + ub) * lit::<T>(0.5);
        return len * (m * m + delta * delta).sqrt();
    }
    let s = |w: T| (w * w + delta * delta).sqrt();
    // Antiderivative in w: (w s(w) + delta^2 asinh(w/delta)) / 2.
    let anti = |w: T| (w * s(w) + delta * delta * (w / delta).asinh()) * lit::<T>(0.5);
    (len / d) * (anti(ub) - anti(ua))
}

/// Gradient of [`smoothed_abs_edge_integral`] with respect to `(ua, ub)`.
pub fn smoothed_abs_edge_gradient<T: Real>(ua: T, ub: T, len: T, delta: T) -> (T, T) {
    let d = ub - ua;
    let scale = ua.abs().max(ub.abs()).max(delta);
    if d.abs() <= lit::<T>(1e-7) * scale {
        let m = (ua + ub) * lit::<T>(0.5);
        let g = len * lit::<T>(0.5) * m / (m * m + delta * delta).sqrt();
        return (g, g);
    }
    let s = |w: T| (w * w + delta * delta).sqrt();
    // int w^2/s dw = (w s(w) - delta^2 asinh(w/delta)) / 2.
    let anti2 = |w: T| (w * s(w) - delta * delta * (w / delta).asinh()) * lit::<T>(0.5);
    let c = len / (d * d);
    let ga = c * ((ub * s(ub) - anti2(ub)) - (ub * s(ua) - anti2(ua)));
    let gb = c * ((anti2(ub) - ua * s(ub)) - (anti2(ua) - ua * s(ua)));
    (ga, gb)
}

/// Constant P1 gradient data of one triangle: `(area, [grad phi_k; 3])`.
fn p1_geometry<T: Real>(mesh: &Mesh<T>, tri: &[usize; 3]) -> (T, [[T; 2]; 3]) {
    let p: [[T; 2]; 3] = [mesh.nodes[tri[0]], mesh.nodes[tri[1]], mesh.nodes[tri[2]]];
    let area2 = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[1][1] - p[0][1]) * (p[2][0] - p[0][0]);
    let area = area2 * lit::<T>(0.5);
    let mut grads = [[T::zero(); 2]; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        // grad phi_k = rot90(b - a) / (2 area), rot90(v) = (-v_y, v_x).
        grads[k] = [-(b[1] - a[1]) / area2, (b[0] - a[0]) / area2];
    }
    (area, grads)
}

fn check_len<T>(u: &[T], expected: usize) -> Result<(), AssemblyError> {
    if u.len() != expected {
        Err(AssemblyError::DimensionMismatch {
            expected,
            got: u.len(),
        })
    } else {
        Ok(())
    }
}

/// Residual vector of the (regularized) nonlinear operator:
/// `R_i = mu_star * int (|grad u|^2 + eps^2)^{(r-2)/2} grad u . grad phi_i`.
///
/// `eps = 0` gives the exact operator; exact per triangle since P1 gradients
/// are constant.
pub fn apply_a<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    mu_star: T,
    r: T,
    eps: T,
) -> Result<Vec<T>, AssemblyError> {
    check_len(u, mesh.num_nodes())?;
    if eps < T::zero() {
        return Err(AssemblyError::NegativeEps);
    }
    let two = lit::<T>(2.0);
    let expo = (r - two) / two;
    let mut out = vec![T::zero(); mesh.num_nodes()];
    for tri in &mesh.triangles {
        let (area, grads) = p1_geometry(mesh, tri);
        let mut g = [T::zero(); 2];
        for k in 0..3 {
            g[0] += u[tri[k]] * grads[k][0];
            g[1] += u[tri[k]] * grads[k][1];
        }
        let q = g[0] * g[0] + g[1] * g[1] + eps * eps;
        // q^0 = 1 covers r = 2 including the q = 0 corner.
        let w = if expo == T::zero() { T::one() } else { q.powf(expo) };
        let c = mu_star * area * w;
        for k in 0..3 {
            out[tri[k]] += c * (g[0] * grads[k][0] + g[1] * grads[k][1]);
        }
    }
    Ok(out)
}

/// Exact derivative of [`apply_a`] at `u` with the same `eps`.
///
/// Symmetric positive semidefinite band matrix; strictly positive definite
/// after eliminating the clamped nodes. Requires `eps > 0` for `r > 2`.
pub fn tangent_a<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    mu_star: T,
    r: T,
    eps: T,
) -> Result<BandMatrix<T>, AssemblyError> {
    check_len(u, mesh.num_nodes())?;
    if eps < T::zero() {
        return Err(AssemblyError::NegativeEps);
    }
    let two = lit::<T>(2.0);
    if r > two && eps == T::zero() {
        return Err(AssemblyError::UnregularizedTangent);
    }
    let mut m = BandMatrix::zeros(mesh.num_nodes(), mesh.half_bandwidth());
    let s_expo = (r - two) / two;
    let t_expo = (r - lit::<T>(4.0)) / two;
    for tri in &mesh.triangles {
        let (area, grads) = p1_geometry(mesh, tri);
        let mut g = [T::zero(); 2];
        for k in 0..3 {
            g[0] += u[tri[k]] * grads[k][0];
            g[1] += u[tri[k]] * grads[k][1];
        }
        let q = g[0] * g[0] + g[1] * g[1] + eps * eps;
        let s = if s_expo == T::zero() { T::one() } else { q.powf(s_expo) };
        let t = if r > two { (r - two) * q.powf(t_expo) } else { T::zero() };
        for a in 0..3 {
            let da = g[0] * grads[a][0] + g[1] * grads[a][1];
            for b in a..3 {
                let dot = grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1];
                let db = g[0] * grads[b][0] + g[1] * grads[b][1];
                let v = mu_star * area * (s * dot + t * da * db);
                let (i, j) = (tri[a], tri[b]);
                if i == j {
                    m.add(i, j, v);
                } else {
                    m.add(i.max(j), i.min(j), v);
                }
            }
        }
    }
    Ok(m)
}

/// Boundary friction residual on the upper segment:
/// `G_i = g * int j(trace u) phi_i`, 2-point Gauss per edge.
pub fn friction_residual_g4<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    g: T,
    j_kind: FrictionKind,
) -> Result<Vec<T>, AssemblyError> {
    check_len(u, mesh.num_nodes())?;
    let mut out = vec![T::zero(); mesh.num_nodes()];
    if g == T::zero() {
        return Ok(out);
    }
    let rule = gauss2::<T>();
    for e in mesh.trace_edges(SegmentTag::G4) {
        let [a, b] = e.nodes;
        for (t, w) in rule {
            let phi_a = T::one() - t;
            let phi_b = t;
            let uq = u[a] * phi_a + u[b] * phi_b;
            let c = g * e.length * w * j_kind.eval(uq);
            out[a] += c * phi_a;
            out[b] += c * phi_b;
        }
    }
    Ok(out)
}

/// Adds the exact derivative of [`friction_residual_g4`] into `m`.
pub fn friction_tangent_g4<T: Real>(
    mesh: &Mesh<T>,
    u: &[T],
    g: T,
    j_kind: FrictionKind,
    m: &mut BandMatrix<T>,
) -> Result<(), AssemblyError> {
    check_len(u, mesh.num_nodes())?;
    if g == T::zero() {
        return Ok(());
    }
    let rule = gauss2::<T>();
    for e in mesh.trace_edges(SegmentTag::G4) {
        let [a, b] = e.nodes;
        for (t, w) in rule {
            let phi_a = T::one() - t;
            let phi_b = t;
            let uq = u[a] * phi_a + u[b] * phi_b;
            let c = g * e.length * w * j_kind.slope(uq);
            m.add(a, a, c * phi_a * phi_a);
            m.add(b, b, c * phi_b * phi_b);
            m.add(a.max(b), a.min(b), c * phi_a * phi_b);
        }
    }
    Ok(())
}

/// Load vector `F_i = int over the traction segment of f phi_i`; exact for
/// the constant + linear traction basis (2-point Gauss, degree 2 integrand).
pub fn load_vector<T: Real>(mesh: &Mesh<T>, f_coeffs: [T; 2]) -> Vec<T> {
    let mut out = vec![T::zero(); mesh.num_nodes()];
    let len = mesh.side_length(SegmentTag::G2);
    let rule = gauss2::<T>();
    for e in mesh.trace_edges(SegmentTag::G2) {
        let [a, b] = e.nodes;
        let sa = mesh.arc_coord(SegmentTag::G2, a);
        let sb = mesh.arc_coord(SegmentTag::G2, b);
        for (t, w) in rule {
            let phi_a = T::one() - t;
            let phi_b = t;
            let s = sa * phi_a + sb * phi_b;
            let f = f_coeffs[0] + f_coeffs[1] * (s / len);
            let c = e.length * w * f;
            out[a] += c * phi_a;
            out[b] += c * phi_b;
        }
    }
    out
}

/// Primal norm `(sum area * |grad u|^r)^{1/r}`, exact for P1 fields.
pub fn x_norm<T: Real>(mesh: &Mesh<T>, u: &[T], r: T) -> T {
    assert_eq!(u.len(), mesh.num_nodes(), "x_norm operand length");
    let mut acc = T::zero();
    for tri in &mesh.triangles {
        let (area, grads) = p1_geometry(mesh, tri);
        let mut g = [T::zero(); 2];
        for k in 0..3 {
            g[0] += u[tri[k]] * grads[k][0];
            g[1] += u[tri[k]] * grads[k][1];
        }
        let norm2 = g[0] * g[0] + g[1] * g[1];
        acc += area * norm2.sqrt().powf(r);
    }
    acc.powf(T::one() / r)
}

/// Multiplier norm `(sum length * |lam_e|^{r'})^{1/r'}` over the contact
/// edges in trace order, with `r'` conjugate to `r`.
pub fn y_norm<T: Real>(mesh: &Mesh<T>, lam: &[T], r: T) -> T {
    let edges = mesh.trace_edges(SegmentTag::G3);
    assert_eq!(lam.len(), edges.len(), "y_norm multiplier length");
    let rc = r / (r - T::one());
    let acc = edges
        .iter()
        .zip(lam)
        .map(|(e, &l)| e.length * l.abs().powf(rc))
        .sum::<T>();
    acc.powf(T::one() / rc)
}

/// Dual norm of the traction datum: `L^{r'}` norm of `f` over the traction
/// segment, exact via the closed-form antiderivative.
pub fn traction_dual_norm<T: Real>(mesh: &Mesh<T>, f_coeffs: [T; 2], r: T) -> T {
    let len = mesh.side_length(SegmentTag::G2);
    let rc = r / (r - T::one());
    let mut acc = T::zero();
    for e in mesh.trace_edges(SegmentTag::G2) {
        let [a, b] = e.nodes;
        let sa = mesh.arc_coord(SegmentTag::G2, a);
        let sb = mesh.arc_coord(SegmentTag::G2, b);
        let fa = f_coeffs[0] + f_coeffs[1] * (sa / len);
        let fb = f_coeffs[0] + f_coeffs[1] * (sb / len);
        acc += abs_power_edge_integral(fa, fb, e.length, rc);
    }
    acc.powf(T::one() / rc)
}

/// Energy value split into its four parts; `total` is their sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EnergyValue<T> {
    /// `(mu_star / r) * int |grad u|^r`.
    pub bulk: T,
    /// `theta * int over the contact segment of |trace u|`.
    pub gamma3: T,
    /// `g * int over the upper segment of potential(trace u)`.
    pub gamma4: T,
    /// `- int over the traction segment of f * trace u` (signed).
    pub load: T,
    /// Sum of the four parts.
    pub total: T,
}

/// Convex energy whose minimizer over the clamped subspace is the primal
/// solution; the multiplier is the subgradient of the contact term.
pub fn oracle_energy<T: Real>(mesh: &Mesh<T>, u: &[T], spec: &ProblemSpec<T>) -> EnergyValue<T> {
    assert_eq!(u.len(), mesh.num_nodes(), "energy operand length");
    let mut bulk = T::zero();
    for tri in &mesh.triangles {
        let (area, grads) = p1_geometry(mesh, tri);
        let mut g = [T::zero(); 2];
        for k in 0..3 {
            g[0] += u[tri[k]] * grads[k][0];
            g[1] += u[tri[k]] * grads[k][1];
        }
        let norm2 = g[0] * g[0] + g[1] * g[1];
        bulk += area * norm2.sqrt().powf(spec.r);
    }
    bulk = bulk * spec.mu_star / spec.r;

    let mut gamma3 = T::zero();
    if spec.theta > T::zero() {
        for e in mesh.trace_edges(SegmentTag::G3) {
            gamma3 += abs_power_edge_integral(u[e.nodes[0]], u[e.nodes[1]], e.length, T::one());
        }
        gamma3 = gamma3 * spec.theta;
    }

    let mut gamma4 = T::zero();
    if spec.g > T::zero() {
        let rule = gauss2::<T>();
        for e in mesh.trace_edges(SegmentTag::G4) {
            let [a, b] = e.nodes;
            for (t, w) in rule {
                let uq = u[a] * (T::one() - t) + u[b] * t;
                gamma4 += e.length * w * spec.j_kind.potential(uq);
            }
        }
        gamma4 = gamma4 * spec.g;
    }

    let f = load_vector(mesh, spec.f_coeffs);
    let load = -f.iter().zip(u).map(|(&a, &b)| a * b).sum::<T>();

    EnergyValue {
        bulk,
        gamma3,
        gamma4,
        load,
        total: bulk + gamma3 + gamma4 + load,
    }
}

/// Coupling between the multiplier (constant per contact edge) and the
/// primal trace: row `e` integrates the P1 basis over contact edge `e`, so
/// the pairing is `sum_e lam_e * int_e trace v`.
#[derive(Debug, Clone)]
pub struct CouplingMatrix<T> {
    rows: Vec<CouplingRow<T>>,
}

/// One row of the coupling matrix.
#[derive(Debug, Clone, Copy)]
pub struct CouplingRow<T> {
    /// Endpoint nodes of the contact edge.
    pub nodes: [usize; 2],
    /// Integral of each endpoint basis function over the edge (`length / 2`).
    pub weights: [T; 2],
    /// Edge length.
    pub length: T,
}

impl<T: Real> CouplingMatrix<T> {
    /// Builds the coupling rows from the contact-edge trace.
    pub fn from_mesh(mesh: &Mesh<T>) -> Self {
        let half = lit::<T>(0.5);
        let rows = mesh
            .trace_edges(SegmentTag::G3)
            .iter()
            .map(|e| CouplingRow {
                nodes: e.nodes,
                weights: [e.length * half, e.length * half],
                length: e.length,
            })
            .collect();
        Self { rows }
    }

    /// Number of contact edges (multiplier dimension).
    pub fn num_edges(&self) -> usize {
        self.rows.len()
    }

    /// Row access.
    pub fn rows(&self) -> &[CouplingRow<T>] {
        &self.rows
    }

    /// `(B u)_e = int_e trace u` per contact edge.
    pub fn apply(&self, u: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .map(|r| r.weights[0] * u[r.nodes[0]] + r.weights[1] * u[r.nodes[1]])
            .collect()
    }

    /// Accumulates `out += B^T lam`.
    pub fn add_transpose(&self, lam: &[T], out: &mut [T]) {
        assert_eq!(lam.len(), self.rows.len(), "multiplier length");
        for (row, &l) in self.rows.iter().zip(lam) {
            out[row.nodes[0]] += row.weights[0] * l;
            out[row.nodes[1]] += row.weights[1] * l;
        }
    }

    /// Duality pairing `b(v, lam) = lam^T B v`.
    pub fn pairing(&self, v: &[T], lam: &[T]) -> T {
        assert_eq!(lam.len(), self.rows.len(), "multiplier length");
        self.rows
            .iter()
            .zip(lam)
            .map(|(r, &l)| l * (r.weights[0] * v[r.nodes[0]] + r.weights[1] * v[r.nodes[1]]))
            .sum()
    }
}

/// Precomputed discrete operators shared by the solvers.
#[derive(Debug, Clone)]
pub struct DiscreteOperatorSet<T> {
    /// Coupling matrix over the contact edges.
    pub coupling: CouplingMatrix<T>,
    /// Load vector from the traction datum.
    pub load: Vec<T>,
    /// Contact-segment trace edges in deterministic order.
    pub gamma3: Vec<TraceEdge<T>>,
    /// Upper-segment trace edges in deterministic order.
    pub gamma4: Vec<TraceEdge<T>>,
    /// Nodes not on the clamped segment, ascending.
    pub free_dofs: Vec<usize>,
}

impl<T: Real> DiscreteOperatorSet<T> {
    /// Assembles the operator set for one problem instance.
    pub fn build(mesh: &Mesh<T>, spec: &ProblemSpec<T>) -> Self {
        let free_dofs = (0..mesh.num_nodes())
            .filter(|&i| !mesh.is_dirichlet(i))
            .collect();
        Self {
            coupling: CouplingMatrix::from_mesh(mesh),
            load: load_vector(mesh, spec.f_coeffs),
            gamma3: mesh.trace_edges(SegmentTag::G3),
            gamma4: mesh.trace_edges(SegmentTag::G4),
            free_dofs,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, BoundaryPartition};

    fn unit_mesh(n: usize) -> Mesh<f64> {
        build_rect_mesh(n, n, 1.0, 1.0, BoundaryPartition::default()).unwrap()
    }

    fn field_x(mesh: &Mesh<f64>) -> Vec<f64> {
        mesh.nodes.iter().map(|p| p[0]).collect()
    }

    #[test]
    fn apply_a_zero_field_is_zero() {
        let m = unit_mesh(3);
        let r = apply_a(&m, &vec![0.0; m.num_nodes()], 1.0, 3.0, 0.0).unwrap();
        assert!(r.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apply_a_pairing_matches_hand_integrals() {
        let m = unit_mesh(4);
        let u = field_x(&m);
        // (Au, u) = mu* int |grad u|^r with grad u = (1, 0).
        let r2 = apply_a(&m, &u, 1.0, 2.0, 0.0).unwrap();
        let p2: f64 = r2.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((p2 - 1.0).abs() < 1e-13);
        let r3 = apply_a(&m, &u, 2.0, 3.0, 0.0).unwrap();
        let p3: f64 = r3.iter().zip(&u).map(|(a, b)| a * b).sum();
        assert!((p3 - 2.0).abs() < 1e-13);
    }

    #[test]
    fn apply_a_is_homogeneous_of_degree_r_minus_one() {
        let m = unit_mesh(3);
        let u: Vec<f64> = m.nodes.iter().map(|p| p[0] * p[1] + 0.3 * p[0]).collect();
        let t = 1.7;
        let ut: Vec<f64> = u.iter().map(|v| t * v).collect();
        let r = 3.0;
        let a1 = apply_a(&m, &u, 1.5, r, 0.0).unwrap();
        let at = apply_a(&m, &ut, 1.5, r, 0.0).unwrap();
        for (x, y) in at.iter().zip(&a1) {
            assert!((x - t.powf(r - 1.0) * y).abs() < 1e-12);
        }
    }

    #[test]
    fn apply_a_rejects_wrong_length() {
        let m = unit_mesh(2);
        assert!(matches!(
            apply_a(&m, &[0.0; 3], 1.0, 2.0, 0.0),
            Err(AssemblyError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tangent_at_r2_is_the_scaled_laplacian_stiffness() {
        let m = unit_mesh(3);
        let u: Vec<f64> = m.nodes.iter().map(|p| p[0] - p[1]).collect();
        let k = tangent_a(&m, &u, 2.5, 2.0, 0.0).unwrap();
        // At r = 2 the operator is linear: tangent * u = apply_a(u).
        let ku = k.matvec(&u);
        let au = apply_a(&m, &u, 2.5, 2.0, 0.0).unwrap();
        for (a, b) in ku.iter().zip(&au) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tangent_at_zero_field_scales_like_eps() {
        let m = unit_mesh(2);
        let z = vec![0.0; m.num_nodes()];
        let eps = 1e-3;
        let t4 = tangent_a(&m, &z, 1.0, 4.0, eps).unwrap();
        let k = tangent_a(&m, &z, 1.0, 2.0, 0.0).unwrap();
        // (eps^2)^{(r-2)/2} = eps^2 at r = 4 and zero gradient.
        for i in 0..m.num_nodes() {
            for j in 0..m.num_nodes() {
                assert!((t4.get(i, j) - eps * eps * k.get(i, j)).abs() < 1e-18);
            }
        }
    }

    #[test]
    fn tangent_requires_regularization_for_r_above_two() {
        let m = unit_mesh(2);
        let z = vec![0.0; m.num_nodes()];
        assert!(matches!(
            tangent_a(&m, &z, 1.0, 3.0, 0.0),
            Err(AssemblyError::UnregularizedTangent)
        ));
    }

    #[test]
    fn tangent_matches_finite_differences() {
        let m = unit_mesh(3);
        let u: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| (3.1 * p[0]).sin() * 0.4 + p[1] * p[0])
            .collect();
        let d: Vec<f64> = m
            .nodes
            .iter()
            .map(|p| (2.3 * p[1]).cos() * 0.3 + 0.1 * p[0])
            .collect();
        for r in [2.0, 3.0, 4.0] {
            let eps = 1e-2;
            let tan = tangent_a(&m, &u, 1.3, r, eps).unwrap();
            let td = tan.matvec(&d);
            let h = 1e-6;
            let up: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + h * b).collect();
            let um: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - h * b).collect();
            let ap = apply_a(&m, &up, 1.3, r, eps).unwrap();
            let am = apply_a(&m, &um, 1.3, r, eps).unwrap();
            let mut num = 0.0_f64;
            let mut den = 0.0_f64;
            for i in 0..m.num_nodes() {
                let fd = (ap[i] - am[i]) / (2.0 * h);
                num += (fd - td[i]).powi(2);
                den += td[i].powi(2);
            }
            assert!(num.sqrt() < 1e-5 * den.sqrt().max(1.0), "r = {r}");
        }
    }

    #[test]
    fn friction_residual_examples() {
        let m = unit_mesh(4);
        let zero = vec![0.0; m.num_nodes()];
        let g0 = friction_residual_g4(&m, &zero, 2.0, FrictionKind::SmoothSign).unwrap();
        assert!(g0.iter().all(|&v| v == 0.0));
        let ones = vec![1.0; m.num_nodes()];
        let gz = friction_residual_g4(&m, &ones, 0.0, FrictionKind::SmoothSign).unwrap();
        assert!(gz.iter().all(|&v| v == 0.0));
        let g1 = friction_residual_g4(&m, &ones, 2.0, FrictionKind::SmoothSign).unwrap();
        let total: f64 = g1.iter().sum();
        assert!((total - 2.0 / 2.0_f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn friction_is_antisymmetric_in_the_test_slot() {
        // J(u, v) = (G(u), v) is linear in v, so J(u, v) + J(u, -v) = 0.
        let m = unit_mesh(3);
        let u: Vec<f64> = m.nodes.iter().map(|p| p[0] * p[1]).collect();
        let v: Vec<f64> = m.nodes.iter().map(|p| p[1] - 0.5 * p[0]).collect();
        let gu = friction_residual_g4(&m, &u, 1.5, FrictionKind::SmoothSign).unwrap();
        let jv: f64 = gu.iter().zip(&v).map(|(a, b)| a * b).sum();
        let jnv: f64 = gu.iter().zip(v.iter().map(|x| -x)).map(|(a, b)| a * b).sum();
        assert_eq!(jv + jnv, 0.0);
    }

    #[test]
    fn friction_tangent_matches_finite_differences() {
        let m = unit_mesh(3);
        let u: Vec<f64> = m.nodes.iter().map(|p| p[0] - 0.4 * p[1]).collect();
        let d: Vec<f64> = m.nodes.iter().map(|p| 0.2 * p[0] * p[1] + 0.1).collect();
        let mut tan = BandMatrix::zeros(m.num_nodes(), m.half_bandwidth());
        friction_tangent_g4(&m, &u, 1.7, FrictionKind::SmoothSign, &mut tan).unwrap();
        let td = tan.matvec(&d);
        let h = 1e-6;
        let up: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + h * b).collect();
        let um: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - h * b).collect();
        let gp = friction_residual_g4(&m, &up, 1.7, FrictionKind::SmoothSign).unwrap();
        let gm = friction_residual_g4(&m, &um, 1.7, FrictionKind::SmoothSign).unwrap();
        for i in 0..m.num_nodes() {
            let fd = (gp[i] - gm[i]) / (2.0 * h);
            assert!((fd - td[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn load_vector_examples() {
        let m = unit_mesh(4);
        let f0 = load_vector(&m, [0.0, 0.0]);
        assert!(f0.iter().all(|&v| v == 0.0));
        let f1 = load_vector(&m, [1.0, 0.0]);
        let s1: f64 = f1.iter().sum();
        assert!((s1 - 1.0).abs() < 1e-14);
        let fl = load_vector(&m, [0.0, 1.0]);
        let sl: f64 = fl.iter().sum();
        assert!((sl - 0.5).abs() < 1e-14);
        // Support restricted to traction-segment nodes (x = 1 by default).
        for (i, &v) in f1.iter().enumerate() {
            if (m.nodes[i][0] - 1.0).abs() > 1e-12 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn norms_match_hand_values() {
        let m = unit_mesh(4);
        let u = field_x(&m);
        assert!((x_norm(&m, &u, 2.0) - 1.0).abs() < 1e-13);
        assert!((x_norm(&m, &u, 3.7) - 1.0).abs() < 1e-13);
        let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
        assert!((x_norm(&m, &u2, 3.0) - 2.0).abs() < 1e-13);

        let wide = build_rect_mesh(4, 2, 2.0, 1.0, BoundaryPartition::default()).unwrap();
        let lam = vec![3.0; wide.trace_edges(SegmentTag::G3).len()];
        assert!((y_norm(&wide, &lam, 2.0) - 3.0 * 2.0_f64.sqrt()).abs() < 1e-13);
        let zeros = vec![0.0; lam.len()];
        assert_eq!(y_norm(&wide, &zeros, 2.0), 0.0);
    }

    #[test]
    fn traction_dual_norm_is_exact_for_linear_f() {
        let m = unit_mesh(4);
        // f(s) = s on the unit-length side, r = 2: L^2 norm = 1/sqrt(3).
        let v = traction_dual_norm(&m, [0.0, 1.0], 2.0);
        assert!((v - (1.0 / 3.0_f64).sqrt()).abs() < 1e-14);
        // Constant f = 2, r = 3 (so r' = 1.5): (int 2^1.5)^{1/1.5} = 2.
        let c = traction_dual_norm(&m, [2.0, 0.0], 3.0);
        assert!((c - 2.0).abs() < 1e-13);
    }

    #[test]
    fn energy_examples() {
        let m = unit_mesh(4);
        let spec = ProblemSpec::new(1.0, 2.0, 0.0, 0.0, [1.0, 0.0], FrictionKind::SmoothSign).unwrap();
        let zero = vec![0.0; m.num_nodes()];
        assert_eq!(oracle_energy(&m, &zero, &spec).total, 0.0);
        let u = field_x(&m);
        let e = oracle_energy(&m, &u, &spec);
        assert!((e.bulk - 0.5).abs() < 1e-13);
        assert!((e.load + 1.0).abs() < 1e-13);
        assert!((e.total + 0.5).abs() < 1e-13);
        let sum = e.bulk + e.gamma3 + e.gamma4 + e.load;
        assert!((e.total - sum).abs() <= 1e-12 * e.total.abs().max(1.0));
    }

    #[test]
    fn energy_nonnegative_without_load() {
        let m = unit_mesh(3);
        let spec = ProblemSpec::new(1.0, 3.0, 0.7, 1.2, [0.0, 0.0], FrictionKind::SmoothSign).unwrap();
        let u: Vec<f64> = m.nodes.iter().map(|p| (p[0] - 0.3) * (p[1] + 0.2)).collect();
        assert!(oracle_energy(&m, &u, &spec).total >= 0.0);
    }

    #[test]
    fn coupling_row_sums_equal_edge_lengths() {
        let m = build_rect_mesh(5, 3, 2.0, 1.0, BoundaryPartition::default()).unwrap();
        let b = CouplingMatrix::from_mesh(&m);
        let ones = vec![1.0_f64; m.num_nodes()];
        let bu = b.apply(&ones);
        let edges = m.trace_edges(SegmentTag::G3);
        assert_eq!(bu.len(), edges.len());
        for (v, e) in bu.iter().zip(&edges) {
            assert!((v - e.length).abs() < 1e-14);
        }
    }

    #[test]
    fn coupling_pairing_matches_transpose() {
        let m = unit_mesh(4);
        let b = CouplingMatrix::from_mesh(&m);
        let v: Vec<f64> = m.nodes.iter().map(|p| p[0] + 2.0 * p[1]).collect();
        let lam: Vec<f64> = (0..b.num_edges()).map(|e| 0.3 * e as f64 - 0.5).collect();
        let direct = b.pairing(&v, &lam);
        let mut bt = vec![0.0; m.num_nodes()];
        b.add_transpose(&lam, &mut bt);
        let via_t: f64 = bt.iter().zip(&v).map(|(a, b)| a * b).sum();
        assert!((direct - via_t).abs() < 1e-13);
    }

    #[test]
    fn abs_power_integrals_match_hand_values() {
        // w goes -1 -> 1 over unit length: int |w| = 1/2, int w^2 = 1/3.
        assert!((abs_power_edge_integral(-1.0_f64, 1.0, 1.0, 1.0) - 0.5).abs() < 1e-14);
        assert!((abs_power_edge_integral(-1.0_f64, 1.0, 1.0, 2.0) - 1.0 / 3.0).abs() < 1e-14);
        // Constant w = 2: int |w|^p = len * 2^p.
        assert!((abs_power_edge_integral(2.0_f64, 2.0, 0.5, 3.0) - 4.0).abs() < 1e-14);
    }

    #[test]
    fn abs_power_gradient_matches_finite_differences() {
        let h = 1e-7;
        for (ua, ub, p) in [(0.3_f64, 1.2, 1.0), (-0.7, 0.4, 2.0), (0.5, 0.9, 2.5)] {
            let (ga, gb) = abs_power_edge_gradient(ua, ub, 0.8, p);
            let fa = (abs_power_edge_integral(ua + h, ub, 0.8, p)
                - abs_power_edge_integral(ua - h, ub, 0.8, p))
                / (2.0 * h);
            let fb = (abs_power_edge_integral(ua, ub + h, 0.8, p)
                - abs_power_edge_integral(ua, ub - h, 0.8, p))
                / (2.0 * h);
            assert!((ga - fa).abs() < 1e-6, "ua {ua} ub {ub} p {p}");
            assert!((gb - fb).abs() < 1e-6, "ua {ua} ub {ub} p {p}");
        }
    }

    #[test]
    fn smoothed_abs_approaches_abs() {
        let exact = abs_power_edge_integral(-0.4_f64, 1.0, 1.3, 1.0);
        let smooth = smoothed_abs_edge_integral(-0.4, 1.0, 1.3, 1e-9);
        assert!((exact - smooth).abs() < 1e-8);
        // Gradient check against finite differences.
        let h = 1e-7;
        let (ga, gb) = smoothed_abs_edge_gradient(-0.4_f64, 1.0, 1.3, 1e-2);
        let fa = (smoothed_abs_edge_integral(-0.4 + h, 1.0, 1.3, 1e-2)
            - smoothed_abs_edge_integral(-0.4 - h, 1.0, 1.3, 1e-2))
            / (2.0 * h);
        let fb = (smoothed_abs_edge_integral(-0.4, 1.0 + h, 1.3, 1e-2)
            - smoothed_abs_edge_integral(-0.4, 1.0 - h, 1.3, 1e-2))
            / (2.0 * h);
        assert!((ga - fa).abs() < 1e-6);
        assert!((gb - fb).abs() < 1e-6);
    }

    #[test]
    fn spec_validation_lists_violations() {
        let err = ProblemSpec::<f64>::new(-1.0, 1.5, -0.1, -2.0, [f64::NAN, 0.0], FrictionKind::SmoothSign)
            .unwrap_err();
        let SpecError::Invalid { reasons } = err;
        assert_eq!(reasons.len(), 5);
        assert!(reasons.iter().any(|m| m.contains("r >= 2")));
    }
}
