//! Derivative-free parameter optimization over problem data: golden-section
//! search for the scalar friction-threshold family, Nelder-Mead with box
//! clipping for the multi-coefficient families.

use super::AnalysisError;
use crate::assembly::{
    abs_power_edge_integral, conjugate_exponent, traction_dual_norm, x_norm, y_norm, ProblemSpec,
};
use crate::mesh::{Mesh, SegmentTag};
use crate::scalar::{lit, Real};
use crate::solver::{uzawa_solve, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// One recorded cost evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation<T> {
    /// Evaluated (clipped) parameter point.
    pub p: Vec<T>,
    /// Cost at the point; infinite when the forward solve failed.
    pub cost: T,
    /// Whether the forward solve converged.
    pub solved: bool,
}

/// Outcome of an optimization run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizationResult<T> {
    /// Best evaluated parameter point.
    pub p_star: Vec<T>,
    /// Cost at `p_star`; equals the minimum cost in `trace`.
    pub cost_star: T,
    /// Number of forward solves spent.
    pub evaluations: usize,
    /// Every evaluation in order.
    pub trace: Vec<Evaluation<T>>,
}

/// Cost functional acting on the solved state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CostSpec<T> {
    /// `alpha ||u - u_target||_X^r + beta ||lam - lam_target||_Y^{r'}
    /// + delta ||p||_W^2` over the full data family
    /// `p = (f0, f1, theta, g)`; the parameter norm squares the traction
    /// dual norm and the two scalars.
    StateTracking {
        /// Weight of the primal misfit.
        alpha: T,
        /// Weight of the multiplier misfit.
        beta: T,
        /// Weight of the parameter norm.
        delta: T,
        /// Primal target, one value per mesh node. May be empty when
        /// `alpha = 0`.
        u_target: Vec<T>,
        /// Multiplier target, one value per contact edge. May be empty when
        /// `beta = 0`.
        lambda_target: Vec<T>,
    },
    /// `alpha ||trace u - u_target||_Z^2 + delta ||f||_{Z'}^2` over the
    /// traction coefficients `p = (f0, f1)`.
    TractionTracking {
        /// Weight of the trace misfit.
        alpha: T,
        /// Weight of the traction norm.
        delta: T,
        /// Target trace values, one per traction-segment trace node. May be
        /// empty when `alpha = 0`.
        target_trace: Vec<T>,
    },
    /// `||trace u - u_target||_Y` over the scalar friction threshold
    /// `p = (g)`.
    ContactTracking {
        /// Target trace values, one per contact-segment trace node.
        target_trace: Vec<T>,
    },
}

/// Admissible parameter set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum AdmissibleSet<T> {
    /// Box for the full data family: traction coefficients in
    /// `[f_lo, f_hi]`, contact bound in `[0, theta_max]`, friction threshold
    /// in `[0, g_max]`.
    DataBox {
        /// Lower traction-coefficient corner.
        f_lo: [T; 2],
        /// Upper traction-coefficient corner.
        f_hi: [T; 2],
        /// Upper contact bound.
        theta_max: T,
        /// Upper friction threshold.
        g_max: T,
    },
    /// Box for the traction coefficients only.
    TractionBox {
        /// Lower corner.
        f_lo: [T; 2],
        /// Upper corner.
        f_hi: [T; 2],
    },
    /// Interval `[0, g_max]` for the friction threshold, `g_max > 0`.
    FrictionInterval {
        /// Upper friction threshold.
        g_max: T,
    },
}

impl<T: Real> AdmissibleSet<T> {
    /// Parameter dimension of the set.
    pub fn dim(&self) -> usize {
        match self {
            AdmissibleSet::DataBox { .. } => 4,
            AdmissibleSet::TractionBox { .. } => 2,
            AdmissibleSet::FrictionInterval { .. } => 1,
        }
    }

    fn bounds(&self) -> (Vec<T>, Vec<T>) {
        match *self {
            AdmissibleSet::DataBox {
                f_lo,
                f_hi,
                theta_max,
                g_max,
            } => (
                vec![f_lo[0], f_lo[1], T::zero(), T::zero()],
                vec![f_hi[0], f_hi[1], theta_max, g_max],
            ),
            AdmissibleSet::TractionBox { f_lo, f_hi } => {
                (vec![f_lo[0], f_lo[1]], vec![f_hi[0], f_hi[1]])
            }
            AdmissibleSet::FrictionInterval { g_max } => (vec![T::zero()], vec![g_max]),
        }
    }

    fn validate(&self) -> Result<(), AnalysisError> {
        let (lo, hi) = self.bounds();
        for (l, h) in lo.iter().zip(&hi) {
            if !(l.is_finite() && h.is_finite() && l <= h) {
                return Err(AnalysisError::InvalidRequest(format!(
                    "admissible set is empty or unbounded: [{l}, {h}]"
                )));
            }
        }
        if let AdmissibleSet::FrictionInterval { g_max } = self {
            if !(*g_max > T::zero()) {
                return Err(AnalysisError::InvalidRequest(format!(
                    "friction interval needs a positive upper threshold, got {g_max}"
                )));
            }
        }
        Ok(())
    }
}

/// Search configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MethodConfig {
    /// Forward-solve budget. `None` uses the method cap: 60 for the scalar
    /// search, 300 for Nelder-Mead. Values above the cap are rejected.
    pub budget: Option<usize>,
    /// Nelder-Mead restarts (first from the clipped origin, the rest
    /// seeded). Ignored by the scalar search.
    pub restarts: usize,
    /// Seed for the randomized restarts.
    pub seed: u64,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            budget: None,
            restarts: 3,
            seed: 0,
        }
    }
}

/// Trace of a golden-section run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoldenTrace<T> {
    /// Best evaluated abscissa.
    pub x: T,
    /// Cost at `x`.
    pub fx: T,
    /// Number of evaluations spent.
    pub evaluations: usize,
    /// Every evaluated `(x, f(x))` in order.
    pub points: Vec<(T, T)>,
    /// Bracket length after the initial placement and after each shrink;
    /// consecutive ratios are the inverse golden ratio.
    pub bracket_lengths: Vec<T>,
}

/// Golden-section minimization of `f` on `[a, b]` with at most `max_evals`
/// evaluations. Returns the best evaluated point.
pub fn golden_section_minimize<T: Real, F: FnMut(T) -> T>(
    mut f: F,
    a: T,
    b: T,
    max_evals: usize,
) -> GoldenTrace<T> {
    let invphi = (lit::<T>(5.0).sqrt() - T::one()) / lit::<T>(2.0);
    let mut lo = a;
    let mut hi = b;
    let mut points = Vec::new();
    let mut bracket_lengths = vec![hi - lo];
    let mut eval = |x: T, pts: &mut Vec<(T, T)>| -> T {
        let v = f(x);
        pts.push((x, v));
        v
    };
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let mut f1 = eval(x1, &mut points);
    if points.len() < max_evals {
        let f2 = eval(x2, &mut points);
        let mut f2 = f2;
        while points.len() < max_evals {
            if f1 <= f2 {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - invphi * (hi - lo);
                f1 = eval(x1, &mut points);
            } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + invphi * (hi - lo);
                f2 = eval(x2, &mut points);
            }
            bracket_lengths.push(hi - lo);
            if hi - lo <= lit::<T>(1e-14) * (b - a).max(T::one()) {
                break;
            }
        }
    }
    let (bx, bf) = points
        .iter()
        .copied()
        .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap_or(std::cmp::Ordering::Equal))
        .expect("at least one evaluation");
    GoldenTrace {
        x: bx,
        fx: bf,
        evaluations: points.len(),
        points,
        bracket_lengths,
    }
}

fn clip<T: Real>(p: &[T], lo: &[T], hi: &[T]) -> Vec<T> {
    p.iter()
        .zip(lo.iter().zip(hi))
        .map(|(&x, (&l, &h))| x.max(l).min(h))
        .collect()
}

/// Nelder-Mead with clipping onto the box; every candidate is projected
/// before evaluation and stored projected. Runs until the budget closure
/// reports exhaustion or the simplex collapses.
fn nelder_mead<T: Real>(
    f: &mut dyn FnMut(&[T]) -> Option<T>,
    x0: &[T],
    lo: &[T],
    hi: &[T],
) -> Option<(Vec<T>, T)> {
    let d = x0.len();
    let quarter = lit::<T>(0.25);
    let mut simplex: Vec<(Vec<T>, T)> = Vec::with_capacity(d + 1);
    let x0 = clip(x0, lo, hi);
    simplex.push((x0.clone(), f(&x0)?));
    for i in 0..d {
        let width = hi[i] - lo[i];
        let mut v = x0.clone();
        if width > T::zero() {
            let step = quarter * width;
            v[i] = if x0[i] + step <= hi[i] {
                x0[i] + step
            } else {
                x0[i] - step
            };
        }
        let v = clip(&v, lo, hi);
        match f(&v) {
            Some(fv) => simplex.push((v, fv)),
            None => {
                let best = simplex
                    .into_iter()
                    .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap_or(std::cmp::Ordering::Equal))?;
                return Some(best);
            }
        }
    }
    let scale: T = lo
        .iter()
        .zip(hi)
        .map(|(&l, &h)| h - l)
        .fold(T::zero(), |acc, w| acc.max(w))
        .max(T::one());
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    loop {
        simplex.sort_by(|p, q| p.1.partial_cmp(&q.1).unwrap_or(std::cmp::Ordering::Equal));
        let spread = simplex[d].1 - simplex[0].1;
        let diam = simplex
            .iter()
            .skip(1)
            .map(|(v, _)| {
                v.iter()
                    .zip(&simplex[0].0)
                    .map(|(&a, &b)| (a - b).abs())
                    .fold(T::zero(), T::max)
            })
            .fold(T::zero(), T::max);
        if (spread.is_finite() && spread <= lit::<T>(1e-15) * simplex[0].1.abs().max(T::one()))
            || diam <= lit::<T>(1e-13) * scale
        {
            break;
        }
        let centroid: Vec<T> = (0..d)
            .map(|i| {
                simplex[..d].iter().map(|(v, _)| v[i]).sum::<T>() / lit::<T>(d as f64)
            })
            .collect();
        let worst = simplex[d].clone();
        let reflect: Vec<T> = centroid
            .iter()
            .zip(&worst.0)
            .map(|(&c, &w)| c + (c - w))
            .collect();
        let reflect = clip(&reflect, lo, hi);
        let Some(fr) = f(&reflect) else { break };
        if fr < simplex[0].1 {
            let expand: Vec<T> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(&c, &w)| c + two * (c - w))
                .collect();
            let expand = clip(&expand, lo, hi);
            let Some(fe) = f(&expand) else {
                simplex[d] = (reflect, fr);
                break;
            };
            simplex[d] = if fe < fr { (expand, fe) } else { (reflect, fr) };
            continue;
        }
        if fr < simplex[d - 1].1 {
            simplex[d] = (reflect, fr);
            continue;
        }
        // Contraction: toward the reflection when it improved on the worst
        // vertex, toward the worst vertex otherwise.
        let target = if fr < worst.1 { &reflect } else { &worst.0 };
        let contract: Vec<T> = centroid
            .iter()
            .zip(target)
            .map(|(&c, &t)| c + half * (t - c))
            .collect();
        let contract = clip(&contract, lo, hi);
        let Some(fc) = f(&contract) else { break };
        if fc < fr.min(worst.1) {
            simplex[d] = (contract, fc);
            continue;
        }
        // Shrink toward the best vertex.
        let best = simplex[0].0.clone();
        let mut exhausted = false;
        for k in 1..=d {
            let v: Vec<T> = simplex[k]
                .0
                .iter()
                .zip(&best)
                .map(|(&x, &b)| b + half * (x - b))
                .collect();
            let v = clip(&v, lo, hi);
            match f(&v) {
                Some(fv) => simplex[k] = (v, fv),
                None => {
                    exhausted = true;
                    break;
                }
            }
        }
        if exhausted {
            break;
        }
    }
    simplex
        .into_iter()
        .min_by(|p, q| p.1.partial_cmp(&q.1).unwrap_or(std::cmp::Ordering::Equal))
}

/// Squared Z-norm distance between the trace of `u` on the traction segment
/// and nodal target values.
fn trace_misfit_sq<T: Real>(mesh: &Mesh<T>, u: &[T], target: &[T], tag: SegmentTag, p: T) -> T {
    let nodes = mesh.trace_nodes(tag);
    let index = |node: usize| nodes.iter().position(|&k| k == node).expect("trace node");
    mesh.trace_edges(tag)
        .iter()
        .map(|e| {
            let da = u[e.nodes[0]] - target[index(e.nodes[0])];
            let db = u[e.nodes[1]] - target[index(e.nodes[1])];
            abs_power_edge_integral(da, db, e.length, p)
        })
        .sum::<T>()
        .powf(lit::<T>(2.0) / p)
}

/// Y-norm distance between the trace of `u` on the contact segment and nodal
/// target values.
fn contact_misfit<T: Real>(mesh: &Mesh<T>, u: &[T], target: &[T], r: T) -> T {
    let rc = conjugate_exponent(r);
    let nodes = mesh.trace_nodes(SegmentTag::G3);
    let index = |node: usize| nodes.iter().position(|&k| k == node).expect("trace node");
    mesh.trace_edges(SegmentTag::G3)
        .iter()
        .map(|e| {
            let da = u[e.nodes[0]] - target[index(e.nodes[0])];
            let db = u[e.nodes[1]] - target[index(e.nodes[1])];
            abs_power_edge_integral(da, db, e.length, rc)
        })
        .sum::<T>()
        .powf(T::one() / rc)
}

fn validate_cost<T: Real>(
    mesh: &Mesh<T>,
    cost: &CostSpec<T>,
) -> Result<(), AnalysisError> {
    let need = |name: &str, got: usize, want: usize| -> Result<(), AnalysisError> {
        if got == want {
            Ok(())
        } else {
            Err(AnalysisError::InvalidRequest(format!(
                "{name} has {got} entries, the mesh needs {want}"
            )))
        }
    };
    match cost {
        CostSpec::StateTracking {
            alpha,
            beta,
            delta,
            u_target,
            lambda_target,
        } => {
            for (name, w) in [("alpha", alpha), ("beta", beta), ("delta", delta)] {
                if !(*w >= T::zero()) {
                    return Err(AnalysisError::InvalidRequest(format!(
                        "cost weight {name} = {w} must be nonnegative"
                    )));
                }
            }
            if *alpha > T::zero() {
                need("u_target", u_target.len(), mesh.num_nodes())?;
            }
            if *beta > T::zero() {
                need(
                    "lambda_target",
                    lambda_target.len(),
                    mesh.trace_edges(SegmentTag::G3).len(),
                )?;
            }
            Ok(())
        }
        CostSpec::TractionTracking {
            alpha,
            delta,
            target_trace,
        } => {
            for (name, w) in [("alpha", alpha), ("delta", delta)] {
                if !(*w >= T::zero()) {
                    return Err(AnalysisError::InvalidRequest(format!(
                        "cost weight {name} = {w} must be nonnegative"
                    )));
                }
            }
            if *alpha > T::zero() {
                need(
                    "target_trace",
                    target_trace.len(),
                    mesh.trace_nodes(SegmentTag::G2).len(),
                )?;
            }
            Ok(())
        }
        CostSpec::ContactTracking { target_trace } => need(
            "target_trace",
            target_trace.len(),
            mesh.trace_nodes(SegmentTag::G3).len(),
        ),
    }
}

/// Problem data at a parameter point of the admissible set: the searched
/// coefficients replace the base data, everything else carries over.
pub fn apply_parameters<T: Real>(
    set: &AdmissibleSet<T>,
    base: &ProblemSpec<T>,
    p: &[T],
) -> Result<ProblemSpec<T>, crate::assembly::SpecError> {
    assert_eq!(p.len(), set.dim(), "parameter dimension");
    let (f, theta, g) = match set {
        AdmissibleSet::DataBox { .. } => ([p[0], p[1]], p[2], p[3]),
        AdmissibleSet::TractionBox { .. } => ([p[0], p[1]], base.theta, base.g),
        AdmissibleSet::FrictionInterval { .. } => (base.f_coeffs, base.theta, p[0]),
    };
    ProblemSpec::new(base.mu_star, base.r, theta, g, f, base.j_kind)
}

/// Cost of a single parameter point: clips onto the set, runs one forward
/// solve and evaluates the cost on the state. A failed or capped solve
/// yields infinite cost with `solved = false`.
pub fn evaluate_cost<T: Real>(
    mesh: &Mesh<T>,
    base: &ProblemSpec<T>,
    cost: &CostSpec<T>,
    set: &AdmissibleSet<T>,
    solver: &SolverConfig<T>,
    p: &[T],
) -> Evaluation<T> {
    let (lo, hi) = set.bounds();
    let p = clip(p, &lo, &hi);
    let (cost_val, solved) = match apply_parameters(set, base, &p) {
        Err(_) => (T::infinity(), false),
        Ok(spec_p) => match uzawa_solve(mesh, &spec_p, solver, None) {
            Err(_) => (T::infinity(), false),
            Ok((_, diag)) if !diag.converged => (T::infinity(), false),
            Ok((state, _)) => {
                let c = match cost {
                    CostSpec::StateTracking {
                        alpha,
                        beta,
                        delta,
                        u_target,
                        lambda_target,
                    } => {
                        let mut c = T::zero();
                        if *alpha > T::zero() {
                            let du: Vec<T> = state
                                .u
                                .iter()
                                .zip(u_target)
                                .map(|(&a, &b)| a - b)
                                .collect();
                            c += *alpha * x_norm(mesh, &du, base.r).powf(base.r);
                        }
                        if *beta > T::zero() {
                            let dl: Vec<T> = state
                                .lam
                                .iter()
                                .zip(lambda_target)
                                .map(|(&a, &b)| a - b)
                                .collect();
                            c += *beta
                                * y_norm(mesh, &dl, base.r).powf(conjugate_exponent(base.r));
                        }
                        if *delta > T::zero() {
                            let fd = traction_dual_norm(mesh, spec_p.f_coeffs, base.r);
                            c += *delta
                                * (fd * fd
                                    + spec_p.theta * spec_p.theta
                                    + spec_p.g * spec_p.g);
                        }
                        c
                    }
                    CostSpec::TractionTracking {
                        alpha,
                        delta,
                        target_trace,
                    } => {
                        let mut c = T::zero();
                        if *alpha > T::zero() {
                            c += *alpha
                                * trace_misfit_sq(
                                    mesh,
                                    &state.u,
                                    target_trace,
                                    SegmentTag::G2,
                                    base.r,
                                );
                        }
                        if *delta > T::zero() {
                            let fd = traction_dual_norm(mesh, spec_p.f_coeffs, base.r);
                            c += *delta * fd * fd;
                        }
                        c
                    }
                    CostSpec::ContactTracking { target_trace } => {
                        contact_misfit(mesh, &state.u, target_trace, base.r)
                    }
                };
                (c, true)
            }
        },
    };
    Evaluation {
        p,
        cost: cost_val,
        solved,
    }
}

/// Minimizes the cost over the admissible set by repeated forward solves.
///
/// Pairings: contact tracking with the friction interval (golden section),
/// state tracking with the data box and traction tracking with the traction
/// box (both Nelder-Mead). A failed forward solve charges the point an
/// infinite cost and is kept in the trace. Returns the best evaluated point;
/// optimality is best-found, not certified.
pub fn optimize<T: Real>(
    mesh: &Mesh<T>,
    base: &ProblemSpec<T>,
    cost: &CostSpec<T>,
    set: &AdmissibleSet<T>,
    solver: &SolverConfig<T>,
    method: &MethodConfig,
) -> Result<OptimizationResult<T>, AnalysisError> {
    set.validate()?;
    validate_cost(mesh, cost)?;
    solver.validate()?;
    let scalar = matches!(set, AdmissibleSet::FrictionInterval { .. });
    match (cost, set) {
        (CostSpec::ContactTracking { .. }, AdmissibleSet::FrictionInterval { .. })
        | (CostSpec::StateTracking { .. }, AdmissibleSet::DataBox { .. })
        | (CostSpec::TractionTracking { .. }, AdmissibleSet::TractionBox { .. }) => {}
        _ => {
            return Err(AnalysisError::InvalidRequest(
                "cost and admissible set do not pair: contact tracking takes the friction \
                 interval, state tracking the data box, traction tracking the traction box"
                    .to_string(),
            ))
        }
    }
    let cap = if scalar { 60 } else { 300 };
    let budget = method.budget.unwrap_or(cap);
    if budget > cap {
        return Err(AnalysisError::InvalidRequest(format!(
            "budget {budget} exceeds the forward-solve cap {cap} for this method"
        )));
    }
    let dim = set.dim();
    let min_budget = if scalar { 6 } else { (dim + 2) * method.restarts.max(1) };
    if budget < min_budget {
        return Err(AnalysisError::InvalidRequest(format!(
            "budget {budget} is below the minimum {min_budget} for this method"
        )));
    }
    if !scalar && method.restarts == 0 {
        return Err(AnalysisError::InvalidRequest(
            "Nelder-Mead needs at least one restart".to_string(),
        ));
    }

    let (lo, hi) = set.bounds();
    let trace: std::cell::RefCell<Vec<Evaluation<T>>> = std::cell::RefCell::new(Vec::new());
    {
        let evaluate = |p: &[T]| -> T {
            let e = evaluate_cost(mesh, base, cost, set, solver, p);
            let c = e.cost;
            trace.borrow_mut().push(e);
            c
        };

        if scalar {
            let g_max = hi[0];
            golden_section_minimize(|g| evaluate(&[g]), T::zero(), g_max, budget);
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(method.seed);
            let restarts = method.restarts;
            for k in 0..restarts {
                let remaining = budget - trace.borrow().len();
                let share = (budget / restarts).min(remaining);
                if share < dim + 2 {
                    break;
                }
                let allowed = trace.borrow().len() + share;
                let start: Vec<T> = if k == 0 {
                    vec![T::zero(); dim]
                } else {
                    lo.iter()
                        .zip(&hi)
                        .map(|(&l, &h)| {
                            l + (h - l) * lit::<T>(rng.random_range(0.0..1.0))
                        })
                        .collect()
                };
                let mut budgeted = |p: &[T]| -> Option<T> {
                    if trace.borrow().len() >= allowed {
                        return None;
                    }
                    Some(evaluate(p))
                };
                nelder_mead(&mut budgeted, &start, &lo, &hi);
            }
        }
    }

    let trace = trace.into_inner();
    let best = trace
        .iter()
        .enumerate()
        .min_by(|(_, p), (_, q)| {
            p.cost
                .partial_cmp(&q.cost)
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .map(|(i, _)| i)
        .ok_or_else(|| {
            AnalysisError::InvalidRequest("optimization made no evaluations".to_string())
        })?;
    Ok(OptimizationResult {
        p_star: trace[best].p.clone(),
        cost_star: trace[best].cost,
        evaluations: trace.len(),
        trace,
    })
}
