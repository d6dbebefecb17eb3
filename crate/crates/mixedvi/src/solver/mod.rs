//! Saddle-point solver: outer Uzawa update on the multiplier, inner Newton
//! solve of the nonlinear primal equation, plus multiplier recovery and the
//! independent energy-minimization oracle in [`oracle`].
//!
//! The inner equation is `A(u) + G(u) + B^T lam = F` on the free nodes: the
//! variational inequality in the primal slot collapses to an equation because
//! the upper-segment friction term is linear in its test argument. The outer
//! update is the projected ascent step `lam <- clamp(lam + rho B u, +-theta)`.

mod oracle;

pub use oracle::{oracle_minimize, OracleReport};

use crate::assembly::{
    apply_a, data_violations, friction_residual_g4, friction_tangent_g4, tangent_a,
    AssemblyError, DiscreteOperatorSet, ProblemSpec, SpecError,
};
use crate::linalg::{dense_spd_solve, euclidean_norm, DenseMatrix, LinalgError};
use crate::mesh::Mesh;
use crate::scalar::{lit, Real};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

/// Primal nodal field plus the per-contact-edge multiplier.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscreteState<T> {
    /// Nodal axial displacement; zero on the clamped segment.
    pub u: Vec<T>,
    /// Friction traction multiplier, one value per contact edge in trace
    /// order; always within `[-theta, theta]`.
    pub lam: Vec<T>,
}

/// Solver parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverConfig<T> {
    /// Gradient regularization inside Newton; the reported final residual
    /// uses the unregularized operator.
    pub eps: T,
    /// Uzawa multiplier step.
    pub rho: T,
    /// Euclidean residual tolerance of the inner Newton solve.
    pub newton_tol: T,
    /// Relative multiplier-update tolerance of the outer loop.
    pub uzawa_tol: T,
    /// Inner iteration cap.
    pub max_newton: usize,
    /// Outer iteration cap.
    pub max_uzawa: usize,
    /// Seed consumed by the randomized verification utilities (sampled
    /// constants, optimizer restarts); the solve itself is deterministic.
    pub seed: u64,
}

/// Violated solver-configuration constraints, one message per violation.
pub fn config_violations<T: Real>(cfg: &SolverConfig<T>) -> Vec<String> {
    let mut v = Vec::new();
    if !(cfg.eps > T::zero()) || !cfg.eps.is_finite() {
        v.push(format!(
            "eps = {} invalid: the gradient regularization must be positive",
            cfg.eps
        ));
    }
    if !(cfg.rho > T::zero()) || !cfg.rho.is_finite() {
        v.push(format!(
            "rho = {} invalid: the multiplier step must be positive",
            cfg.rho
        ));
    }
    if !(cfg.newton_tol > T::zero()) || !cfg.newton_tol.is_finite() {
        v.push(format!(
            "newton_tol = {} invalid: the inner residual tolerance must be positive",
            cfg.newton_tol
        ));
    }
    if !(cfg.uzawa_tol > T::zero()) || !cfg.uzawa_tol.is_finite() {
        v.push(format!(
            "uzawa_tol = {} invalid: the multiplier-update tolerance must be positive",
            cfg.uzawa_tol
        ));
    }
    if cfg.max_newton == 0 {
        v.push("max_newton = 0 invalid: the inner iteration cap must be at least 1".to_string());
    }
    if cfg.max_uzawa == 0 {
        v.push("max_uzawa = 0 invalid: the outer iteration cap must be at least 1".to_string());
    }
    v
}

impl<T: Real> SolverConfig<T> {
    /// Conservative defaults for a given instance: small step for the
    /// nonlinear growth exponents, the classical half step at `r = 2`.
    pub fn recommended(spec: &ProblemSpec<T>) -> Self {
        let rho = if spec.r == lit::<T>(2.0) {
            lit::<T>(0.5) * spec.mu_star
        } else {
            lit::<T>(0.1) * spec.mu_star
        };
        Self {
            eps: lit::<T>(1e-6),
            rho,
            newton_tol: lit::<T>(1e-10),
            uzawa_tol: lit::<T>(1e-9),
            max_newton: 80,
            max_uzawa: 50_000,
            seed: 0,
        }
    }

    /// Checks the configuration constraints.
    pub fn validate(&self) -> Result<(), SolverError> {
        let reasons = config_violations(self);
        if reasons.is_empty() {
            Ok(())
        } else {
            Err(SolverError::InvalidConfig { reasons })
        }
    }
}

/// Convergence record of one solve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveDiagnostics<T> {
    /// Outer iterations performed.
    pub uzawa_iters: usize,
    /// Accepted Newton steps over all inner solves.
    pub newton_iters_total: usize,
    /// Concatenated inner residual histories; nonincreasing within each
    /// inner solve after its first entry.
    pub residual_history: Vec<T>,
    /// Euclidean free-node residual of the unregularized equation at the
    /// returned state.
    pub final_residual: T,
    /// False when an iteration cap was hit before the tolerances.
    pub converged: bool,
}

/// Solver failures. Iteration-cap exhaustion is not an error: it is reported
/// through [`SolveDiagnostics::converged`] so that callers can distinguish
/// slow convergence from divergence.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    /// Invalid configuration values.
    #[error("invalid solver configuration: {}", reasons.join("; "))]
    InvalidConfig {
        /// One message per violated constraint.
        reasons: Vec<String>,
    },
    /// Invalid problem data.
    #[error(transparent)]
    Spec(#[from] SpecError),
    /// Assembly rejected an operand.
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    /// The tangent factorization failed.
    #[error("tangent factorization failed: {0}")]
    Factorization(#[from] LinalgError),
    /// Backtracking could not decrease the residual: divergence.
    #[error("line search exhausted at residual {residual:e}; Newton diverged")]
    LineSearchExhausted {
        /// Residual norm at the point of failure.
        residual: f64,
    },
    /// The coupling rows are linearly dependent on the free nodes.
    #[error("coupling matrix is rank deficient: multiplier recovery violates the discrete inf-sup")]
    CouplingRankDeficient,
    /// Initial state has wrong dimensions.
    #[error("state length mismatch: expected {expected}, got {got}")]
    BadState {
        /// Required length.
        expected: usize,
        /// Supplied length.
        got: usize,
    },
}

/// Componentwise projection onto the box `[-theta, theta]`.
pub fn project_lambda<T: Real>(lam: &[T], theta: T) -> Vec<T> {
    lam.iter().map(|&l| l.min(theta).max(-theta)).collect()
}

fn zero_dirichlet<T: Real>(mesh: &Mesh<T>, v: &mut [T]) {
    for &i in &mesh.dirichlet_nodes {
        v[i] = T::zero();
    }
}

/// Residual of the inner equation at `u` for fixed `lam`, zeroed on the
/// clamped nodes: `A_eps(u) + G(u) + B^T lam - F`.
fn inner_residual<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    ops: &DiscreteOperatorSet<T>,
    u: &[T],
    lam: &[T],
    eps: T,
) -> Result<Vec<T>, SolverError> {
    let mut res = apply_a(mesh, u, spec.mu_star, spec.r, eps)?;
    let g = friction_residual_g4(mesh, u, spec.g, spec.j_kind)?;
    for (r, gv) in res.iter_mut().zip(&g) {
        *r += *gv;
    }
    ops.coupling.add_transpose(lam, &mut res);
    for (r, f) in res.iter_mut().zip(&ops.load) {
        *r -= *f;
    }
    zero_dirichlet(mesh, &mut res);
    Ok(res)
}

/// Outcome of one inner Newton solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome<T> {
    /// Final primal iterate.
    pub u: Vec<T>,
    /// Accepted Newton steps.
    pub iterations: usize,
    /// Euclidean residual norm at the final iterate.
    pub residual_norm: T,
    /// Residual norms, starting with the initial iterate; strictly
    /// decreasing after the first entry.
    pub history: Vec<T>,
    /// False when `max_newton` was hit above tolerance.
    pub converged: bool,
}

/// Solves the inner nonlinear equation at fixed multiplier by Newton with
/// a backtracking line search on the residual norm.
pub fn newton_inner<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    lam: &[T],
    cfg: &SolverConfig<T>,
    u0: &[T],
) -> Result<NewtonOutcome<T>, SolverError> {
    cfg.validate()?;
    let ops = DiscreteOperatorSet::build(mesh, spec);
    newton_with_ops(mesh, spec, &ops, lam, cfg, u0)
}

fn newton_with_ops<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    ops: &DiscreteOperatorSet<T>,
    lam: &[T],
    cfg: &SolverConfig<T>,
    u0: &[T],
) -> Result<NewtonOutcome<T>, SolverError> {
    if u0.len() != mesh.num_nodes() {
        return Err(SolverError::BadState {
            expected: mesh.num_nodes(),
            got: u0.len(),
        });
    }
    let mut u = u0.to_vec();
    zero_dirichlet(mesh, &mut u);
    let mut res = inner_residual(mesh, spec, ops, &u, lam, cfg.eps)?;
    let mut rnorm = euclidean_norm(&res);
    let mut history = vec![rnorm];
    let mut iterations = 0;
    let half = lit::<T>(0.5);
    while rnorm > cfg.newton_tol {
        if iterations >= cfg.max_newton {
            return Ok(NewtonOutcome {
                u,
                iterations,
                residual_norm: rnorm,
                history,
                converged: false,
            });
        }
        let mut tan = tangent_a(mesh, &u, spec.mu_star, spec.r, cfg.eps)?;
        friction_tangent_g4(mesh, &u, spec.g, spec.j_kind, &mut tan)?;
        for &i in &mesh.dirichlet_nodes {
            tan.eliminate_row_col(i);
        }
        let chol = tan.cholesky()?;
        let neg: Vec<T> = res.iter().map(|&v| -v).collect();
        let delta = chol.solve(&neg);
        // The tangent is symmetric positive definite, so the Newton direction
        // decreases the residual norm for small enough steps.
        let mut t = T::one();
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<T> = u.iter().zip(&delta).map(|(&a, &b)| a + t * b).collect();
            let tres = inner_residual(mesh, spec, ops, &trial, lam, cfg.eps)?;
            let tnorm = euclidean_norm(&tres);
            if tnorm.is_finite() && tnorm < rnorm {
                u = trial;
                res = tres;
                rnorm = tnorm;
                accepted = true;
                break;
            }
            t = t * half;
        }
        if !accepted {
            return Err(SolverError::LineSearchExhausted {
                residual: rnorm.as_f64(),
            });
        }
        history.push(rnorm);
        iterations += 1;
    }
    Ok(NewtonOutcome {
        u,
        iterations,
        residual_norm: rnorm,
        history,
        converged: true,
    })
}

/// Primal field of the linear (`r = 2`) instance with the same data; used to
/// warm-start Newton away from the degenerate zero-gradient state.
fn linear_warm_start<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    ops: &DiscreteOperatorSet<T>,
    lam: &[T],
) -> Result<Vec<T>, SolverError> {
    let zeros = vec![T::zero(); mesh.num_nodes()];
    let mut k = tangent_a(mesh, &zeros, spec.mu_star, lit::<T>(2.0), T::zero())?;
    for &i in &mesh.dirichlet_nodes {
        k.eliminate_row_col(i);
    }
    let mut rhs = ops.load.clone();
    let neg: Vec<T> = lam.iter().map(|&l| -l).collect();
    ops.coupling.add_transpose(&neg, &mut rhs);
    zero_dirichlet(mesh, &mut rhs);
    Ok(k.cholesky()?.solve(&rhs))
}

/// Uzawa saddle-point iteration.
///
/// Without an initial state the multiplier starts at zero (always feasible)
/// and the primal field at the linear warm start. Stops when the relative
/// multiplier update falls below `uzawa_tol` with the inner equation solved
/// to `newton_tol`; cap exhaustion returns the best iterate with
/// `converged = false`.
pub fn uzawa_solve<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    cfg: &SolverConfig<T>,
    initial: Option<&DiscreteState<T>>,
) -> Result<(DiscreteState<T>, SolveDiagnostics<T>), SolverError> {
    let reasons = data_violations(spec.mu_star, spec.r, spec.theta, spec.g, spec.f_coeffs);
    if !reasons.is_empty() {
        return Err(SolverError::Spec(SpecError::Invalid { reasons }));
    }
    cfg.validate()?;
    let ops = DiscreteOperatorSet::build(mesh, spec);
    let m = ops.coupling.num_edges();

    let (mut u, mut lam) = match initial {
        Some(s) => {
            if s.u.len() != mesh.num_nodes() {
                return Err(SolverError::BadState {
                    expected: mesh.num_nodes(),
                    got: s.u.len(),
                });
            }
            if s.lam.len() != m {
                return Err(SolverError::BadState {
                    expected: m,
                    got: s.lam.len(),
                });
            }
            let mut u = s.u.clone();
            zero_dirichlet(mesh, &mut u);
            (u, project_lambda(&s.lam, spec.theta))
        }
        None => {
            let lam = vec![T::zero(); m];
            let u = linear_warm_start(mesh, spec, &ops, &lam)?;
            (u, lam)
        }
    };

    let rc = spec.r_conjugate();
    let edge_norm = |v: &[T]| -> T {
        ops.gamma3
            .iter()
            .zip(v)
            .map(|(e, &x)| e.length * x.abs().powf(rc))
            .sum::<T>()
            .powf(T::one() / rc)
    };

    let mut history: Vec<T> = Vec::new();
    let mut newton_total = 0;
    let mut uzawa_iters = 0;
    let mut converged = false;
    for _ in 0..cfg.max_uzawa {
        let inner = newton_with_ops(mesh, spec, &ops, &lam, cfg, &u)?;
        u = inner.u;
        newton_total += inner.iterations;
        history.extend_from_slice(&inner.history);
        uzawa_iters += 1;

        let bu = ops.coupling.apply(&u);
        let next: Vec<T> = lam
            .iter()
            .zip(&bu)
            .map(|(&l, &b)| (l + cfg.rho * b).min(spec.theta).max(-spec.theta))
            .collect();
        let change: Vec<T> = next.iter().zip(&lam).map(|(&a, &b)| a - b).collect();
        let delta = edge_norm(&change);
        lam = next;
        if !inner.converged {
            break;
        }
        if delta <= cfg.uzawa_tol * T::one().max(edge_norm(&lam)) {
            converged = true;
            break;
        }
    }

    if converged {
        // Re-solve the primal equation at the final multiplier so the
        // returned pair satisfies the inner equation together.
        let inner = newton_with_ops(mesh, spec, &ops, &lam, cfg, &u)?;
        converged = inner.converged;
        u = inner.u;
        newton_total += inner.iterations;
        history.extend_from_slice(&inner.history);
    }

    let final_res = inner_residual(mesh, spec, &ops, &u, &lam, T::zero())?;
    let diag = SolveDiagnostics {
        uzawa_iters,
        newton_iters_total: newton_total,
        residual_history: history,
        final_residual: euclidean_norm(&final_res),
        converged,
    };
    Ok((DiscreteState { u, lam }, diag))
}

/// Least-squares multiplier recovery: solves `B^T lam = F - A(u) - G(u)` in
/// the least-squares sense over the free coupling nodes, then clamps into
/// the admissible box.
pub fn recover_multiplier<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    u: &[T],
) -> Result<Vec<T>, SolverError> {
    let ops = DiscreteOperatorSet::build(mesh, spec);
    let m = ops.coupling.num_edges();
    let mut rhs = ops.load.clone();
    let a = apply_a(mesh, u, spec.mu_star, spec.r, T::zero())?;
    let g = friction_residual_g4(mesh, u, spec.g, spec.j_kind)?;
    for i in 0..rhs.len() {
        rhs[i] -= a[i] + g[i];
    }
    // Normal equations of the transposed coupling map restricted to free
    // nodes; full rank because consecutive rows overlap in one node only.
    let mut normal = DenseMatrix::zeros(m, m);
    let mut proj = vec![T::zero(); m];
    let rows = ops.coupling.rows();
    for (e, row) in rows.iter().enumerate() {
        for (k, &n) in row.nodes.iter().enumerate() {
            if mesh.is_dirichlet(n) {
                continue;
            }
            proj[e] += row.weights[k] * rhs[n];
            for (e2, row2) in rows.iter().enumerate() {
                for (k2, &n2) in row2.nodes.iter().enumerate() {
                    if n2 == n {
                        normal.add(e, e2, row.weights[k] * row2.weights[k2]);
                    }
                }
            }
        }
    }
    let lam = dense_spd_solve(&normal, &proj).map_err(|_| SolverError::CouplingRankDeficient)?;
    Ok(project_lambda(&lam, spec.theta))
}

/// Deterministic pseudo-random state for seeded-start experiments: uniform
/// nodal values in `[-1, 1]` (zeroed on the clamped segment) and a feasible
/// multiplier.
pub fn random_state<T: Real>(mesh: &Mesh<T>, theta: T, seed: u64) -> DiscreteState<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = crate::assembly::CouplingMatrix::from_mesh(mesh).num_edges();
    let mut u: Vec<T> = (0..mesh.num_nodes())
        .map(|_| lit::<T>(rng.random_range(-1.0..1.0)))
        .collect();
    zero_dirichlet(mesh, &mut u);
    let lam: Vec<T> = (0..m)
        .map(|_| theta * lit::<T>(rng.random_range(-1.0..1.0)))
        .collect();
    DiscreteState { u, lam }
}
