//! Energy-minimization oracle, independent of the Uzawa path.
//!
//! The discrete solution minimizes the convex energy
//! `(mu*/r) int |grad u|^r + theta int_{contact} |trace u| + g int_{upper}
//! potential(trace u) - int_{traction} f trace u` over the clamped subspace.
//! The nonsmooth contact term is smoothed as `|s| -> sqrt(s^2 + delta^2)`
//! with `delta` driven down a fixed decade schedule, each level warm-started
//! from the previous one and solved by Newton with an energy line search.
//! The multiplier is then recovered by least squares and clamped.

use super::{linear_warm_start, recover_multiplier, DiscreteState, SolverConfig, SolverError};
use crate::assembly::{
    apply_a, friction_residual_g4, friction_tangent_g4, gauss2, oracle_energy,
    smoothed_abs_edge_gradient, smoothed_abs_edge_integral, tangent_a, DiscreteOperatorSet,
    EnergyValue, ProblemSpec,
};
use crate::linalg::euclidean_norm;
use crate::mesh::Mesh;
use crate::scalar::{lit, Real};
use serde::Serialize;

/// Outcome record of the oracle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport<T> {
    /// Exact (unsmoothed) energy of the returned primal field.
    pub energy: EnergyValue<T>,
    /// Accepted Newton steps over all smoothing levels.
    pub newton_iters_total: usize,
    /// Estimated distance to stationarity in the last smoothed problem:
    /// half the squared Newton decrement, normalized by `max(1, |E|)`.
    pub stationarity_gap: T,
    /// Last smoothing parameter of the schedule.
    pub final_delta: T,
}

fn smoothed_energy<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    ops: &DiscreteOperatorSet<T>,
    u: &[T],
    delta: T,
) -> T {
    let mut smooth_spec = *spec;
    smooth_spec.theta = T::zero();
    let mut e = oracle_energy(mesh, u, &smooth_spec).total;
    if spec.theta > T::zero() {
        let contact: T = ops
            .gamma3
            .iter()
            .map(|edge| {
                smoothed_abs_edge_integral(u[edge.nodes[0]], u[edge.nodes[1]], edge.length, delta)
            })
            .sum();
        e += spec.theta * contact;
    }
    e
}

fn smoothed_gradient<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    ops: &DiscreteOperatorSet<T>,
    u: &[T],
    delta: T,
) -> Result<Vec<T>, SolverError> {
    let mut grad = apply_a(mesh, u, spec.mu_star, spec.r, T::zero())?;
    let g4 = friction_residual_g4(mesh, u, spec.g, spec.j_kind)?;
    for (gr, gv) in grad.iter_mut().zip(&g4) {
        *gr += *gv;
    }
    if spec.theta > T::zero() {
        for edge in &ops.gamma3 {
            let [a, b] = edge.nodes;
            let (ga, gb) = smoothed_abs_edge_gradient(u[a], u[b], edge.length, delta);
            grad[a] += spec.theta * ga;
            grad[b] += spec.theta * gb;
        }
    }
    for (gr, f) in grad.iter_mut().zip(&ops.load) {
        *gr -= *f;
    }
    for &i in &mesh.dirichlet_nodes {
        grad[i] = T::zero();
    }
    Ok(grad)
}

/// Minimizes the smoothed energy over the free nodes for the fixed schedule
/// of smoothing parameters, returning the state and a stationarity record.
pub fn oracle_minimize<T: Real>(
    mesh: &Mesh<T>,
    spec: &ProblemSpec<T>,
    cfg: &SolverConfig<T>,
) -> Result<(DiscreteState<T>, OracleReport<T>), SolverError> {
    cfg.validate()?;
    let ops = DiscreteOperatorSet::build(mesh, spec);
    let mut u = linear_warm_start(mesh, spec, &ops, &vec![T::zero(); ops.coupling.num_edges()])?;

    let deltas: Vec<T> = if spec.theta > T::zero() {
        (2..=8).map(|k| lit::<T>(10f64.powi(-k))).collect()
    } else {
        vec![T::one()]
    };
    let gap_tol = lit::<T>(1e-14);
    let half = lit::<T>(0.5);
    let mut newton_total = 0;

    let hessian = |u: &[T], delta: T| -> Result<crate::linalg::BandCholesky<T>, SolverError> {
        let mut h = tangent_a(mesh, u, spec.mu_star, spec.r, cfg.eps)?;
        friction_tangent_g4(mesh, u, spec.g, spec.j_kind, &mut h)?;
        if spec.theta > T::zero() {
            let rule = gauss2::<T>();
            for edge in &ops.gamma3 {
                let [a, b] = edge.nodes;
                for (t, w) in rule {
                    let phi_a = T::one() - t;
                    let phi_b = t;
                    let wq = u[a] * phi_a + u[b] * phi_b;
                    let q = wq * wq + delta * delta;
                    let c = spec.theta * edge.length * w * delta * delta / (q * q.sqrt());
                    h.add(a, a, c * phi_a * phi_a);
                    h.add(b, b, c * phi_b * phi_b);
                    h.add(a.max(b), a.min(b), c * phi_a * phi_b);
                }
            }
        }
        for &i in &mesh.dirichlet_nodes {
            h.eliminate_row_col(i);
        }
        Ok(h.cholesky()?)
    };

    for &delta in &deltas {
        let mut energy = smoothed_energy(mesh, spec, &ops, &u, delta);
        for _ in 0..cfg.max_newton {
            let grad = smoothed_gradient(mesh, spec, &ops, &u, delta)?;
            if euclidean_norm(&grad) <= cfg.newton_tol {
                break;
            }
            let chol = hessian(&u, delta)?;
            let neg: Vec<T> = grad.iter().map(|&v| -v).collect();
            let step = chol.solve(&neg);
            // Squared Newton decrement = grad^T H^{-1} grad; half of it
            // estimates the remaining energy gap of the smoothed problem.
            let dec2: T = grad.iter().zip(&step).map(|(&g, &s)| -g * s).sum();
            let scale = T::one().max(energy.abs());
            let mut t = T::one();
            let mut accepted = false;
            for _ in 0..60 {
                let trial: Vec<T> = u.iter().zip(&step).map(|(&a, &b)| a + t * b).collect();
                let e_trial = smoothed_energy(mesh, spec, &ops, &trial, delta);
                if e_trial.is_finite() && e_trial < energy {
                    u = trial;
                    energy = e_trial;
                    accepted = true;
                    break;
                }
                t = t * half;
            }
            if accepted {
                newton_total += 1;
            } else if dec2 * half <= lit::<T>(1e-12) * scale {
                // No descent representable in floating point: converged.
                break;
            } else {
                return Err(SolverError::LineSearchExhausted {
                    residual: euclidean_norm(&grad).as_f64(),
                });
            }
            if dec2 * half <= gap_tol * scale {
                break;
            }
        }
    }

    // Final stationarity estimate in the last smoothed problem.
    let delta_last = *deltas.last().expect("nonempty schedule");
    let grad = smoothed_gradient(mesh, spec, &ops, &u, delta_last)?;
    let chol = hessian(&u, delta_last)?;
    let neg: Vec<T> = grad.iter().map(|&v| -v).collect();
    let step = chol.solve(&neg);
    let dec2: T = grad.iter().zip(&step).map(|(&g, &s)| -g * s).sum();
    let energy = oracle_energy(mesh, &u, spec);
    let gap = dec2 * half / T::one().max(energy.total.abs());

    let lam = recover_multiplier(mesh, spec, &u)?;
    let report = OracleReport {
        energy,
        newton_iters_total: newton_total,
        stationarity_gap: gap,
        final_delta: if spec.theta > T::zero() {
            delta_last
        } else {
            T::zero()
        },
    };
    Ok((DiscreteState { u, lam }, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{x_norm, FrictionKind};
    use crate::mesh::{build_rect_mesh, BoundaryPartition, SegmentTag};
    use crate::solver::uzawa_solve;

    fn unit_mesh(n: usize) -> Mesh<f64> {
        build_rect_mesh(n, n, 1.0, 1.0, BoundaryPartition::default()).unwrap()
    }

    fn spec(mu: f64, r: f64, theta: f64, g: f64, f: [f64; 2]) -> ProblemSpec<f64> {
        ProblemSpec::new(mu, r, theta, g, f, FrictionKind::SmoothSign).unwrap()
    }

    #[test]
    fn zero_load_minimizer_is_zero() {
        let m = unit_mesh(4);
        let s = spec(1.0, 2.0, 0.5, 0.5, [0.0, 0.0]);
        let cfg = SolverConfig::recommended(&s);
        let (state, report) = oracle_minimize(&m, &s, &cfg).unwrap();
        assert!(state.u.iter().all(|&v| v.abs() < 1e-9));
        assert!(report.stationarity_gap.abs() < 1e-10);
    }

    #[test]
    fn matches_uzawa_on_linear_manufactured_instance() {
        let m = unit_mesh(8);
        let s = spec(1.0, 2.0, 0.0, 0.0, [1.0, 0.0]);
        let cfg = SolverConfig::recommended(&s);
        let (uz, _) = uzawa_solve(&m, &s, &cfg, None).unwrap();
        let (or, report) = oracle_minimize(&m, &s, &cfg).unwrap();
        let diff: Vec<f64> = uz.u.iter().zip(&or.u).map(|(a, b)| a - b).collect();
        assert!(x_norm(&m, &diff, 2.0) < 1e-8);
        assert!(report.stationarity_gap < 1e-10);
        assert!(or.lam.iter().all(|&v| v.abs() < 1e-9));
    }

    #[test]
    fn strong_friction_bound_sticks_the_contact_trace() {
        let m = unit_mesh(6);
        // theta far above the traction level forces stick on the contact side.
        let s = spec(1.0, 2.0, 10.0, 0.0, [1.0, 0.0]);
        let cfg = SolverConfig::recommended(&s);
        let (state, _) = oracle_minimize(&m, &s, &cfg).unwrap();
        for n in m.trace_nodes(SegmentTag::G3) {
            assert!(state.u[n].abs() <= 1e-6, "trace value {}", state.u[n]);
        }
    }

    #[test]
    fn frictional_oracle_agrees_with_uzawa() {
        let m = unit_mesh(6);
        let s = spec(1.0, 2.0, 0.2, 0.5, [1.0, 0.0]);
        let cfg = SolverConfig::recommended(&s);
        let (uz, diag) = uzawa_solve(&m, &s, &cfg, None).unwrap();
        assert!(diag.converged);
        let (or, report) = oracle_minimize(&m, &s, &cfg).unwrap();
        let diff: Vec<f64> = uz.u.iter().zip(&or.u).map(|(a, b)| a - b).collect();
        let rel = x_norm(&m, &diff, 2.0) / x_norm(&m, &uz.u, 2.0).max(1.0);
        assert!(rel < 1e-4, "relative gap {rel}");
        assert!(report.stationarity_gap < 1e-10);
    }
}
