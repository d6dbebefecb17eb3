//! Data-perturbation convergence study: solve a sequence of instances whose
//! data tends to a base instance and record solution gaps against the base
//! solution.

use super::{build_probes, AnalysisError};
use crate::assembly::{x_norm, y_norm, CouplingMatrix, ProblemSpec};
use crate::mesh::Mesh;
use crate::scalar::{lit, Real};
use crate::solver::{uzawa_solve, SolverConfig};
use rayon::prelude::*;
use serde::Serialize;

/// How the data of the `n`-th instance is produced from the base data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Schedule<T> {
    /// Every instance equals the base instance.
    Identity,
    /// Additive perturbations decaying like `1/n`:
    /// `f_n = f + df/n`, `theta_n = theta + dtheta/n`, `g_n = g + dg/n`.
    OverN {
        /// Traction-coefficient perturbation.
        f_delta: [T; 2],
        /// Contact-bound perturbation.
        theta_delta: T,
        /// Friction-threshold perturbation.
        g_delta: T,
    },
    /// Every instance carries the given fixed data. Valid only when it equals
    /// the base data, since the schedule must converge to the base instance.
    Constant {
        /// Fixed traction coefficients.
        f_coeffs: [T; 2],
        /// Fixed contact bound.
        theta: T,
        /// Fixed friction threshold.
        g: T,
    },
}

impl<T: Real> Schedule<T> {
    /// Data of the `n`-th instance (`n >= 1`).
    pub fn data_at(&self, base: &ProblemSpec<T>, n: usize) -> ([T; 2], T, T) {
        match *self {
            Schedule::Identity => (base.f_coeffs, base.theta, base.g),
            Schedule::OverN {
                f_delta,
                theta_delta,
                g_delta,
            } => {
                let inv = T::one() / lit::<T>(n as f64);
                (
                    [
                        base.f_coeffs[0] + f_delta[0] * inv,
                        base.f_coeffs[1] + f_delta[1] * inv,
                    ],
                    base.theta + theta_delta * inv,
                    base.g + g_delta * inv,
                )
            }
            Schedule::Constant { f_coeffs, theta, g } => (f_coeffs, theta, g),
        }
    }

    /// Checks that the schedule converges to the base data and that every
    /// instance it generates has admissible data.
    pub fn validate(&self, base: &ProblemSpec<T>) -> Result<(), AnalysisError> {
        match *self {
            Schedule::Identity => Ok(()),
            Schedule::OverN {
                theta_delta,
                g_delta,
                ..
            } => {
                // Worst case is n = 1.
                if base.theta + theta_delta < T::zero() {
                    return Err(AnalysisError::BadPerturbedInstance {
                        n: 1,
                        reason: format!(
                            "contact bound {} is negative",
                            base.theta + theta_delta
                        ),
                    });
                }
                if base.g + g_delta < T::zero() {
                    return Err(AnalysisError::BadPerturbedInstance {
                        n: 1,
                        reason: format!(
                            "friction threshold {} is negative",
                            base.g + g_delta
                        ),
                    });
                }
                Ok(())
            }
            Schedule::Constant { f_coeffs, theta, g } => {
                let same = f_coeffs[0] == base.f_coeffs[0]
                    && f_coeffs[1] == base.f_coeffs[1]
                    && theta == base.theta
                    && g == base.g;
                if same {
                    Ok(())
                } else {
                    Err(AnalysisError::BadSchedule {
                        reason: "a constant schedule must carry exactly the base data; \
                                 a fixed offset never converges to the base instance"
                            .to_string(),
                    })
                }
            }
        }
    }
}

/// One row of the convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow<T> {
    /// Instance index.
    pub n: usize,
    /// Traction coefficients of the instance.
    pub f_coeffs: [T; 2],
    /// Contact bound of the instance.
    pub theta: T,
    /// Friction threshold of the instance.
    pub g: T,
    /// Primal gap `||u_n - u||_X` against the base solution.
    pub primal_gap: T,
    /// Coupling pairings `|b(v_k, lam_n - lam)|` at the five fixed probes.
    pub pairing_gaps: [T; 5],
    /// Diagnostic strong multiplier gap `||lam_n - lam||_Y`. Reported, never
    /// asserted: the theory controls only the weak pairings.
    pub multiplier_norm_gap: T,
    /// Outer iterations of the instance solve.
    pub uzawa_iters: usize,
    /// Total inner iterations of the instance solve.
    pub newton_iters_total: usize,
    /// Final residual of the instance solve.
    pub final_residual: T,
}

/// Result of a convergence study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable<T> {
    /// Indices of the solved instances, ascending.
    pub ns: Vec<usize>,
    /// One row per instance, in the order of `ns`.
    pub rows: Vec<ConvergenceRow<T>>,
    /// Primal norm of the base solution.
    pub base_primal_norm: T,
    /// Multiplier norm of the base solution.
    pub base_multiplier_norm: T,
}

/// Runs the study at instance indices `1..=n_count` (`n_count >= 3`).
pub fn convergence_study<T: Real>(
    mesh: &Mesh<T>,
    base: &ProblemSpec<T>,
    schedule: &Schedule<T>,
    n_count: usize,
    cfg: &SolverConfig<T>,
) -> Result<ConvergenceTable<T>, AnalysisError> {
    if n_count < 3 {
        return Err(AnalysisError::InvalidRequest(format!(
            "a convergence study needs at least 3 instances, got {n_count}"
        )));
    }
    let ns: Vec<usize> = (1..=n_count).collect();
    convergence_study_at(mesh, base, schedule, &ns, cfg)
}

/// Runs the study at an explicit ascending list of instance indices.
pub fn convergence_study_at<T: Real>(
    mesh: &Mesh<T>,
    base: &ProblemSpec<T>,
    schedule: &Schedule<T>,
    ns: &[usize],
    cfg: &SolverConfig<T>,
) -> Result<ConvergenceTable<T>, AnalysisError> {
    if ns.is_empty() {
        return Err(AnalysisError::InvalidRequest(
            "a convergence study needs at least one instance index".to_string(),
        ));
    }
    if ns.windows(2).any(|w| w[0] >= w[1]) || ns[0] == 0 {
        return Err(AnalysisError::InvalidRequest(
            "instance indices must be positive, distinct and ascending".to_string(),
        ));
    }
    schedule.validate(base)?;
    cfg.validate()?;

    let (base_state, base_diag) = uzawa_solve(mesh, base, cfg, None)?;
    if !base_diag.converged {
        return Err(AnalysisError::NotConverged {
            which: "base instance".to_string(),
            residual: base_diag.final_residual.as_f64(),
        });
    }
    let probes = build_probes(mesh);
    let coupling = CouplingMatrix::from_mesh(mesh);

    let rows: Vec<Result<ConvergenceRow<T>, AnalysisError>> = ns
        .par_iter()
        .map(|&n| {
            let (f_n, theta_n, g_n) = schedule.data_at(base, n);
            let spec_n = ProblemSpec::new(
                base.mu_star,
                base.r,
                theta_n,
                g_n,
                f_n,
                base.j_kind,
            )
            .map_err(|e| AnalysisError::BadPerturbedInstance {
                n,
                reason: e.to_string(),
            })?;
            let (state_n, diag_n) = uzawa_solve(mesh, &spec_n, cfg, None)?;
            if !diag_n.converged {
                return Err(AnalysisError::NotConverged {
                    which: format!("instance n = {n}"),
                    residual: diag_n.final_residual.as_f64(),
                });
            }
            let du: Vec<T> = state_n
                .u
                .iter()
                .zip(&base_state.u)
                .map(|(&a, &b)| a - b)
                .collect();
            let dl: Vec<T> = state_n
                .lam
                .iter()
                .zip(&base_state.lam)
                .map(|(&a, &b)| a - b)
                .collect();
            let mut pairing_gaps = [T::zero(); 5];
            for (slot, probe) in pairing_gaps.iter_mut().zip(&probes) {
                *slot = coupling.pairing(probe, &dl).abs();
            }
            Ok(ConvergenceRow {
                n,
                f_coeffs: f_n,
                theta: theta_n,
                g: g_n,
                primal_gap: x_norm(mesh, &du, base.r),
                pairing_gaps,
                multiplier_norm_gap: y_norm(mesh, &dl, base.r),
                uzawa_iters: diag_n.uzawa_iters,
                newton_iters_total: diag_n.newton_iters_total,
                final_residual: diag_n.final_residual,
            })
        })
        .collect();

    let mut out = Vec::with_capacity(rows.len());
    for row in rows {
        out.push(row?);
    }
    Ok(ConvergenceTable {
        ns: ns.to_vec(),
        rows: out,
        base_primal_norm: x_norm(mesh, &base_state.u, base.r),
        base_multiplier_norm: y_norm(mesh, &base_state.lam, base.r),
    })
}
