//! Task execution: runs the configured workflow and renders its artifacts.

use crate::config::{Indices, Run, Task};
use mixedvi::analysis::{
    apply_parameters, compute_constants, convergence_study, convergence_study_at, optimize,
    verify_bounds, vi_gap, AnalysisError, BoundCheck, ConstantsReport, CostSpec,
};
use mixedvi::assembly::{
    abs_power_edge_integral, oracle_energy, x_norm, y_norm, CouplingMatrix,
};
use mixedvi::mesh::SegmentTag;
use mixedvi::report::{
    convergence_csv, json_summary, optimization_csv, solution_lambda_csv, solution_u_csv,
    SCHEMA_VERSION,
};
use mixedvi::solver::{
    oracle_minimize, uzawa_solve, DiscreteState, SolveDiagnostics, SolverError,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Failure with its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Configuration, schema or request problems; exit 1.
    Config(Vec<String>),
    /// Solver non-convergence or numerical failure; exit 2.
    Solver(String),
    /// A verification assertion failed; exit 3.
    Verification(Vec<String>),
}

impl CliError {
    /// Process exit code of the failure class.
    pub fn code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    /// One message per line.
    pub fn lines(&self) -> Vec<String> {
        match self {
            CliError::Config(v) => v.clone(),
            CliError::Solver(m) => vec![m.clone()],
            CliError::Verification(v) => v.clone(),
        }
    }
}

fn from_analysis(e: AnalysisError) -> CliError {
    match e {
        AnalysisError::Solver(s) => CliError::Solver(s.to_string()),
        AnalysisError::NotConverged { .. } | AnalysisError::DualNormFailure { .. } => {
            CliError::Solver(e.to_string())
        }
        AnalysisError::Assembly(_) | AnalysisError::Linalg(_) => CliError::Solver(e.to_string()),
        AnalysisError::InfSupFailure { .. } => CliError::Verification(vec![e.to_string()]),
        AnalysisError::BadSchedule { .. }
        | AnalysisError::BadPerturbedInstance { .. }
        | AnalysisError::InvalidRequest(_) => CliError::Config(vec![e.to_string()]),
    }
}

/// Rendered artifacts plus a deferred failure: artifacts are written even
/// when the run exits nonzero (non-convergence, failed assertions).
pub struct TaskOutput {
    /// `(file name, contents)` pairs.
    pub artifacts: Vec<(String, String)>,
    /// Human-readable progress summary.
    pub summary: Vec<String>,
    /// Failure to report after writing artifacts.
    pub failure: Option<CliError>,
}

#[derive(Serialize)]
struct MeshMeta {
    nx: usize,
    ny: usize,
    width: f64,
    height: f64,
}

#[derive(Serialize)]
struct SolveSummary {
    converged: bool,
    uzawa_iters: usize,
    newton_iters_total: usize,
    final_residual: f64,
    primal_norm: f64,
    multiplier_norm: f64,
    energy_total: f64,
}

#[derive(Serialize)]
struct DiagnosticsDoc<'a> {
    schema_version: u32,
    task: &'a str,
    mesh: MeshMeta,
    problem: &'a mixedvi::ProblemSpec64,
    solver: &'a mixedvi::SolverConfig64,
    solve: SolveSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    convergence: Option<ConvergenceSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    optimization: Option<OptimizationSection>,
}

#[derive(Serialize)]
struct OracleSection {
    energy_total: f64,
    newton_iters_total: usize,
    stationarity_gap: f64,
    final_delta: f64,
}

#[derive(Serialize)]
struct ConvergenceSection {
    instances: usize,
    base_primal_norm: f64,
    base_multiplier_norm: f64,
    first_primal_gap: f64,
    last_primal_gap: f64,
}

#[derive(Serialize)]
struct OptimizationSection {
    p_star: Vec<f64>,
    cost_star: f64,
    evaluations: usize,
}

#[derive(Serialize)]
struct VerificationDoc<'a> {
    schema_version: u32,
    constants: &'a ConstantsReport<f64>,
    bounds: &'a BoundCheck<f64>,
    feasibility: CheckLine,
    complementarity: CheckLine,
    inequality: CheckLine,
    all_pass: bool,
}

#[derive(Serialize)]
struct CheckLine {
    value: f64,
    bound: f64,
    pass: bool,
}

fn mesh_meta(run: &Run) -> MeshMeta {
    MeshMeta {
        nx: run.mesh.nx,
        ny: run.mesh.ny,
        width: run.mesh.width,
        height: run.mesh.height,
    }
}

fn solve_summary(run: &Run, state: &DiscreteState<f64>, diag: &SolveDiagnostics<f64>) -> SolveSummary {
    SolveSummary {
        converged: diag.converged,
        uzawa_iters: diag.uzawa_iters,
        newton_iters_total: diag.newton_iters_total,
        final_residual: diag.final_residual,
        primal_norm: x_norm(&run.mesh, &state.u, run.spec.r),
        multiplier_norm: y_norm(&run.mesh, &state.lam, run.spec.r),
        energy_total: oracle_energy(&run.mesh, &state.u, &run.spec).total,
    }
}

fn solution_artifacts(run: &Run, state: &DiscreteState<f64>, out: &mut Vec<(String, String)>) {
    if run.write_csv {
        out.push(("u.csv".to_string(), solution_u_csv(&run.mesh, &state.u)));
        out.push((
            "lambda.csv".to_string(),
            solution_lambda_csv(&run.mesh, &state.lam),
        ));
    }
}

/// Runs the configured task and renders artifacts.
pub fn execute(run: &Run) -> Result<TaskOutput, CliError> {
    match &run.task {
        Task::Solve => run_solve(run),
        Task::Oracle => run_oracle(run),
        Task::Verify => run_verify(run),
        Task::Converge { schedule, indices } => run_converge(run, schedule, indices),
        Task::Optimize {
            cost,
            set,
            method,
            self_target_g,
        } => run_optimize(run, cost, set, method, *self_target_g),
    }
}

fn forward(run: &Run) -> Result<(DiscreteState<f64>, SolveDiagnostics<f64>), CliError> {
    uzawa_solve(&run.mesh, &run.spec, &run.solver, None)
        .map_err(|e: SolverError| CliError::Solver(e.to_string()))
}

fn run_solve(run: &Run) -> Result<TaskOutput, CliError> {
    let (state, diag) = forward(run)?;
    let summary_line = format!(
        "solve: converged = {}, outer iterations {}, inner iterations {}, final residual {:e}",
        diag.converged, diag.uzawa_iters, diag.newton_iters_total, diag.final_residual
    );
    let mut artifacts = Vec::new();
    solution_artifacts(run, &state, &mut artifacts);
    if run.write_json {
        let doc = DiagnosticsDoc {
            schema_version: SCHEMA_VERSION,
            task: "solve",
            mesh: mesh_meta(run),
            problem: &run.spec,
            solver: &run.solver,
            solve: solve_summary(run, &state, &diag),
            oracle: None,
            convergence: None,
            optimization: None,
        };
        artifacts.push(("diagnostics.json".to_string(), json_summary(&doc)));
    }
    let failure = (!diag.converged).then(|| {
        CliError::Solver(format!(
            "solve hit its iteration caps at residual {:e}",
            diag.final_residual
        ))
    });
    Ok(TaskOutput {
        artifacts,
        summary: vec![summary_line],
        failure,
    })
}

fn run_oracle(run: &Run) -> Result<TaskOutput, CliError> {
    let (state, report) =
        oracle_minimize(&run.mesh, &run.spec, &run.solver).map_err(|e| CliError::Solver(e.to_string()))?;
    let mut artifacts = Vec::new();
    solution_artifacts(run, &state, &mut artifacts);
    if run.write_json {
        let doc = DiagnosticsDoc {
            schema_version: SCHEMA_VERSION,
            task: "oracle",
            mesh: mesh_meta(run),
            problem: &run.spec,
            solver: &run.solver,
            solve: SolveSummary {
                converged: true,
                uzawa_iters: 0,
                newton_iters_total: report.newton_iters_total,
                final_residual: report.stationarity_gap,
                primal_norm: x_norm(&run.mesh, &state.u, run.spec.r),
                multiplier_norm: y_norm(&run.mesh, &state.lam, run.spec.r),
                energy_total: report.energy.total,
            },
            oracle: Some(OracleSection {
                energy_total: report.energy.total,
                newton_iters_total: report.newton_iters_total,
                stationarity_gap: report.stationarity_gap,
                final_delta: report.final_delta,
            }),
            convergence: None,
            optimization: None,
        };
        artifacts.push(("diagnostics.json".to_string(), json_summary(&doc)));
    }
    Ok(TaskOutput {
        artifacts,
        summary: vec![format!(
            "oracle: energy {:e}, stationarity gap {:e}, inner iterations {}",
            report.energy.total, report.stationarity_gap, report.newton_iters_total
        )],
        failure: None,
    })
}

fn run_verify(run: &Run) -> Result<TaskOutput, CliError> {
    let (state, diag) = forward(run)?;
    if !diag.converged {
        return Err(CliError::Solver(format!(
            "verification needs a converged solve; caps hit at residual {:e}",
            diag.final_residual
        )));
    }
    let constants =
        compute_constants(&run.mesh, &run.spec, run.solver.seed).map_err(from_analysis)?;
    let bounds = verify_bounds(&run.mesh, &run.spec, &state, &constants);
    let mut violations = Vec::new();

    // Multiplier feasibility: the box constraint holds pointwise.
    let max_abs = state.lam.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
    let feas_pass = max_abs <= run.spec.theta + 1e-10;
    if !feas_pass {
        violations.push(format!(
            "multiplier leaves the box: max |lambda| = {max_abs:e} exceeds theta = {}",
            run.spec.theta
        ));
    }

    // Complementarity: the multiplier's work saturates the contact bound.
    let pairing = CouplingMatrix::from_mesh(&run.mesh).pairing(&state.u, &state.lam);
    let l1: f64 = run
        .mesh
        .trace_edges(SegmentTag::G3)
        .iter()
        .map(|e| abs_power_edge_integral(state.u[e.nodes[0]], state.u[e.nodes[1]], e.length, 1.0))
        .sum();
    let comp_bound = run.spec.theta * l1 - 1e-6 * l1.max(1.0);
    let comp_pass = pairing >= comp_bound;
    if !comp_pass {
        violations.push(format!(
            "complementarity fails: contact work {pairing:e} below {comp_bound:e}"
        ));
    }

    // Variational inequality on seeded random test fields.
    let mut rng = ChaCha8Rng::seed_from_u64(run.solver.seed.wrapping_add(1));
    let mut min_margin = f64::INFINITY;
    for _ in 0..50 {
        let v: Vec<f64> = (0..run.mesh.num_nodes())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let gap = vi_gap(&run.mesh, &run.spec, &state, &v).map_err(from_analysis)?;
        let allowance = 1e-8 * (1.0 + x_norm(&run.mesh, &v, run.spec.r));
        min_margin = min_margin.min(gap + allowance);
    }
    let vi_pass = min_margin >= 0.0;
    if !vi_pass {
        violations.push(format!(
            "variational inequality fails on a sampled field: margin {min_margin:e}"
        ));
    }

    if !bounds.primal_pass {
        violations.push(format!(
            "primal bound fails: norm {:e} exceeds bound {:e}",
            bounds.primal_norm, bounds.primal_bound
        ));
    }
    if !bounds.dual_informational && !bounds.dual_pass {
        violations.push(format!(
            "dual bound fails: norm {:e} exceeds bound {:e}",
            bounds.dual_norm, bounds.dual_bound
        ));
    }

    let all_pass = violations.is_empty();
    let mut artifacts = Vec::new();
    solution_artifacts(run, &state, &mut artifacts);
    if run.write_json {
        let doc = DiagnosticsDoc {
            schema_version: SCHEMA_VERSION,
            task: "verify",
            mesh: mesh_meta(run),
            problem: &run.spec,
            solver: &run.solver,
            solve: solve_summary(run, &state, &diag),
            oracle: None,
            convergence: None,
            optimization: None,
        };
        artifacts.push(("diagnostics.json".to_string(), json_summary(&doc)));
        let vdoc = VerificationDoc {
            schema_version: SCHEMA_VERSION,
            constants: &constants,
            bounds: &bounds,
            feasibility: CheckLine {
                value: max_abs,
                bound: run.spec.theta + 1e-10,
                pass: feas_pass,
            },
            complementarity: CheckLine {
                value: pairing,
                bound: comp_bound,
                pass: comp_pass,
            },
            inequality: CheckLine {
                value: min_margin,
                bound: 0.0,
                pass: vi_pass,
            },
            all_pass,
        };
        artifacts.push(("verification.json".to_string(), json_summary(&vdoc)));
    }
    let summary = vec![
        format!(
            "verify: primal norm {:e} <= bound {:e} ({})",
            bounds.primal_norm,
            bounds.primal_bound,
            if bounds.primal_pass { "pass" } else { "FAIL" }
        ),
        format!(
            "verify: dual norm {:e} <= bound {:e} ({}{})",
            bounds.dual_norm,
            bounds.dual_bound,
            if bounds.dual_pass { "pass" } else { "FAIL" },
            if bounds.dual_informational {
                ", informational"
            } else {
                ""
            }
        ),
        format!("verify: all checks pass = {all_pass}"),
    ];
    Ok(TaskOutput {
        artifacts,
        summary,
        failure: (!all_pass).then(|| CliError::Verification(violations)),
    })
}

fn run_converge(
    run: &Run,
    schedule: &mixedvi::analysis::Schedule<f64>,
    indices: &Indices,
) -> Result<TaskOutput, CliError> {
    let (base_state, _) = forward(run)?;
    let table = match indices {
        Indices::Count(n) => convergence_study(&run.mesh, &run.spec, schedule, *n, &run.solver),
        Indices::List(ns) => {
            convergence_study_at(&run.mesh, &run.spec, schedule, ns, &run.solver)
        }
    }
    .map_err(from_analysis)?;
    let mut artifacts = Vec::new();
    solution_artifacts(run, &base_state, &mut artifacts);
    if run.write_csv {
        artifacts.push(("table.csv".to_string(), convergence_csv(&table)));
    }
    if run.write_json {
        let first = table.rows.first().expect("validated nonempty");
        let last = table.rows.last().expect("validated nonempty");
        let doc = DiagnosticsDoc {
            schema_version: SCHEMA_VERSION,
            task: "converge",
            mesh: mesh_meta(run),
            problem: &run.spec,
            solver: &run.solver,
            solve: SolveSummary {
                converged: true,
                uzawa_iters: 0,
                newton_iters_total: 0,
                final_residual: 0.0,
                primal_norm: table.base_primal_norm,
                multiplier_norm: table.base_multiplier_norm,
                energy_total: oracle_energy(&run.mesh, &base_state.u, &run.spec).total,
            },
            oracle: None,
            convergence: Some(ConvergenceSection {
                instances: table.rows.len(),
                base_primal_norm: table.base_primal_norm,
                base_multiplier_norm: table.base_multiplier_norm,
                first_primal_gap: first.primal_gap,
                last_primal_gap: last.primal_gap,
            }),
            optimization: None,
        };
        artifacts.push(("diagnostics.json".to_string(), json_summary(&doc)));
    }
    Ok(TaskOutput {
        artifacts,
        summary: vec![format!(
            "converge: {} instances, primal gap {:e} -> {:e}",
            table.rows.len(),
            table.rows.first().map(|r| r.primal_gap).unwrap_or(0.0),
            table.rows.last().map(|r| r.primal_gap).unwrap_or(0.0)
        )],
        failure: None,
    })
}

fn run_optimize(
    run: &Run,
    cost: &CostSpec<f64>,
    set: &mixedvi::analysis::AdmissibleSet<f64>,
    method: &mixedvi::analysis::MethodConfig,
    self_target_g: Option<f64>,
) -> Result<TaskOutput, CliError> {
    // Generate a self-consistent contact target when requested: the trace of
    // the solution at the generating threshold.
    let cost = match (cost, self_target_g) {
        (CostSpec::ContactTracking { .. }, Some(g_star)) => {
            let spec_star = mixedvi::ProblemSpec64::new(
                run.spec.mu_star,
                run.spec.r,
                run.spec.theta,
                g_star,
                run.spec.f_coeffs,
                run.spec.j_kind,
            )
            .map_err(|e| CliError::Config(vec![e.to_string()]))?;
            let (state, diag) = uzawa_solve(&run.mesh, &spec_star, &run.solver, None)
                .map_err(|e| CliError::Solver(e.to_string()))?;
            if !diag.converged {
                return Err(CliError::Solver(format!(
                    "target-generating solve hit its caps at residual {:e}",
                    diag.final_residual
                )));
            }
            CostSpec::ContactTracking {
                target_trace: run
                    .mesh
                    .trace_nodes(SegmentTag::G3)
                    .iter()
                    .map(|&i| state.u[i])
                    .collect(),
            }
        }
        _ => cost.clone(),
    };
    let result = optimize(&run.mesh, &run.spec, &cost, set, &run.solver, method)
        .map_err(from_analysis)?;

    // Solution fields at the best point.
    let best_spec = apply_parameters(set, &run.spec, &result.p_star)
        .map_err(|e| CliError::Config(vec![e.to_string()]))?;
    let (best_state, best_diag) = uzawa_solve(&run.mesh, &best_spec, &run.solver, None)
        .map_err(|e| CliError::Solver(e.to_string()))?;

    let mut artifacts = Vec::new();
    solution_artifacts(run, &best_state, &mut artifacts);
    if run.write_csv {
        artifacts.push(("trace.csv".to_string(), optimization_csv(&result)));
    }
    if run.write_json {
        let doc = DiagnosticsDoc {
            schema_version: SCHEMA_VERSION,
            task: "optimize",
            mesh: mesh_meta(run),
            problem: &run.spec,
            solver: &run.solver,
            solve: solve_summary(run, &best_state, &best_diag),
            oracle: None,
            convergence: None,
            optimization: Some(OptimizationSection {
                p_star: result.p_star.clone(),
                cost_star: result.cost_star,
                evaluations: result.evaluations,
            }),
        };
        artifacts.push(("diagnostics.json".to_string(), json_summary(&doc)));
    }
    Ok(TaskOutput {
        artifacts,
        summary: vec![format!(
            "optimize: best point {:?} with cost {:e} after {} forward solves",
            result.p_star, result.cost_star, result.evaluations
        )],
        failure: None,
    })
}
