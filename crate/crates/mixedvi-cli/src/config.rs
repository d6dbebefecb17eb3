//! Declarative run configuration: strict TOML schema, exhaustive constraint
//! reporting, and conversion into the typed problem objects.
//!
//! Unknown keys anywhere in the file are fatal so that misspelled parameters
//! can never silently fall back to defaults.

use mixedvi::analysis::{AdmissibleSet, CostSpec, MethodConfig, Schedule};
use mixedvi::assembly::{data_violations, FrictionKind, ProblemSpec};
use mixedvi::mesh::{build_rect_mesh, BoundaryPartition, Mesh, SegmentTag};
use mixedvi::solver::{config_violations, SolverConfig};
use serde::Deserialize;
use std::path::Path;

/// Raw top-level configuration as parsed from TOML.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Rectangle geometry and resolution.
    pub mesh: MeshBlock,
    /// Problem data.
    pub problem: ProblemBlock,
    /// Solver overrides; defaults are derived from the problem data.
    #[serde(default)]
    pub solver: SolverBlock,
    /// The single task to run.
    pub task: TaskBlock,
    /// Artifact destination and formats.
    #[serde(default)]
    pub output: OutputBlock,
}

/// `[mesh]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshBlock {
    /// Cells along the width.
    pub nx: usize,
    /// Cells along the height.
    pub ny: usize,
    /// Rectangle width.
    pub width: f64,
    /// Rectangle height.
    pub height: f64,
    /// Side-to-segment assignment; defaults to left clamped, right traction,
    /// bottom contact, top friction.
    pub partition: Option<PartitionBlock>,
}

/// `[mesh.partition]` block: segment tag (`"G1"`..`"G4"`) per side.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionBlock {
    /// Tag of the left side `x = 0`.
    pub left: String,
    /// Tag of the right side `x = width`.
    pub right: String,
    /// Tag of the bottom side `y = 0`.
    pub bottom: String,
    /// Tag of the top side `y = height`.
    pub top: String,
}

/// `[problem]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemBlock {
    /// Diffusion coefficient, positive.
    pub mu_star: f64,
    /// Growth exponent, at least 2.
    pub r: f64,
    /// Contact traction bound, nonnegative.
    pub theta: f64,
    /// Friction threshold, nonnegative.
    pub g: f64,
    /// Traction profile `f_coeffs[0] + f_coeffs[1] * s / |G2|` in the
    /// arc-length coordinate of the traction side.
    pub f_coeffs: [f64; 2],
    /// Friction law; only `"smooth_sign"` is defined.
    pub j_kind: Option<String>,
}

/// `[solver]` block; every field optional, defaults derived from the data.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverBlock {
    /// Newton gradient regularization.
    pub eps: Option<f64>,
    /// Uzawa step size.
    pub rho: Option<f64>,
    /// Inner residual tolerance.
    pub newton_tol: Option<f64>,
    /// Outer update tolerance.
    pub uzawa_tol: Option<f64>,
    /// Inner iteration cap.
    pub max_newton: Option<usize>,
    /// Outer iteration cap.
    pub max_uzawa: Option<usize>,
    /// Seed for randomized verification utilities.
    pub seed: Option<u64>,
}

/// `[task]` block: a task kind plus at most one matching parameter table.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaskBlock {
    /// One of `solve`, `oracle`, `verify`, `converge`, `optimize`.
    pub kind: String,
    /// Parameters of the convergence study; only with `kind = "converge"`.
    pub converge: Option<ConvergeBlock>,
    /// Parameters of the optimization; only with `kind = "optimize"`.
    pub optimize: Option<OptimizeBlock>,
}

/// `[task.converge]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeBlock {
    /// `identity`, `over_n`, or `constant`.
    pub schedule: String,
    /// Run instances `1..=n_count`; exclusive with `ns`.
    pub n_count: Option<usize>,
    /// Explicit ascending instance indices; exclusive with `n_count`.
    pub ns: Option<Vec<usize>>,
    /// Traction perturbation for `over_n`.
    pub f_delta: Option<[f64; 2]>,
    /// Contact-bound perturbation for `over_n`.
    pub theta_delta: Option<f64>,
    /// Friction-threshold perturbation for `over_n`.
    pub g_delta: Option<f64>,
    /// Fixed traction coefficients for `constant`.
    pub f_constant: Option<[f64; 2]>,
    /// Fixed contact bound for `constant`.
    pub theta_constant: Option<f64>,
    /// Fixed friction threshold for `constant`.
    pub g_constant: Option<f64>,
}

/// `[task.optimize]` block.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizeBlock {
    /// `state_tracking`, `traction_tracking`, or `contact_tracking`.
    pub cost: String,
    /// Primal misfit weight.
    pub alpha: Option<f64>,
    /// Multiplier misfit weight (state tracking only).
    pub beta: Option<f64>,
    /// Parameter-norm weight.
    pub delta: Option<f64>,
    /// Primal target per node (state tracking).
    pub u_target: Option<Vec<f64>>,
    /// Multiplier target per contact edge (state tracking).
    pub lambda_target: Option<Vec<f64>>,
    /// Trace target per trace node (traction/contact tracking).
    pub target_trace: Option<Vec<f64>>,
    /// Contact tracking only: generate the target trace from a forward solve
    /// at this friction threshold; exclusive with `target_trace`.
    pub self_target_g: Option<f64>,
    /// Lower traction-coefficient corner of the search box.
    pub f_lo: Option<[f64; 2]>,
    /// Upper traction-coefficient corner of the search box.
    pub f_hi: Option<[f64; 2]>,
    /// Upper contact bound of the search box (state tracking).
    pub theta_max: Option<f64>,
    /// Upper friction threshold of the search set.
    pub g_max: Option<f64>,
    /// Forward-solve budget.
    pub budget: Option<usize>,
    /// Nelder-Mead restarts.
    pub restarts: Option<usize>,
}

/// `[output]` block.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    /// Artifact directory; default `out`.
    pub directory: Option<String>,
    /// Subset of `csv`, `json`; default both.
    pub formats: Option<Vec<String>>,
}

/// A validated, typed run ready for execution.
#[derive(Debug, Clone)]
pub struct Run {
    /// Discretized rectangle.
    pub mesh: Mesh<f64>,
    /// Problem data.
    pub spec: ProblemSpec<f64>,
    /// Solver parameters.
    pub solver: SolverConfig<f64>,
    /// Task to execute.
    pub task: Task,
    /// Artifact directory.
    pub out_dir: String,
    /// Emit CSV artifacts.
    pub write_csv: bool,
    /// Emit JSON artifacts.
    pub write_json: bool,
}

/// Typed task parameters.
#[derive(Debug, Clone)]
pub enum Task {
    /// One forward solve.
    Solve,
    /// Energy-minimization oracle solve.
    Oracle,
    /// Solve plus bound, feasibility, complementarity and inequality checks.
    Verify,
    /// Data-perturbation convergence study.
    Converge {
        /// Perturbation schedule.
        schedule: Schedule<f64>,
        /// Instance indices: either a count (`1..=n`) or an explicit list.
        indices: Indices,
    },
    /// Parameter optimization.
    Optimize {
        /// Cost functional; the contact-tracking target may still be empty
        /// when it is generated from `self_target_g` at run time.
        cost: CostSpec<f64>,
        /// Admissible parameter set.
        set: AdmissibleSet<f64>,
        /// Search configuration.
        method: MethodConfig,
        /// Generate the contact-tracking target by a forward solve at this
        /// threshold.
        self_target_g: Option<f64>,
    },
}

/// Instance-index selection of a convergence study.
#[derive(Debug, Clone)]
pub enum Indices {
    /// Instances `1..=count`.
    Count(usize),
    /// Explicit ascending indices.
    List(Vec<usize>),
}

/// Reads and parses the file; I/O and TOML syntax/schema problems come back
/// as one violation each.
pub fn parse_file(path: &Path) -> Result<RunConfig, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read {}: {e}", path.display())])?;
    toml::from_str(&text).map_err(|e| vec![format!("config parse error: {e}")])
}

fn parse_tag(side: &str, value: &str, out: &mut Vec<String>) -> Option<SegmentTag> {
    match value {
        "G1" => Some(SegmentTag::G1),
        "G2" => Some(SegmentTag::G2),
        "G3" => Some(SegmentTag::G3),
        "G4" => Some(SegmentTag::G4),
        other => {
            out.push(format!(
                "partition.{side} = {other:?} invalid: expected one of \"G1\", \"G2\", \"G3\", \"G4\""
            ));
            None
        }
    }
}

fn partition_from(block: &PartitionBlock, out: &mut Vec<String>) -> Option<BoundaryPartition> {
    let left = parse_tag("left", &block.left, out)?;
    let right = parse_tag("right", &block.right, out)?;
    let bottom = parse_tag("bottom", &block.bottom, out)?;
    let top = parse_tag("top", &block.top, out)?;
    let p = BoundaryPartition {
        left,
        right,
        bottom,
        top,
    };
    if let Err(e) = p.validate() {
        out.push(format!("{e}"));
        return None;
    }
    Some(p)
}

/// Collects every violated constraint in the configuration. Empty means the
/// configuration is runnable.
pub fn violations(cfg: &RunConfig) -> Vec<String> {
    let mut v = Vec::new();

    // Mesh block.
    if cfg.mesh.nx == 0 || cfg.mesh.ny == 0 {
        v.push(format!(
            "mesh {}x{} invalid: both cell counts must be at least 1",
            cfg.mesh.nx, cfg.mesh.ny
        ));
    }
    if !(cfg.mesh.width > 0.0) || !cfg.mesh.width.is_finite() {
        v.push(format!(
            "mesh width {} invalid: the rectangle needs positive extent",
            cfg.mesh.width
        ));
    }
    if !(cfg.mesh.height > 0.0) || !cfg.mesh.height.is_finite() {
        v.push(format!(
            "mesh height {} invalid: the rectangle needs positive extent",
            cfg.mesh.height
        ));
    }
    if let Some(p) = &cfg.mesh.partition {
        partition_from(p, &mut v);
    }

    // Problem block.
    v.extend(data_violations(
        cfg.problem.mu_star,
        cfg.problem.r,
        cfg.problem.theta,
        cfg.problem.g,
        cfg.problem.f_coeffs,
    ));
    if let Some(k) = &cfg.problem.j_kind {
        if k != "smooth_sign" {
            v.push(format!(
                "j_kind = {k:?} invalid: only \"smooth_sign\" is defined"
            ));
        }
    }

    // Solver block: apply overrides onto the recommended defaults, then let
    // the solver constraints speak. Needs valid problem data for defaults.
    if v.is_empty() {
        let spec = ProblemSpec::new(
            cfg.problem.mu_star,
            cfg.problem.r,
            cfg.problem.theta,
            cfg.problem.g,
            cfg.problem.f_coeffs,
            FrictionKind::SmoothSign,
        )
        .expect("data already validated");
        v.extend(config_violations(&solver_from(&cfg.solver, &spec)));
    }

    // Task block.
    v.extend(task_violations(cfg));

    // Output block.
    if let Some(fs) = &cfg.output.formats {
        for f in fs {
            if f != "csv" && f != "json" {
                v.push(format!(
                    "output format {f:?} invalid: expected \"csv\" or \"json\""
                ));
            }
        }
        if fs.is_empty() {
            v.push("output.formats is empty: at least one format is needed".to_string());
        }
    }
    v
}

fn solver_from(block: &SolverBlock, spec: &ProblemSpec<f64>) -> SolverConfig<f64> {
    let mut s = SolverConfig::recommended(spec);
    if let Some(x) = block.eps {
        s.eps = x;
    }
    if let Some(x) = block.rho {
        s.rho = x;
    }
    if let Some(x) = block.newton_tol {
        s.newton_tol = x;
    }
    if let Some(x) = block.uzawa_tol {
        s.uzawa_tol = x;
    }
    if let Some(x) = block.max_newton {
        s.max_newton = x;
    }
    if let Some(x) = block.max_uzawa {
        s.max_uzawa = x;
    }
    if let Some(x) = block.seed {
        s.seed = x;
    }
    s
}

fn require_absent<T>(field: &Option<T>, name: &str, context: &str, out: &mut Vec<String>) {
    if field.is_some() {
        out.push(format!("{name} is not a parameter of {context}"));
    }
}

fn task_violations(cfg: &RunConfig) -> Vec<String> {
    let mut v = Vec::new();
    let t = &cfg.task;
    match t.kind.as_str() {
        "solve" | "oracle" | "verify" => {
            if t.converge.is_some() {
                v.push(format!(
                    "task.converge is only valid with kind = \"converge\", not {:?}",
                    t.kind
                ));
            }
            if t.optimize.is_some() {
                v.push(format!(
                    "task.optimize is only valid with kind = \"optimize\", not {:?}",
                    t.kind
                ));
            }
        }
        "converge" => {
            if t.optimize.is_some() {
                v.push("task.optimize is only valid with kind = \"optimize\"".to_string());
            }
            match &t.converge {
                None => v.push("kind = \"converge\" needs a [task.converge] table".to_string()),
                Some(c) => v.extend(converge_violations(c)),
            }
        }
        "optimize" => {
            if t.converge.is_some() {
                v.push("task.converge is only valid with kind = \"converge\"".to_string());
            }
            match &t.optimize {
                None => v.push("kind = \"optimize\" needs a [task.optimize] table".to_string()),
                Some(o) => v.extend(optimize_violations(o)),
            }
        }
        other => v.push(format!(
            "task.kind = {other:?} invalid: expected one of \"solve\", \"oracle\", \"verify\", \
             \"converge\", \"optimize\""
        )),
    }
    v
}

fn converge_violations(c: &ConvergeBlock) -> Vec<String> {
    let mut v = Vec::new();
    match (c.n_count, &c.ns) {
        (None, None) => v.push("converge needs n_count or ns".to_string()),
        (Some(_), Some(_)) => v.push("n_count and ns are mutually exclusive".to_string()),
        (Some(n), None) if n < 3 => v.push(format!(
            "n_count = {n} invalid: a convergence study needs at least 3 instances"
        )),
        (None, Some(ns)) => {
            if ns.is_empty() || ns[0] == 0 || ns.windows(2).any(|w| w[0] >= w[1]) {
                v.push(format!(
                    "ns = {ns:?} invalid: indices must be positive, distinct and ascending"
                ));
            }
        }
        _ => {}
    }
    let over_n = ["f_delta", "theta_delta", "g_delta"];
    let constant = ["f_constant", "theta_constant", "g_constant"];
    match c.schedule.as_str() {
        "identity" => {
            require_absent(&c.f_delta, over_n[0], "the identity schedule", &mut v);
            require_absent(&c.theta_delta, over_n[1], "the identity schedule", &mut v);
            require_absent(&c.g_delta, over_n[2], "the identity schedule", &mut v);
            require_absent(&c.f_constant, constant[0], "the identity schedule", &mut v);
            require_absent(&c.theta_constant, constant[1], "the identity schedule", &mut v);
            require_absent(&c.g_constant, constant[2], "the identity schedule", &mut v);
        }
        "over_n" => {
            require_absent(&c.f_constant, constant[0], "the over_n schedule", &mut v);
            require_absent(&c.theta_constant, constant[1], "the over_n schedule", &mut v);
            require_absent(&c.g_constant, constant[2], "the over_n schedule", &mut v);
        }
        "constant" => {
            require_absent(&c.f_delta, over_n[0], "the constant schedule", &mut v);
            require_absent(&c.theta_delta, over_n[1], "the constant schedule", &mut v);
            require_absent(&c.g_delta, over_n[2], "the constant schedule", &mut v);
            if c.f_constant.is_none() && c.theta_constant.is_none() && c.g_constant.is_none() {
                v.push(
                    "the constant schedule needs f_constant, theta_constant or g_constant"
                        .to_string(),
                );
            }
        }
        other => v.push(format!(
            "schedule = {other:?} invalid: expected \"identity\", \"over_n\" or \"constant\""
        )),
    }
    v
}

fn optimize_violations(o: &OptimizeBlock) -> Vec<String> {
    let mut v = Vec::new();
    for (name, w) in [("alpha", o.alpha), ("beta", o.beta), ("delta", o.delta)] {
        if let Some(w) = w {
            if !(w >= 0.0) || !w.is_finite() {
                v.push(format!("{name} = {w} invalid: cost weights are nonnegative"));
            }
        }
    }
    match o.cost.as_str() {
        "state_tracking" => {
            require_absent(&o.target_trace, "target_trace", "state tracking", &mut v);
            require_absent(&o.self_target_g, "self_target_g", "state tracking", &mut v);
            if o.f_lo.is_none() || o.f_hi.is_none() {
                v.push("state tracking needs the search box corners f_lo and f_hi".to_string());
            }
            if o.theta_max.is_none() || o.g_max.is_none() {
                v.push("state tracking needs theta_max and g_max".to_string());
            }
        }
        "traction_tracking" => {
            require_absent(&o.beta, "beta", "traction tracking", &mut v);
            require_absent(&o.u_target, "u_target", "traction tracking", &mut v);
            require_absent(&o.lambda_target, "lambda_target", "traction tracking", &mut v);
            require_absent(&o.self_target_g, "self_target_g", "traction tracking", &mut v);
            require_absent(&o.theta_max, "theta_max", "traction tracking", &mut v);
            require_absent(&o.g_max, "g_max", "traction tracking", &mut v);
            if o.f_lo.is_none() || o.f_hi.is_none() {
                v.push("traction tracking needs the search box corners f_lo and f_hi".to_string());
            }
        }
        "contact_tracking" => {
            require_absent(&o.alpha, "alpha", "contact tracking", &mut v);
            require_absent(&o.beta, "beta", "contact tracking", &mut v);
            require_absent(&o.delta, "delta", "contact tracking", &mut v);
            require_absent(&o.u_target, "u_target", "contact tracking", &mut v);
            require_absent(&o.lambda_target, "lambda_target", "contact tracking", &mut v);
            require_absent(&o.f_lo, "f_lo", "contact tracking", &mut v);
            require_absent(&o.f_hi, "f_hi", "contact tracking", &mut v);
            require_absent(&o.theta_max, "theta_max", "contact tracking", &mut v);
            match o.g_max {
                None => v.push("contact tracking needs g_max".to_string()),
                Some(g) if !(g > 0.0) => v.push(format!(
                    "g_max = {g} invalid: the friction interval needs a positive upper threshold"
                )),
                _ => {}
            }
            match (&o.target_trace, o.self_target_g) {
                (None, None) => {
                    v.push("contact tracking needs target_trace or self_target_g".to_string())
                }
                (Some(_), Some(_)) => {
                    v.push("target_trace and self_target_g are mutually exclusive".to_string())
                }
                (None, Some(gs)) => {
                    if !(gs > 0.0) || !gs.is_finite() {
                        v.push(format!(
                            "self_target_g = {gs} invalid: the generating threshold must be positive"
                        ));
                    }
                    if let Some(gm) = o.g_max {
                        if gs >= gm {
                            v.push(format!(
                                "self_target_g = {gs} must lie inside the search interval (0, {gm})"
                            ));
                        }
                    }
                }
                _ => {}
            }
        }
        other => v.push(format!(
            "cost = {other:?} invalid: expected \"state_tracking\", \"traction_tracking\" or \
             \"contact_tracking\""
        )),
    }
    v
}

/// Turns a violation-free configuration into a typed run. `seed_override`
/// and `out_override` come from the command line.
pub fn realize(
    cfg: &RunConfig,
    seed_override: Option<u64>,
    out_override: Option<&str>,
) -> Result<Run, Vec<String>> {
    let problems = violations(cfg);
    if !problems.is_empty() {
        return Err(problems);
    }
    let partition = match &cfg.mesh.partition {
        None => BoundaryPartition::default(),
        Some(p) => {
            let mut sink = Vec::new();
            partition_from(p, &mut sink).expect("partition already validated")
        }
    };
    let mesh = build_rect_mesh(
        cfg.mesh.nx,
        cfg.mesh.ny,
        cfg.mesh.width,
        cfg.mesh.height,
        partition,
    )
    .map_err(|e| vec![format!("{e}")])?;
    let spec = ProblemSpec::new(
        cfg.problem.mu_star,
        cfg.problem.r,
        cfg.problem.theta,
        cfg.problem.g,
        cfg.problem.f_coeffs,
        FrictionKind::SmoothSign,
    )
    .map_err(|e| vec![format!("{e}")])?;
    let mut solver = solver_from(&cfg.solver, &spec);
    if let Some(seed) = seed_override {
        solver.seed = seed;
    }

    let task = match cfg.task.kind.as_str() {
        "solve" => Task::Solve,
        "oracle" => Task::Oracle,
        "verify" => Task::Verify,
        "converge" => {
            let c = cfg.task.converge.as_ref().expect("validated");
            let schedule = match c.schedule.as_str() {
                "identity" => Schedule::Identity,
                "over_n" => Schedule::OverN {
                    f_delta: c.f_delta.unwrap_or([0.0, 0.0]),
                    theta_delta: c.theta_delta.unwrap_or(0.0),
                    g_delta: c.g_delta.unwrap_or(0.0),
                },
                _ => Schedule::Constant {
                    f_coeffs: c.f_constant.unwrap_or(spec.f_coeffs),
                    theta: c.theta_constant.unwrap_or(spec.theta),
                    g: c.g_constant.unwrap_or(spec.g),
                },
            };
            let indices = match (c.n_count, &c.ns) {
                (Some(n), None) => Indices::Count(n),
                (None, Some(ns)) => Indices::List(ns.clone()),
                _ => unreachable!("validated"),
            };
            Task::Converge { schedule, indices }
        }
        "optimize" => {
            let o = cfg.task.optimize.as_ref().expect("validated");
            let (cost, set) = match o.cost.as_str() {
                "state_tracking" => (
                    CostSpec::StateTracking {
                        alpha: o.alpha.unwrap_or(0.0),
                        beta: o.beta.unwrap_or(0.0),
                        delta: o.delta.unwrap_or(0.0),
                        u_target: o.u_target.clone().unwrap_or_default(),
                        lambda_target: o.lambda_target.clone().unwrap_or_default(),
                    },
                    AdmissibleSet::DataBox {
                        f_lo: o.f_lo.expect("validated"),
                        f_hi: o.f_hi.expect("validated"),
                        theta_max: o.theta_max.expect("validated"),
                        g_max: o.g_max.expect("validated"),
                    },
                ),
                "traction_tracking" => (
                    CostSpec::TractionTracking {
                        alpha: o.alpha.unwrap_or(0.0),
                        delta: o.delta.unwrap_or(0.0),
                        target_trace: o.target_trace.clone().unwrap_or_default(),
                    },
                    AdmissibleSet::TractionBox {
                        f_lo: o.f_lo.expect("validated"),
                        f_hi: o.f_hi.expect("validated"),
                    },
                ),
                _ => (
                    CostSpec::ContactTracking {
                        target_trace: o.target_trace.clone().unwrap_or_default(),
                    },
                    AdmissibleSet::FrictionInterval {
                        g_max: o.g_max.expect("validated"),
                    },
                ),
            };
            Task::Optimize {
                cost,
                set,
                method: MethodConfig {
                    budget: o.budget,
                    restarts: o.restarts.unwrap_or(3),
                    seed: solver.seed,
                },
                self_target_g: o.self_target_g,
            }
        }
        _ => unreachable!("validated"),
    };

    let out_dir = out_override
        .map(str::to_string)
        .or_else(|| cfg.output.directory.clone())
        .unwrap_or_else(|| "out".to_string());
    let formats = cfg
        .output
        .formats
        .clone()
        .unwrap_or_else(|| vec!["csv".to_string(), "json".to_string()]);
    Ok(Run {
        mesh,
        spec,
        solver,
        task,
        out_dir,
        write_csv: formats.iter().any(|f| f == "csv"),
        write_json: formats.iter().any(|f| f == "json"),
    })
}
