//! Acceptance suite: ten end-to-end criteria covering manufactured
//! solutions, uniqueness, oracle equivalence, complementarity, solution
//! bounds, operator structure, data-convergence, optimization recovery, and
//! CLI determinism. Each test prints one pass/fail line (visible with
//! `--nocapture`; the harness result line mirrors it).

use mixedvi::analysis::{
    compute_constants, convergence_study_at, optimize, verify_bounds, AdmissibleSet, CostSpec,
    MethodConfig, Schedule,
};
use mixedvi::assembly::{
    abs_power_edge_integral, apply_a, tangent_a, x_norm, y_norm, CouplingMatrix, FrictionKind,
    ProblemSpec,
};
use mixedvi::mesh::{build_rect_mesh, BoundaryPartition, Mesh, SegmentTag};
use mixedvi::solver::{
    oracle_minimize, random_state, uzawa_solve, DiscreteState, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn unit_mesh(n: usize) -> Mesh<f64> {
    build_rect_mesh(n, n, 1.0, 1.0, BoundaryPartition::default()).unwrap()
}

fn spec(mu: f64, r: f64, theta: f64, g: f64, f: [f64; 2]) -> ProblemSpec<f64> {
    ProblemSpec::new(mu, r, theta, g, f, FrictionKind::SmoothSign).unwrap()
}

/// A suite instance with an optional Uzawa step override: sticking-contact
/// instances (large theta, multiplier strictly inside the box) need a step
/// near the saddle-point optimum, far above the conservative default.
struct Instance {
    label: &'static str,
    spec: ProblemSpec<f64>,
    rho: Option<f64>,
}

fn config_for(inst: &Instance) -> SolverConfig<f64> {
    let mut cfg = SolverConfig::recommended(&inst.spec);
    if let Some(rho) = inst.rho {
        cfg.rho = rho;
    }
    cfg
}

fn solve_instance(mesh: &Mesh<f64>, inst: &Instance) -> DiscreteState<f64> {
    let cfg = config_for(inst);
    let (state, diag) = uzawa_solve(mesh, &inst.spec, &cfg, None).unwrap();
    assert!(
        diag.converged,
        "instance {} did not converge (residual {:e})",
        inst.label, diag.final_residual
    );
    state
}

/// Three frictional instances for the uniqueness check.
fn frictional_instances() -> Vec<Instance> {
    vec![
        Instance {
            label: "r2 moderate",
            spec: spec(1.0, 2.0, 0.3, 0.5, [1.0, 0.3]),
            rho: None,
        },
        Instance {
            label: "r3 moderate",
            spec: spec(1.0, 3.0, 0.2, 0.3, [1.0, 0.0]),
            rho: None,
        },
        Instance {
            label: "r2 graded traction",
            spec: spec(1.0, 2.0, 0.4, 0.6, [1.2, -0.4]),
            rho: None,
        },
    ]
}

/// Six instances spanning r in {2, 3}, theta in {0.1, 10}, g in {0, 1}.
fn spanning_instances() -> Vec<Instance> {
    let f = [1.0, 0.5];
    vec![
        Instance {
            label: "r2 t0.1 g0",
            spec: spec(1.0, 2.0, 0.1, 0.0, f),
            rho: None,
        },
        Instance {
            label: "r2 t0.1 g1",
            spec: spec(1.0, 2.0, 0.1, 1.0, f),
            rho: None,
        },
        Instance {
            label: "r2 t10 g0",
            spec: spec(1.0, 2.0, 10.0, 0.0, f),
            rho: Some(12.0),
        },
        Instance {
            label: "r3 t0.1 g1",
            spec: spec(1.0, 3.0, 0.1, 1.0, f),
            rho: None,
        },
        Instance {
            label: "r3 t10 g0",
            spec: spec(1.0, 3.0, 10.0, 0.0, f),
            rho: Some(12.0),
        },
        Instance {
            label: "r3 t10 g1",
            spec: spec(1.0, 3.0, 10.0, 1.0, f),
            rho: Some(12.0),
        },
    ]
}

/// The full standard suite checked by the feasibility and bound criteria.
fn full_suite() -> Vec<Instance> {
    let mut all = frictional_instances();
    all.extend(spanning_instances());
    all
}

fn report(id: usize, name: &str, violations: &[String], details: String) {
    if violations.is_empty() {
        println!("acceptance {id:02} {name}: pass — {details}");
    } else {
        let line = format!(
            "acceptance {id:02} {name}: FAIL — {}",
            violations.join("; ")
        );
        println!("{line}");
        panic!("{line}");
    }
}

#[test]
fn criterion_01_manufactured_solutions() {
    let mesh = unit_mesh(16);
    let mut violations = Vec::new();
    let mut worst_u = 0.0f64;
    let mut worst_lam = 0.0f64;
    let mut worst_time = 0.0f64;
    for (r, mu, f) in [(2.0, 1.0, 1.0), (3.0, 1.0, 2.0), (4.0, 2.0, 1.0)] {
        let s = spec(mu, r, 0.0, 0.0, [f, 0.0]);
        let cfg = SolverConfig::recommended(&s);
        let clock = Instant::now();
        let (state, diag) = uzawa_solve(&mesh, &s, &cfg, None).unwrap();
        let elapsed = clock.elapsed().as_secs_f64();
        worst_time = worst_time.max(elapsed);
        if !diag.converged {
            violations.push(format!("r = {r}: solver did not converge"));
            continue;
        }
        let slope = (f / mu).powf(1.0 / (r - 1.0));
        let u_err = mesh
            .nodes
            .iter()
            .zip(&state.u)
            .map(|(p, &u)| (u - slope * p[0]).abs())
            .fold(0.0f64, f64::max);
        let lam_err = state.lam.iter().fold(0.0f64, |a, &l| a.max(l.abs()));
        worst_u = worst_u.max(u_err);
        worst_lam = worst_lam.max(lam_err);
        if u_err > 1e-7 {
            violations.push(format!("r = {r}: max |u - {slope}*x| = {u_err:e} > 1e-7"));
        }
        if lam_err > 1e-8 {
            violations.push(format!("r = {r}: max |lambda| = {lam_err:e} > 1e-8"));
        }
        if elapsed >= 5.0 {
            violations.push(format!("r = {r}: {elapsed:.1}s exceeds the 5 s budget"));
        }
    }
    report(
        1,
        "manufactured solutions",
        &violations,
        format!(
            "max field error {worst_u:.2e}, max multiplier {worst_lam:.2e}, slowest case {worst_time:.2}s"
        ),
    );
}

#[test]
fn criterion_02_uniqueness_across_seeded_starts() {
    let mesh = unit_mesh(8);
    let clock = Instant::now();
    let mut violations = Vec::new();
    let mut worst_gap = 0.0f64;
    for inst in frictional_instances() {
        let cfg = config_for(&inst);
        let mut states = Vec::new();
        for seed in 0..5u64 {
            let init = random_state(&mesh, inst.spec.theta, seed);
            let (state, diag) = uzawa_solve(&mesh, &inst.spec, &cfg, Some(&init)).unwrap();
            if !diag.converged {
                violations.push(format!("{}: start {seed} did not converge", inst.label));
            }
            states.push(state);
        }
        for i in 0..states.len() {
            for j in (i + 1)..states.len() {
                let du: Vec<f64> = states[i]
                    .u
                    .iter()
                    .zip(&states[j].u)
                    .map(|(a, b)| a - b)
                    .collect();
                let dl: Vec<f64> = states[i]
                    .lam
                    .iter()
                    .zip(&states[j].lam)
                    .map(|(a, b)| a - b)
                    .collect();
                let gu = x_norm(&mesh, &du, inst.spec.r);
                let gl = y_norm(&mesh, &dl, inst.spec.r);
                worst_gap = worst_gap.max(gu).max(gl);
                if gu > 1e-6 {
                    violations.push(format!(
                        "{}: starts {i},{j} primal gap {gu:e} > 1e-6",
                        inst.label
                    ));
                }
                if gl > 1e-6 {
                    violations.push(format!(
                        "{}: starts {i},{j} multiplier gap {gl:e} > 1e-6",
                        inst.label
                    ));
                }
            }
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    if elapsed >= 60.0 {
        violations.push(format!("{elapsed:.1}s exceeds the 60 s budget"));
    }
    report(
        2,
        "uniqueness across seeded starts",
        &violations,
        format!("max pairwise gap {worst_gap:.2e} over 3 instances x 5 starts ({elapsed:.1}s)"),
    );
}

#[test]
fn criterion_03_oracle_equivalence() {
    let mesh = unit_mesh(8);
    let clock = Instant::now();
    let mut violations = Vec::new();
    let mut worst = 0.0f64;
    for inst in spanning_instances() {
        let cfg = config_for(&inst);
        let (uz, diag) = uzawa_solve(&mesh, &inst.spec, &cfg, None).unwrap();
        if !diag.converged {
            violations.push(format!("{}: iterative solve did not converge", inst.label));
            continue;
        }
        let (or, _) = oracle_minimize(&mesh, &inst.spec, &cfg).unwrap();
        let du: Vec<f64> = uz.u.iter().zip(&or.u).map(|(a, b)| a - b).collect();
        let diff = x_norm(&mesh, &du, inst.spec.r);
        let allowed = 1e-4 * x_norm(&mesh, &uz.u, inst.spec.r).max(1.0);
        worst = worst.max(diff / allowed);
        if diff > allowed {
            violations.push(format!(
                "{}: solver-oracle gap {diff:e} exceeds {allowed:e}",
                inst.label
            ));
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    if elapsed >= 120.0 {
        violations.push(format!("{elapsed:.1}s exceeds the 120 s budget"));
    }
    report(
        3,
        "oracle equivalence",
        &violations,
        format!("worst gap at {:.3} of tolerance over 6 instances ({elapsed:.1}s)", worst),
    );
}

#[test]
fn criterion_04_complementarity_and_feasibility() {
    let mesh = unit_mesh(8);
    let coupling = CouplingMatrix::from_mesh(&mesh);
    let edges = mesh.trace_edges(SegmentTag::G3);
    let mut violations = Vec::new();
    let mut worst_feas = 0.0f64;
    let mut worst_comp = f64::INFINITY;
    for inst in full_suite() {
        let state = solve_instance(&mesh, &inst);
        let theta = inst.spec.theta;
        for (e, &l) in state.lam.iter().enumerate() {
            worst_feas = worst_feas.max(l.abs() - theta);
            if l.abs() > theta + 1e-10 {
                violations.push(format!(
                    "{}: |lambda_{e}| = {:e} leaves the box [{:+e}]",
                    inst.label,
                    l.abs(),
                    theta
                ));
            }
        }
        let work = coupling.pairing(&state.u, &state.lam);
        let l1: f64 = edges
            .iter()
            .map(|e| {
                abs_power_edge_integral(state.u[e.nodes[0]], state.u[e.nodes[1]], e.length, 1.0)
            })
            .sum();
        let slack = 1e-6 * l1.max(1.0);
        worst_comp = worst_comp.min(work - (theta * l1 - slack));
        if work < theta * l1 - slack {
            violations.push(format!(
                "{}: contact work {work:e} below {:e}",
                inst.label,
                theta * l1 - slack
            ));
        }
    }
    report(
        4,
        "complementarity and feasibility",
        &violations,
        format!(
            "max box excess {worst_feas:.2e}, min complementarity margin {worst_comp:.2e} over 9 instances"
        ),
    );
}

#[test]
fn criterion_05_solution_bounds_with_margins() {
    let mesh = unit_mesh(8);
    let mut violations = Vec::new();
    let mut min_primal_margin = f64::INFINITY;
    let mut min_dual_margin = f64::INFINITY;
    for inst in full_suite() {
        let state = solve_instance(&mesh, &inst);
        let constants = compute_constants(&mesh, &inst.spec, 0).unwrap();
        let check = verify_bounds(&mesh, &inst.spec, &state, &constants);
        let primal_margin = check.primal_bound / check.primal_norm.max(1e-300);
        min_primal_margin = min_primal_margin.min(primal_margin);
        if !check.primal_pass {
            violations.push(format!(
                "{}: primal norm {:e} exceeds bound {:e}",
                inst.label, check.primal_norm, check.primal_bound
            ));
        }
        if inst.spec.r == 2.0 {
            if !constants.inf_sup_exact {
                violations.push(format!(
                    "{}: expected an exact inf-sup constant at r = 2",
                    inst.label
                ));
            }
            let dual_margin = check.dual_bound / check.dual_norm.max(1e-300);
            min_dual_margin = min_dual_margin.min(dual_margin);
            if !check.dual_pass {
                violations.push(format!(
                    "{}: multiplier norm {:e} exceeds bound {:e}",
                    inst.label, check.dual_norm, check.dual_bound
                ));
            }
        }
    }
    report(
        5,
        "solution bounds",
        &violations,
        format!(
            "min primal margin factor {min_primal_margin:.2}, min dual margin factor {min_dual_margin:.2} (r = 2)"
        ),
    );
}

#[test]
fn criterion_06_monotonicity_sampling() {
    let mesh = unit_mesh(8);
    let clock = Instant::now();
    let mut violations = Vec::new();
    let mut min_excess = f64::INFINITY;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for (r, mu) in [(2.0, 1.0), (3.0, 1.0), (4.0, 2.0)] {
        let modulus = mu / (2.0f64.powf(r - 2.0) * r);
        for _ in 0..100 {
            let u: Vec<f64> = (0..mesh.num_nodes())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let v: Vec<f64> = (0..mesh.num_nodes())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let au = apply_a(&mesh, &u, mu, r, 0.0).unwrap();
            let av = apply_a(&mesh, &v, mu, r, 0.0).unwrap();
            let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
            let gap: f64 = au
                .iter()
                .zip(&av)
                .zip(&d)
                .map(|((a, b), x)| (a - b) * x)
                .sum();
            let lower = modulus * x_norm(&mesh, &d, r).powf(r) - 1e-10;
            min_excess = min_excess.min(gap - lower);
            if gap < lower {
                violations.push(format!("r = {r}: pairing {gap:e} below {lower:e}"));
            }
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    if elapsed >= 10.0 {
        violations.push(format!("{elapsed:.1}s exceeds the 10 s budget"));
    }
    report(
        6,
        "monotonicity sampling",
        &violations,
        format!("min excess {min_excess:.2e} over 300 random pairs ({elapsed:.1}s)"),
    );
}

#[test]
fn criterion_07_tangent_consistency() {
    let mesh = unit_mesh(8);
    let mut violations = Vec::new();
    let mut worst = 0.0f64;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let eps = 1e-6;
    let step = 1e-6;
    for r in [2.0, 3.0, 4.0] {
        for k in 0..10 {
            let u: Vec<f64> = (0..mesh.num_nodes())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let d: Vec<f64> = (0..mesh.num_nodes())
                .map(|_| rng.random_range(-1.0..1.0))
                .collect();
            let tangent = tangent_a(&mesh, &u, 1.0, r, eps).unwrap();
            let jd = tangent.matvec(&d);
            let up: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            let um: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - step * b).collect();
            let ap = apply_a(&mesh, &up, 1.0, r, eps).unwrap();
            let am = apply_a(&mesh, &um, 1.0, r, eps).unwrap();
            let fd: Vec<f64> = ap
                .iter()
                .zip(&am)
                .map(|(p, m)| (p - m) / (2.0 * step))
                .collect();
            let err: f64 = fd
                .iter()
                .zip(&jd)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let scale: f64 = jd.iter().map(|x| x * x).sum::<f64>().sqrt();
            let rel = err / scale.max(1e-300);
            worst = worst.max(rel);
            if rel >= 1e-5 {
                violations.push(format!("r = {r}, pair {k}: relative error {rel:e} >= 1e-5"));
            }
        }
    }
    report(
        7,
        "tangent consistency",
        &violations,
        format!("worst relative error {worst:.2e} over 30 directional derivatives"),
    );
}

#[test]
fn criterion_08_data_convergence_study() {
    let mesh = unit_mesh(16);
    let clock = Instant::now();
    let base = spec(1.0, 2.0, 0.5, 0.3, [1.0, 0.5]);
    let cfg = SolverConfig::recommended(&base);
    let schedule = Schedule::OverN {
        f_delta: [0.05, 0.0],
        theta_delta: 0.025,
        g_delta: 0.025,
    };
    let ns = [4usize, 8, 16, 32, 64];
    let table = convergence_study_at(&mesh, &base, &schedule, &ns, &cfg).unwrap();
    let mut violations = Vec::new();
    let gaps: Vec<f64> = table.rows.iter().map(|r| r.primal_gap).collect();
    for w in gaps.windows(2) {
        if w[1] >= w[0] {
            violations.push(format!("primal gaps not strictly decreasing: {gaps:?}"));
            break;
        }
    }
    let last = table.rows.last().unwrap();
    if last.primal_gap >= 1e-3 {
        violations.push(format!(
            "primal gap {:e} at n = 64 is not below 1e-3",
            last.primal_gap
        ));
    }
    let mut worst_pairing = 0.0f64;
    for (k, &p) in last.pairing_gaps.iter().enumerate() {
        worst_pairing = worst_pairing.max(p);
        if p >= 1e-3 {
            violations.push(format!("pairing gap {} is {p:e} at n = 64", k + 1));
        }
    }
    let elapsed = clock.elapsed().as_secs_f64();
    if elapsed >= 180.0 {
        violations.push(format!("{elapsed:.1}s exceeds the 3 min budget"));
    }
    report(
        8,
        "data-convergence study",
        &violations,
        format!(
            "primal gap {:.2e} -> {:.2e}, worst pairing {worst_pairing:.2e} at n = 64 ({elapsed:.1}s)",
            gaps[0],
            last.primal_gap
        ),
    );
}

#[test]
fn criterion_09_optimization_recovery() {
    let clock = Instant::now();
    let mut violations = Vec::new();

    // Self-target friction recovery: scalar search on [0, 1] for the
    // threshold that generated the contact trace target.
    let mesh = unit_mesh(8);
    let g_star = 0.4;
    let base = spec(1.0, 2.0, 0.5, 0.2, [1.0, 0.0]);
    let cfg = SolverConfig::recommended(&base);
    let gen_spec = spec(1.0, 2.0, 0.5, g_star, [1.0, 0.0]);
    let (gen_state, gen_diag) = uzawa_solve(&mesh, &gen_spec, &cfg, None).unwrap();
    assert!(gen_diag.converged, "target-generating solve must converge");
    let target: Vec<f64> = mesh
        .trace_nodes(SegmentTag::G3)
        .iter()
        .map(|&i| gen_state.u[i])
        .collect();
    let result = optimize(
        &mesh,
        &base,
        &CostSpec::ContactTracking {
            target_trace: target,
        },
        &AdmissibleSet::FrictionInterval { g_max: 1.0 },
        &cfg,
        &MethodConfig {
            budget: Some(60),
            restarts: 3,
            seed: 0,
        },
    )
    .unwrap();
    let recovered = result.p_star[0];
    let recovery_cost = result.cost_star;
    let recovery_solves = result.evaluations;
    if (recovered - g_star).abs() > 1e-3 {
        violations.push(format!(
            "recovered threshold {recovered} is not within 1e-3 of {g_star}"
        ));
    }
    if recovery_cost > 1e-6 {
        violations.push(format!("recovery cost {recovery_cost:e} exceeds 1e-6"));
    }
    if recovery_solves > 60 {
        violations.push(format!(
            "{recovery_solves} forward solves exceed the 60-solve budget"
        ));
    }

    // Degenerate state-tracking cost: with zero misfit weights the cost is
    // the squared parameter norm, so the exact minimizer is the origin.
    let small = unit_mesh(6);
    let base_small = spec(1.0, 2.0, 0.0, 0.0, [1.0, 0.0]);
    let cfg_small = SolverConfig::recommended(&base_small);
    let result = optimize(
        &small,
        &base_small,
        &CostSpec::StateTracking {
            alpha: 0.0,
            beta: 0.0,
            delta: 1.0,
            u_target: Vec::new(),
            lambda_target: Vec::new(),
        },
        &AdmissibleSet::DataBox {
            f_lo: [-1.0, -1.0],
            f_hi: [1.0, 1.0],
            theta_max: 1.0,
            g_max: 1.0,
        },
        &cfg_small,
        &MethodConfig {
            budget: Some(45),
            restarts: 3,
            seed: 0,
        },
    )
    .unwrap();
    if result.p_star != vec![0.0; 4] || result.cost_star != 0.0 {
        violations.push(format!(
            "parameter-norm cost returned {:?} at cost {:e} instead of the exact origin",
            result.p_star, result.cost_star
        ));
    }

    // Degenerate traction tracking toward a zero target trace: zero traction
    // forces the zero field, so the exact minimizer is again the origin.
    let zero_target = vec![0.0; small.trace_nodes(SegmentTag::G2).len()];
    let result = optimize(
        &small,
        &base_small,
        &CostSpec::TractionTracking {
            alpha: 1.0,
            delta: 1.0,
            target_trace: zero_target,
        },
        &AdmissibleSet::TractionBox {
            f_lo: [-1.0, -1.0],
            f_hi: [1.0, 1.0],
        },
        &cfg_small,
        &MethodConfig {
            budget: Some(45),
            restarts: 3,
            seed: 0,
        },
    )
    .unwrap();
    if result.p_star != vec![0.0; 2] || result.cost_star != 0.0 {
        violations.push(format!(
            "zero-trace tracking returned {:?} at cost {:e} instead of the exact origin",
            result.p_star, result.cost_star
        ));
    }

    let elapsed = clock.elapsed().as_secs_f64();
    if elapsed >= 300.0 {
        violations.push(format!("{elapsed:.1}s exceeds the 5 min budget"));
    }
    report(
        9,
        "optimization recovery",
        &violations,
        format!(
            "threshold recovered to {:.1e} with cost {recovery_cost:.1e} in {recovery_solves} solves; both degenerate minimizers exact ({elapsed:.1}s)",
            (recovered - g_star).abs()
        ),
    );
}

#[test]
fn criterion_10_cli_determinism() {
    let bin = env!("CARGO_BIN_EXE_mixedvi");
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (
            "verify.toml",
            "[mesh]\nnx = 8\nny = 8\nwidth = 1.0\nheight = 1.0\n\n[problem]\nmu_star = 1.0\nr = 2.0\ntheta = 0.5\ng = 0.3\nf_coeffs = [1.0, 0.5]\n\n[task]\nkind = \"verify\"\n",
            "verify",
        ),
        (
            "converge.toml",
            "[mesh]\nnx = 6\nny = 6\nwidth = 1.0\nheight = 1.0\n\n[problem]\nmu_star = 1.0\nr = 2.0\ntheta = 0.5\ng = 0.3\nf_coeffs = [1.0, 0.5]\n\n[task]\nkind = \"converge\"\n\n[task.converge]\nschedule = \"over_n\"\nn_count = 3\ntheta_delta = 0.1\ng_delta = 0.05\n",
            "converge",
        ),
        (
            "optimize.toml",
            "[mesh]\nnx = 6\nny = 6\nwidth = 1.0\nheight = 1.0\n\n[problem]\nmu_star = 1.0\nr = 2.0\ntheta = 0.5\ng = 0.2\nf_coeffs = [1.0, 0.0]\n\n[task]\nkind = \"optimize\"\n\n[task.optimize]\ncost = \"contact_tracking\"\ng_max = 1.0\nself_target_g = 0.4\nbudget = 12\n",
            "optimize",
        ),
    ];
    let mut violations = Vec::new();
    let mut compared = 0usize;
    for (name, text, command) in configs {
        let cfg = dir.path().join(name);
        std::fs::write(&cfg, text).unwrap();
        let mut outputs: Vec<std::path::PathBuf> = Vec::new();
        for run in 0..2 {
            let out_dir = dir.path().join(format!("{command}-{run}"));
            let status = std::process::Command::new(bin)
                .args([
                    command,
                    "--config",
                    cfg.to_str().unwrap(),
                    "--out",
                    out_dir.to_str().unwrap(),
                    "--seed",
                    "7",
                    "--quiet",
                ])
                .status()
                .unwrap();
            if !status.success() {
                violations.push(format!("{command} run {run} exited {status}"));
            }
            outputs.push(out_dir);
        }
        let mut names: Vec<String> = std::fs::read_dir(&outputs[0])
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        if names.is_empty() {
            violations.push(format!("{command}: no artifacts written"));
        }
        for file in names {
            let a = std::fs::read(outputs[0].join(&file)).unwrap();
            let b = std::fs::read(outputs[1].join(&file)).unwrap();
            compared += 1;
            if a != b {
                violations.push(format!("{command}: {file} differs between identical runs"));
            }
        }
    }
    report(
        10,
        "CLI determinism",
        &violations,
        format!("{compared} artifacts byte-identical across repeated runs"),
    );
}
