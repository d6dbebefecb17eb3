//! Solution-level properties: uniqueness across starts, multiplier
//! feasibility and complementarity, and the discrete variational inequality.

use mixedvi::analysis::vi_gap;
use mixedvi::assembly::{
    abs_power_edge_integral, x_norm, y_norm, CouplingMatrix, FrictionKind, ProblemSpec,
};
use mixedvi::mesh::{build_rect_mesh, BoundaryPartition, Mesh, SegmentTag};
use mixedvi::solver::{random_state, uzawa_solve, SolverConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn unit_mesh(n: usize) -> Mesh<f64> {
    build_rect_mesh(n, n, 1.0, 1.0, BoundaryPartition::default()).unwrap()
}

fn spec(r: f64, theta: f64, g: f64, f: [f64; 2]) -> ProblemSpec<f64> {
    ProblemSpec::new(1.0, r, theta, g, f, FrictionKind::SmoothSign).unwrap()
}

#[test]
fn five_seeded_starts_reach_the_same_state() {
    let m = unit_mesh(6);
    for s in [spec(2.0, 0.3, 0.5, [1.0, 0.3]), spec(3.0, 0.2, 0.3, [1.0, 0.0])] {
        let cfg = SolverConfig::recommended(&s);
        let mut states = Vec::new();
        for seed in 0..5u64 {
            let init = random_state(&m, s.theta, seed);
            let (state, diag) = uzawa_solve(&m, &s, &cfg, Some(&init)).unwrap();
            assert!(diag.converged, "seed {seed} did not converge");
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
                assert!(x_norm(&m, &du, s.r) <= 1e-6, "primal gap {i}-{j}");
                assert!(y_norm(&m, &dl, s.r) <= 1e-6, "multiplier gap {i}-{j}");
            }
        }
    }
}

#[test]
fn multiplier_stays_in_the_box() {
    let m = unit_mesh(6);
    for s in [
        spec(2.0, 0.1, 0.0, [1.0, 0.0]),
        spec(2.0, 0.5, 0.4, [1.0, -0.5]),
        spec(3.0, 0.25, 0.2, [1.0, 0.5]),
    ] {
        let cfg = SolverConfig::recommended(&s);
        let (state, _) = uzawa_solve(&m, &s, &cfg, None).unwrap();
        for &l in &state.lam {
            assert!(l.abs() <= s.theta + 1e-10, "lambda {l} outside [{0}, {0}]", s.theta);
        }
    }
}

#[test]
fn contact_work_saturates_the_bound() {
    // At the solution the multiplier maximizes the coupling pairing over the
    // box, so its work reaches theta * ||trace u||_{L1} up to tolerance.
    let m = unit_mesh(8);
    for s in [spec(2.0, 0.1, 0.0, [1.0, 0.0]), spec(2.0, 0.4, 0.3, [1.0, 0.0])] {
        let cfg = SolverConfig::recommended(&s);
        let (state, diag) = uzawa_solve(&m, &s, &cfg, None).unwrap();
        assert!(diag.converged);
        let b = CouplingMatrix::from_mesh(&m);
        let work = b.pairing(&state.u, &state.lam);
        let l1: f64 = m
            .trace_edges(SegmentTag::G3)
            .iter()
            .map(|e| abs_power_edge_integral(state.u[e.nodes[0]], state.u[e.nodes[1]], e.length, 1.0))
            .sum();
        assert!(
            work >= s.theta * l1 - 1e-6 * l1.max(1.0),
            "work {work} vs bound {}",
            s.theta * l1
        );
    }
}

#[test]
fn variational_inequality_holds_for_random_test_fields() {
    let m = unit_mesh(6);
    for s in [spec(2.0, 0.25, 0.4, [1.0, 0.5]), spec(3.0, 0.2, 0.3, [1.0, 0.0])] {
        let cfg = SolverConfig::recommended(&s);
        let (state, diag) = uzawa_solve(&m, &s, &cfg, None).unwrap();
        assert!(diag.converged);
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..50 {
            let v: Vec<f64> = (0..m.num_nodes()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let gap = vi_gap(&m, &s, &state, &v).unwrap();
            let allowance = 1e-8 * (1.0 + x_norm(&m, &v, s.r));
            assert!(gap >= -allowance, "r = {}: gap {gap}", s.r);
        }
    }
}
