//! Structural properties of the assembled operators: monotonicity,
//! homogeneity, friction-functional bounds and energy-gradient consistency.

use mixedvi::analysis::compute_constants;
use mixedvi::assembly::{
    apply_a, friction_residual_g4, load_vector, oracle_energy, x_norm, FrictionKind, ProblemSpec,
};
use mixedvi::mesh::{build_rect_mesh, BoundaryPartition, Mesh};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mesh4() -> Mesh<f64> {
    build_rect_mesh(4, 4, 1.0, 1.0, BoundaryPartition::default()).unwrap()
}

fn clamp_free(m: &Mesh<f64>, mut v: Vec<f64>) -> Vec<f64> {
    for &i in &m.dirichlet_nodes {
        v[i] = 0.0;
    }
    v
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn field(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n)
}

proptest! {
    // The operator gap (A(u) - A(v), u - v) dominates M ||u - v||_X^r with
    // M = mu_star / (2^{r-2} r); at least 100 sampled pairs per exponent.
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn operator_gap_dominates_the_monotonicity_modulus(
        u_raw in field(25),
        v_raw in field(25),
        r in prop::sample::select(vec![2.0f64, 2.5, 3.0, 4.0]),
        mu in prop::sample::select(vec![0.5f64, 1.0, 2.0]),
    ) {
        let m = mesh4();
        let u = clamp_free(&m, u_raw);
        let v = clamp_free(&m, v_raw);
        let au = apply_a(&m, &u, mu, r, 0.0).unwrap();
        let av = apply_a(&m, &v, mu, r, 0.0).unwrap();
        let d: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let gap = dot(&au, &d) - dot(&av, &d);
        let modulus = mu / (2.0f64.powf(r - 2.0) * r);
        prop_assert!(
            gap >= modulus * x_norm(&m, &d, r).powf(r) - 1e-10,
            "gap {gap} vs modulus term {}",
            modulus * x_norm(&m, &d, r).powf(r)
        );
    }

    #[test]
    fn operator_is_power_homogeneous(
        u_raw in field(25),
        t in 0.05f64..8.0,
        r in prop::sample::select(vec![2.0f64, 3.0, 4.0]),
    ) {
        let m = mesh4();
        let u = clamp_free(&m, u_raw);
        let scaled: Vec<f64> = u.iter().map(|&x| t * x).collect();
        let a_scaled = apply_a(&m, &scaled, 1.0, r, 0.0).unwrap();
        let a_base = apply_a(&m, &u, 1.0, r, 0.0).unwrap();
        let factor = t.powf(r - 1.0);
        for (s, b) in a_scaled.iter().zip(&a_base) {
            prop_assert!((s - factor * b).abs() <= 1e-10 * (1.0 + s.abs().max((factor * b).abs())));
        }
    }

    #[test]
    fn friction_work_is_antisymmetric_in_the_test_slot(
        u_raw in field(25),
        v_raw in field(25),
    ) {
        let m = mesh4();
        let u = clamp_free(&m, u_raw);
        let v = clamp_free(&m, v_raw);
        let gu = friction_residual_g4(&m, &u, 0.7, FrictionKind::SmoothSign).unwrap();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        // J(u, v) + J(u, -v) = 0 exactly: the functional is linear in v.
        prop_assert_eq!(dot(&gu, &v) + dot(&gu, &neg), 0.0);
    }
}

#[test]
fn friction_work_is_bounded_by_the_functional_constant() {
    let m = mesh4();
    let spec = ProblemSpec::new(1.0, 2.0, 0.0, 0.8, [1.0, 0.0], FrictionKind::SmoothSign).unwrap();
    let c_h = compute_constants(&m, &spec, 17)
        .unwrap()
        .friction_functional_c;
    assert!(c_h > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let u = clamp_free(&m, (0..25).map(|_| rng.random_range(-2.0..2.0)).collect());
        let v = clamp_free(&m, (0..25).map(|_| rng.random_range(-2.0..2.0)).collect());
        let gu = friction_residual_g4(&m, &u, spec.g, spec.j_kind).unwrap();
        let work = dot(&gu, &v).abs();
        let bound = c_h * x_norm(&m, &v, spec.r);
        assert!(
            work <= bound * (1.0 + 1e-8) + 1e-14,
            "work {work} exceeds bound {bound}"
        );
    }
}

#[test]
fn energy_gradient_matches_the_residual() {
    // Central finite differences of the smooth part of the energy against
    // the assembled residual, with the contact term switched off.
    let m = mesh4();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for &r in &[2.0, 3.0, 4.0] {
        let spec = ProblemSpec::new(1.3, r, 0.0, 0.6, [1.0, 0.4], FrictionKind::SmoothSign).unwrap();
        let u = clamp_free(&m, (0..25).map(|_| rng.random_range(-1.0..1.0)).collect());
        let d = clamp_free(&m, (0..25).map(|_| rng.random_range(-1.0..1.0)).collect());
        let f = load_vector(&m, spec.f_coeffs);
        let au = apply_a(&m, &u, spec.mu_star, spec.r, 0.0).unwrap();
        let gu = friction_residual_g4(&m, &u, spec.g, spec.j_kind).unwrap();
        let directional = dot(&au, &d) + dot(&gu, &d) - dot(&f, &d);
        let t = 1e-6;
        let at = |s: f64| -> f64 {
            let w: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            oracle_energy(&m, &w, &spec).total
        };
        let fd = (at(t) - at(-t)) / (2.0 * t);
        let rel = (fd - directional).abs() / directional.abs().max(1.0);
        assert!(rel < 1e-5, "r = {r}: fd {fd} vs residual {directional}");
    }
}
