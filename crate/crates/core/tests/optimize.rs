mod common;

use std::f64::consts::{LN_2, PI};

use common::*;
use greedy_sphere::sphere::{Mesh, MeshStrategy};
use greedy_sphere::{minimize_potential, potential, potential_gradient, KernelSpec, SolverParams, SpherePoint};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small_params() -> SolverParams {
    SolverParams {
        mesh_size: 4000,
        ..SolverParams::default()
    }
}

#[test]
fn potential_examples() {
    let x = SpherePoint::north_pole(2);
    let one = vec![x.antipode()];
    assert!((potential(&one, &KernelSpec::riesz(1.0, 2), &x).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(potential(&one, &KernelSpec::log(2), &one[0]).unwrap(), f64::INFINITY);
    for n in [3usize, 7, 64, 501] {
        let mid = SpherePoint::from_angle(PI / n as f64);
        let v = potential(&roots(n), &KernelSpec::log(1), &mid).unwrap();
        assert!((v + LN_2).abs() < 1e-12, "n={n}: {v}");
    }
    assert!(potential(&[], &KernelSpec::log(2), &x).is_err());
    assert!(potential(&roots(3), &KernelSpec::log(2), &x).is_err());
}

#[test]
fn gradient_vanishes_for_one_antipodal_source() {
    for d in [1usize, 2, 3] {
        let x = SpherePoint::north_pole(d);
        let src = vec![x.antipode()];
        let mut kernels = vec![KernelSpec::log(d), KernelSpec::riesz(-1.0, d), KernelSpec::riesz(0.5, d)];
        if d >= 2 {
            kernels.push(KernelSpec::green(d));
        }
        for k in kernels {
            let g = potential_gradient(&src, &k, &x).unwrap();
            assert!(g.iter().all(|c| c.abs() < 1e-15), "{}: {g:?}", k.label());
        }
    }
}

#[test]
fn gradient_is_undefined_at_a_source() {
    let x = SpherePoint::north_pole(2);
    assert!(potential_gradient(&[x.clone()], &KernelSpec::riesz(1.0, 2), &x).is_err());
}

/// Point reached from `x` along the unit tangent `u` after arc length `h`.
fn geodesic(x: &SpherePoint, u: &[f64], h: f64) -> SpherePoint {
    let v: Vec<f64> = x.coords().iter().zip(u).map(|(a, b)| h.cos() * a + h.sin() * b).collect();
    SpherePoint::normalized(v).unwrap()
}

fn unit_tangent(rng: &mut ChaCha8Rng, x: &SpherePoint) -> Vec<f64> {
    let mut u: Vec<f64> = uniform_point(rng, x.dim()).into_coords();
    let ip: f64 = u.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
    u.iter_mut().zip(x.coords()).for_each(|(a, b)| *a -= ip * b);
    let n = u.iter().map(|a| a * a).sum::<f64>().sqrt();
    u.into_iter().map(|a| a / n).collect()
}

fn check_gradient_by_differences(kernel: KernelSpec, seed: u64, rel: f64) {
    let d = kernel.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let src = uniform_points(&mut rng, d, 12);
        let x = uniform_point(&mut rng, d);
        let g = potential_gradient(&src, &kernel, &x).unwrap();
        let gn = g.iter().map(|a| a * a).sum::<f64>().sqrt();
        let radial: f64 = g.iter().zip(x.coords()).map(|(a, b)| a * b).sum();
        assert!(radial.abs() < 1e-12 * gn.max(1.0));
        for _ in 0..2 {
            let u = unit_tangent(&mut rng, &x);
            let h = 1e-6;
            let fp = potential(&src, &kernel, &geodesic(&x, &u, h)).unwrap();
            let fm = potential(&src, &kernel, &geodesic(&x, &u, -h)).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let exact: f64 = g.iter().zip(&u).map(|(a, b)| a * b).sum();
            assert!((fd - exact).abs() <= rel * gn, "{}: fd {fd} exact {exact}", kernel.label());
        }
    }
}

#[test]
fn gradient_matches_differences_riesz() {
    check_gradient_by_differences(KernelSpec::riesz(1.0, 2), 1, 1e-6);
    check_gradient_by_differences(KernelSpec::riesz(0.5, 3), 2, 1e-6);
    check_gradient_by_differences(KernelSpec::log(2), 3, 1e-6);
}

#[test]
fn gradient_matches_differences_green() {
    check_gradient_by_differences(KernelSpec::green(3), 4, 1e-6);
    check_gradient_by_differences(KernelSpec::green(4), 5, 1e-6);
}

#[test]
fn gradient_respects_reflection_symmetry() {
    // Sources mirrored in the plane y = 0, x on that plane.
    let x = SpherePoint::from_spherical(0.7, 0.0);
    let a = SpherePoint::from_spherical(1.9, 0.8);
    let b = SpherePoint::from_spherical(1.9, -0.8);
    for k in [KernelSpec::riesz(1.0, 2), KernelSpec::log(2), KernelSpec::green(2)] {
        let g = potential_gradient(&[a.clone(), b.clone()], &k, &x).unwrap();
        assert!(g[1].abs() < 1e-10, "{}: {g:?}", k.label());
    }
}

#[test]
fn single_source_on_circle() {
    let r = minimize_potential(&[SpherePoint::from_angle(0.0)], &KernelSpec::log(1), &small_params()).unwrap();
    assert!((r.point.coords()[0] + 1.0).abs() < 1e-12);
    assert!((r.value + LN_2).abs() < 1e-14);
}

#[test]
fn equally_spaced_minimizer_is_an_arc_midpoint() {
    for n in [3usize, 8, 33] {
        let r = minimize_potential(&roots(n), &KernelSpec::riesz(0.5, 1), &small_params()).unwrap();
        let step = 2.0 * PI / n as f64;
        let offset = (r.point.angle() / step).fract();
        assert!((offset - 0.5).abs() < 1e-9, "n={n}: offset {offset}");
    }
}

#[test]
fn two_poles_give_an_equator_point() {
    let np = SpherePoint::north_pole(2);
    let src = vec![np.clone(), np.antipode()];
    let r = minimize_potential(&src, &KernelSpec::riesz(1.0, 2), &small_params()).unwrap();
    // One-dimensional reduction in the polar angle, minimized on a grid.
    let f = |t: f64| 1.0 / (2.0 * (t / 2.0).sin()) + 1.0 / (2.0 * (t / 2.0).cos());
    let grid = (1..100_000).map(|k| f(PI * k as f64 / 100_000.0)).fold(f64::INFINITY, f64::min);
    assert!((r.value - grid).abs() < 1e-9);
    assert!((r.value - 2f64.sqrt()).abs() < 1e-12);
    assert!(r.point.coords()[2].abs() < 1e-6);
    // Deterministic choice among the tied equator points.
    let again = minimize_potential(&src, &KernelSpec::riesz(1.0, 2), &small_params()).unwrap();
    assert_eq!(r.point, again.point);
}

#[test]
fn circle_solver_matches_dense_grid() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for s in [0.0, 0.5, -1.0, -1.5] {
        let kernel = if s == 0.0 { KernelSpec::log(1) } else { KernelSpec::riesz(s, 1) };
        let src: Vec<SpherePoint> = (0..6).map(|_| SpherePoint::from_angle(rng.random_range(0.0..2.0 * PI))).collect();
        let r = minimize_potential(&src, &kernel, &small_params()).unwrap();
        let m = 1_000_000;
        let mut grid = f64::INFINITY;
        for k in 0..m {
            let x = SpherePoint::from_angle(2.0 * PI * k as f64 / m as f64);
            grid = grid.min(potential(&src, &kernel, &x).unwrap());
        }
        assert!(r.value <= grid + 1e-12, "s={s}: solver {} grid {grid}", r.value);
        assert!(grid - r.value <= 1e-9, "s={s}: solver {} grid {grid}", r.value);
    }
}

#[test]
fn minimum_is_rotation_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = SolverParams {
        mesh_size: 20_000,
        ..SolverParams::default()
    };
    for (k, n) in [(KernelSpec::riesz(1.0, 2), 25), (KernelSpec::log(2), 25), (KernelSpec::green(3), 15)] {
        let src = uniform_points(&mut rng, k.dim, n);
        let r = random_rotation(&mut rng, k.dim + 1);
        let rotated: Vec<SpherePoint> = src.iter().map(|p| rotate(&r, p)).collect();
        let a = minimize_potential(&src, &k, &params).unwrap();
        let b = minimize_potential(&rotated, &k, &params).unwrap();
        assert!((a.value - b.value).abs() < 1e-9, "{}: {} vs {}", k.label(), a.value, b.value);
    }
}

#[test]
fn refined_value_is_the_potential_at_the_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let src = uniform_points(&mut rng, 2, 40);
    let k = KernelSpec::riesz(1.0, 2);
    let r = minimize_potential(&src, &k, &small_params()).unwrap();
    assert!((potential(&src, &k, &r.point).unwrap() - r.value).abs() < 1e-12 * r.value.abs());
    // No mesh candidate is better than the refined point.
    let mesh = Mesh::generate(2, 4000, MeshStrategy::FibonacciS2, 0).unwrap();
    for p in mesh.to_points() {
        assert!(potential(&src, &k, &p).unwrap() >= r.value - 1e-12);
    }
}

#[test]
fn invalid_parameters_are_rejected() {
    let src = roots(3);
    let k = KernelSpec::log(1);
    for bad in [
        SolverParams { multistart: 0, ..SolverParams::default() },
        SolverParams { grad_tol: 0.0, ..SolverParams::default() },
        SolverParams { armijo_c: 1.0, ..SolverParams::default() },
        SolverParams { mesh_size: 0, ..SolverParams::default() },
    ] {
        assert!(minimize_potential(&src, &k, &bad).is_err());
    }
    assert!(minimize_potential(&[], &k, &SolverParams::default()).is_err());
    assert!(SolverParams { mesh_size: 100, ..SolverParams::default() }.mesh_warning(20).is_some());
    assert!(SolverParams::default().mesh_warning(20).is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn refinement_never_worsens(seed in any::<u64>(), n in 1usize..30, s in prop::sample::select(vec![-1.0, 0.0, 0.5, 1.0, 1.5])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = if s == 0.0 { KernelSpec::log(2) } else { KernelSpec::riesz(s, 2) };
        let src = uniform_points(&mut rng, 2, n);
        let params = SolverParams { mesh_size: 1500, multistart: 3, ..SolverParams::default() };
        let r = minimize_potential(&src, &k, &params).unwrap();
        prop_assert!(r.value <= r.mesh_value + 1e-12);
    }

    #[test]
    fn circle_refinement_never_worsens(seed in any::<u64>(), n in 1usize..40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src: Vec<SpherePoint> = (0..n).map(|_| SpherePoint::from_angle(rng.random_range(0.0..2.0 * PI))).collect();
        let r = minimize_potential(&src, &KernelSpec::riesz(0.5, 1), &SolverParams::default()).unwrap();
        prop_assert!(r.value <= r.mesh_value + 1e-12);
    }
}
