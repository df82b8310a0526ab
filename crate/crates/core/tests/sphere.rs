mod common;

use std::f64::consts::PI;

use common::*;
use greedy_sphere::sphere::{
    cap_measure, candidate_mesh, equal_area_partition, geodesic_distance, separation, Cap, Mesh, MeshStrategy,
};
use greedy_sphere::SpherePoint;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn partition_areas_and_diameters_up_to_2000() {
    for n in 1..=2000usize {
        let regions = equal_area_partition(n).unwrap();
        assert_eq!(regions.len(), n);
        let bound = 7.0 / (n as f64).sqrt();
        let mut total = 0.0;
        for r in &regions {
            assert!((r.area - 1.0 / n as f64).abs() < 1e-12, "N={n}: area {}", r.area);
            assert!(r.diameter_bound <= bound.min(2.0), "N={n}: diameter {}", r.diameter_bound);
            total += r.area;
        }
        assert!((total - 1.0).abs() < 1e-10);
    }
}

#[test]
fn partition_regions_tile_the_sphere() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for n in [2usize, 7, 50, 333] {
        let regions = equal_area_partition(n).unwrap();
        let mut counts = vec![0usize; n];
        let m = 200_000;
        for _ in 0..m {
            let p = uniform_point(&mut rng, 2);
            let hits: Vec<usize> = (0..n).filter(|&i| regions[i].contains(&p)).collect();
            assert!(!hits.is_empty(), "N={n}: uncovered point");
            counts[hits[0]] += 1;
        }
        // Each cell gets a binomial share; five standard deviations.
        let q = 1.0 / n as f64;
        let sd = (m as f64 * q * (1.0 - q)).sqrt();
        for c in counts {
            assert!((c as f64 - m as f64 * q).abs() < 5.0 * sd, "N={n}: count {c}");
        }
    }
}

#[test]
fn region_samples_stay_inside() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for r in equal_area_partition(97).unwrap() {
        for _ in 0..20 {
            assert!(r.contains(&r.sample(&mut rng)));
        }
    }
}

#[test]
fn cap_measure_matches_monte_carlo() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for d in [1usize, 2, 3, 5] {
        let pts = uniform_points(&mut rng, d, 100_000);
        let center = SpherePoint::north_pole(d);
        for a in [0.3, 1.0, PI / 2.0, 2.5] {
            let cap = Cap::new(center.clone(), a).unwrap();
            let frac = pts.iter().filter(|p| cap.contains(p)).count() as f64 / pts.len() as f64;
            let exact = cap_measure(d, a).unwrap();
            assert!((frac - exact).abs() < 0.01, "d={d} a={a}: {frac} vs {exact}");
        }
    }
    assert!((cap_measure(2, 1.1).unwrap() - (1.0 - 1.1f64.cos()) / 2.0).abs() < 1e-15);
    assert!((cap_measure(1, 1.1).unwrap() - 1.1 / PI).abs() < 1e-14);
    assert!(cap_measure(2, 0.0).is_err());
    assert!(cap_measure(2, 3.5).is_err());
}

#[test]
fn random_mesh_is_centered() {
    for d in [2usize, 3] {
        let mesh = Mesh::generate(d, 100_000, MeshStrategy::RandomUniform, 11).unwrap();
        let mut mean = vec![0.0; d + 1];
        for p in mesh.flat().chunks_exact(d + 1) {
            mean.iter_mut().zip(p).for_each(|(m, c)| *m += c);
        }
        let norm = mean.iter().map(|m| m * m).sum::<f64>().sqrt() / mesh.len() as f64;
        assert!(norm <= 0.02, "d={d}: {norm}");
    }
}

#[test]
fn meshes_reject_bad_requests() {
    assert!(Mesh::generate(3, 100, MeshStrategy::FibonacciS2, 0).is_err());
    assert!(Mesh::generate(2, 0, MeshStrategy::FibonacciS2, 0).is_err());
    assert_eq!(candidate_mesh(2, 500, MeshStrategy::FibonacciS2, 0).unwrap().len(), 500);
}

#[test]
fn fibonacci_mesh_covers_the_sphere() {
    let m = 20_000;
    let mesh = Mesh::generate(2, m, MeshStrategy::FibonacciS2, 0).unwrap().to_points();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    // Covering radius of a good lattice is a small multiple of the spacing.
    let spacing = (4.0 * PI / m as f64).sqrt();
    for _ in 0..300 {
        let x = uniform_point(&mut rng, 2);
        let near = mesh.iter().map(|p| p.distance(&x)).fold(f64::INFINITY, f64::min);
        assert!(near < spacing, "{near} vs {spacing}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn separation_is_rotation_invariant(seed in any::<u64>(), d in 1usize..5, n in 2usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = uniform_points(&mut rng, d, n);
        let r = random_rotation(&mut rng, d + 1);
        let rotated: Vec<SpherePoint> = pts.iter().map(|p| rotate(&r, p)).collect();
        let a = separation(&pts).unwrap();
        let b = separation(&rotated).unwrap();
        prop_assert!((a - b).abs() <= 1e-12);
    }

    #[test]
    fn chord_and_geodesic_agree(seed in any::<u64>(), d in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = uniform_point(&mut rng, d);
        let y = uniform_point(&mut rng, d);
        let g = geodesic_distance(&x, &y).unwrap();
        prop_assert!((x.distance(&y) - 2.0 * (g / 2.0).sin()).abs() < 1e-12);
        prop_assert!((0.0..=PI).contains(&g));
    }

    #[test]
    fn cap_measure_is_monotone(d in 1usize..8, a in 1e-3f64..PI, b in 1e-3f64..PI) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (ml, mh) = (cap_measure(d, lo).unwrap(), cap_measure(d, hi).unwrap());
        prop_assert!(ml <= mh + 1e-15);
        prop_assert!((0.0..=1.0 + 1e-15).contains(&ml));
        // Complementary caps.
        prop_assert!((cap_measure(d, a).unwrap() + cap_measure(d, PI - a).unwrap() - 1.0).abs() < 1e-12);
    }
}
