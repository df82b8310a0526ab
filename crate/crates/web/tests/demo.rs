use greedy_sphere_web::{circle_angles, mean_field, sphere_points};
use std::f64::consts::PI;

#[test]
fn circle_log_fills_dyadic_gaps() {
    let a = circle_angles(0.0, 8).unwrap();
    assert_eq!(a.len(), 8);
    let mut sorted: Vec<f64> = a.iter().map(|t| t.rem_euclid(2.0 * PI)).collect();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        assert!((w[1] - w[0] - PI / 4.0).abs() < 1e-9);
    }
}

#[test]
fn sphere_points_are_unit_vectors() {
    let xyz = sphere_points("riesz", 1.0, 20, 2000).unwrap();
    assert_eq!(xyz.len(), 60);
    assert_eq!(&xyz[..3], &[0.0, 0.0, 1.0]);
    for p in xyz.chunks(3) {
        let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        assert!((r - 1.0).abs() < 1e-12);
    }
    // second point is antipodal
    assert!((xyz[5] + 1.0).abs() < 1e-6);
}

#[test]
fn bad_requests_are_rejected() {
    assert!(circle_angles(0.0, 0).is_err());
    assert!(sphere_points("green", 0.0, 10, 100).is_err());
    assert!(sphere_points("log", 0.0, 10, 0).is_err());
}

#[test]
fn mean_field_riesz_one_on_s2_is_one() {
    // (1/s) * mean of 1/r over S^2 = 1 for s = 1
    assert!((mean_field(1.0, 2).unwrap() - 1.0).abs() < 1e-12);
}
