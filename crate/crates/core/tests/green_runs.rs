use greedy_sphere::analysis::{asymptotics, green_d_of_n, Schedule};
use greedy_sphere::green_runs::{greedy_green, green_polarization_margin, partition_upper_bound_config, GreenRunConfig};
use greedy_sphere::kernels::{green_kernel, wiener_constant};
use greedy_sphere::{energy, KernelSpec, SolverParams, SpherePoint};

fn params() -> SolverParams {
    SolverParams {
        mesh_size: 3000,
        ..SolverParams::default()
    }
}

#[test]
fn second_green_point_is_antipodal() {
    for d in [3usize, 4] {
        let seq = greedy_green(d, 2, &params()).unwrap();
        let np = SpherePoint::north_pole(d);
        assert!(seq.points[1].distance(&np.antipode()) < 1e-6, "d={d}");
        let g2 = green_kernel(&np, &np.antipode(), d).unwrap();
        assert!((seq.step_values[0] - g2).abs() < 1e-10, "d={d}");
    }
}

#[test]
fn antipodal_pair_d_of_n() {
    // D(2) = -2 g(2) / 2^{2-2/d}.
    let seq = greedy_green(3, 2, &params()).unwrap();
    let np = SpherePoint::north_pole(3);
    let g2 = green_kernel(&np, &np.antipode(), 3).unwrap();
    let rows = green_d_of_n(&seq, &Schedule::Explicit(vec![2])).unwrap();
    let expected = -2.0 * g2 / 2f64.powf(2.0 - 2.0 / 3.0);
    assert!((rows[0].1 - expected).abs() < 1e-10);
}

#[test]
fn green_runs_have_negative_steps_and_matching_rows() {
    let seq = greedy_green(3, 60, &params()).unwrap();
    assert!(seq.step_values.iter().all(|p| *p < 0.0));
    let d_rows = green_d_of_n(&seq, &Schedule::dyadic(2, 60)).unwrap();
    let rows = asymptotics(&seq, &Schedule::dyadic(2, 60)).unwrap();
    for ((n, d), r) in d_rows.iter().zip(&rows) {
        assert_eq!(*n, r.n);
        assert!((r.d_of_n.unwrap() - d).abs() < 1e-12);
        let direct = energy(&seq.points[..*n], &seq.kernel).unwrap();
        assert!((r.energy - direct).abs() < 1e-6 * direct.abs().max(1.0));
    }
    let margins = green_polarization_margin(&seq, &Schedule::dyadic(2, 60)).unwrap();
    assert!(margins.iter().all(|m| m.n < 60 && m.scaled_polarization < 0.0));
}

#[test]
fn green_config_rejects_low_dimensions() {
    let err = GreenRunConfig::new(2, 10, params()).run().unwrap_err().to_string();
    assert!(err.contains("log"), "{err}");
    assert!(greedy_green(1, 10, &params()).is_err());
    let log = greedy_sphere::build_sequence(2, KernelSpec::log(2), 5, SpherePoint::north_pole(2), &params()).unwrap();
    assert!(green_d_of_n(&log, &Schedule::dyadic(1, 5)).is_err());
}

#[test]
fn partition_configurations_beat_the_mean_field() {
    let i = wiener_constant(0.0, 2).unwrap().value;
    let mut ratios = Vec::new();
    for seed in 0..16 {
        let s = partition_upper_bound_config(1024, seed).unwrap();
        assert_eq!(s.points.len(), 1024);
        assert!((s.mean_field - 1024.0 * 1024.0 * i).abs() < 1e-6);
        assert!((s.energy - energy(&s.points, &KernelSpec::log(2)).unwrap()).abs() < 1e-9 * s.energy.abs());
        ratios.push(s.bound_ratio.unwrap());
    }
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(mean > 0.0, "mean ratio {mean}");
    let one = partition_upper_bound_config(1, 3).unwrap();
    assert_eq!(one.energy, 0.0);
    assert_eq!(one.bound_ratio, None);
    let two: f64 = (0..64).map(|seed| partition_upper_bound_config(2, seed).unwrap().energy).sum::<f64>() / 64.0;
    // Two independent uniform points average 2 I; opposite hemispheres do better.
    assert!(two < 2.0 * i, "{two} vs {}", 2.0 * i);
    // Same seed, same points.
    assert_eq!(partition_upper_bound_config(50, 7).unwrap(), partition_upper_bound_config(50, 7).unwrap());
}
