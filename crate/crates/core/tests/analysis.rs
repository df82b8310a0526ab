mod common;

use common::*;
use greedy_sphere::analysis::{
    asymptotics, conditional_separation_check, fit_power_law, from_csv, polarization_bound_check,
    prefix_energies_direct, prefix_separations, riesz_residuals, separation_exponent, separation_scaling, summarize,
    to_csv, Schedule, CSV_HEADER,
};
use greedy_sphere::kernels::wiener_constant;
use greedy_sphere::sphere::separation;
use greedy_sphere::{build_sequence, energy, KernelSpec, SolverParams, SpherePoint};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn s2_riesz(n: usize) -> greedy_sphere::Configuration {
    let p = SolverParams {
        mesh_size: 4000,
        ..SolverParams::default()
    };
    build_sequence(2, KernelSpec::riesz(1.0, 2), n, SpherePoint::north_pole(2), &p).unwrap()
}

#[test]
fn prefix_helpers_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pts = uniform_points(&mut rng, 2, 40);
    let seps = prefix_separations(&pts);
    assert_eq!(seps[0], f64::INFINITY);
    let k = KernelSpec::riesz(0.5, 2);
    let e = prefix_energies_direct(&pts, &k).unwrap();
    for n in 2..=40 {
        assert!((seps[n - 1] - separation(&pts[..n]).unwrap()).abs() < 1e-15);
        let b = energy(&pts[..n], &k).unwrap();
        assert!((e[n - 1] - b).abs() < 1e-12 * b.abs());
    }
    // Circle separations come from angles, so tiny gaps keep their accuracy.
    let circ = roots(1 << 16);
    let s = prefix_separations(&circ);
    let exact = 2.0 * (std::f64::consts::PI / 65536.0).sin();
    assert!((s[65535] - exact).abs() < 1e-10 * exact);
}

#[test]
fn rows_follow_the_definitions() {
    let seq = s2_riesz(300);
    let i = wiener_constant(1.0, 2).unwrap().value;
    let rows = asymptotics(&seq, &Schedule::dyadic(1, 300)).unwrap();
    assert_eq!(rows.iter().map(|r| r.n).collect::<Vec<_>>(), vec![1, 2, 4, 8, 16, 32, 64, 128, 256, 300]);
    let direct = prefix_energies_direct(&seq.points, &seq.kernel).unwrap();
    for r in &rows {
        let nf = r.n as f64;
        assert!((r.energy - direct[r.n - 1]).abs() <= 1e-8 * direct[r.n - 1].abs().max(1.0));
        assert!((r.residual - (r.energy - i * nf * nf)).abs() < 1e-9 * r.energy.abs().max(1.0));
        assert!((r.normalized_residual.unwrap() - r.residual / nf.powf(1.5)).abs() < 1e-12 * r.residual.abs().max(1.0));
        assert_eq!(r.d_of_n, None);
        if r.n < 300 {
            let p = r.polarization.unwrap();
            assert!((r.pol_residual.unwrap() - (p - i * nf)).abs() < 1e-12 * p.abs());
        } else {
            assert_eq!(r.polarization, None);
        }
        if r.n >= 2 {
            let sep = separation(&seq.points[..r.n]).unwrap();
            assert!((r.sep_scaled.unwrap() - sep * nf.sqrt()).abs() < 1e-12);
        }
    }
    assert!(riesz_residuals(&seq, &Schedule::Every { lo: 1, hi: 10 }).is_ok());
}

#[test]
fn log_rows_carry_d_of_n() {
    let p = SolverParams {
        mesh_size: 4000,
        ..SolverParams::default()
    };
    let seq = build_sequence(2, KernelSpec::log(2), 200, SpherePoint::north_pole(2), &p).unwrap();
    let i = wiener_constant(0.0, 2).unwrap().value;
    for r in asymptotics(&seq, &Schedule::Every { lo: 2, hi: 200 }).unwrap() {
        let nf = r.n as f64;
        let d = (i * nf * nf - r.energy) / (nf * nf.ln());
        assert!((r.d_of_n.unwrap() - d).abs() < 1e-10, "N={}", r.n);
        assert!(d > 0.0);
    }
}

#[test]
fn riesz_residual_exponent_is_near_the_prediction() {
    let seq = s2_riesz(600);
    let rows = asymptotics(&seq, &Schedule::Every { lo: 50, hi: 600 }).unwrap();
    let s = summarize(&seq, &rows).unwrap();
    let fit = s.residual_exponent.unwrap();
    assert!((fit.slope - 1.5).abs() < 0.1, "slope {}", fit.slope);
    assert_eq!(s.predicted_exponent, Some(1.5));
    assert!(s.min_sep_scaled.unwrap() > 0.0);
    assert!(s.min_polarization_margin.unwrap() > 0.0);
}

#[test]
fn separation_scaling_and_exponent() {
    assert_eq!(separation_exponent(&KernelSpec::riesz(1.0, 2)), 0.5);
    assert_eq!(separation_exponent(&KernelSpec::riesz(0.5, 3)), 1.0 / 1.5);
    assert_eq!(separation_exponent(&KernelSpec::log(2)), 0.5);
    assert_eq!(separation_exponent(&KernelSpec::green(3)), 1.0 / 3.0);
    let seq = s2_riesz(100);
    let rows = separation_scaling(&seq).unwrap();
    assert_eq!(rows.len(), 99);
    assert!(rows.iter().all(|r| !r.degenerate && r.scaled > 0.5 && r.scaled_alt.is_none()));
}

#[test]
fn polarization_margin_and_conditional_separation() {
    let seq = s2_riesz(400);
    let rep = polarization_bound_check(&seq, &Schedule::Every { lo: 100, hi: 400 }).unwrap();
    assert!(rep.min_margin().unwrap() > 0.0);
    let rows = conditional_separation_check(&seq, 10.0, &Schedule::Every { lo: 10, hi: 400 }).unwrap();
    assert!(!rows.is_empty());
    assert!(rows.iter().filter(|r| r.triggered).all(|r| r.scaled_distance > 0.1));
    assert!(conditional_separation_check(&seq, 1.0, &Schedule::dyadic(1, 8)).is_ok());
    let log = build_sequence(2, KernelSpec::log(2), 10, SpherePoint::north_pole(2), &SolverParams::default()).unwrap();
    assert!(conditional_separation_check(&log, 1.0, &Schedule::dyadic(1, 8)).is_err());
    assert!(polarization_bound_check(&log, &Schedule::dyadic(1, 8)).is_err());
}

#[test]
fn power_law_fit_recovers_exact_laws() {
    let samples: Vec<(usize, f64)> = (10..200).map(|n| (n, 3.0 * (n as f64).powf(1.25))).collect();
    let f = fit_power_law(&samples).unwrap();
    assert!((f.slope - 1.25).abs() < 1e-12);
    assert!((f.intercept - 3f64.ln()).abs() < 1e-10);
    assert!(fit_power_law(&[(4, 1.0)]).is_none());
}

#[test]
fn csv_schema() {
    let seq = s2_riesz(40);
    let rows = asymptotics(&seq, &Schedule::dyadic(1, 40)).unwrap();
    let csv = to_csv(&rows);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# schema_version=1"));
    assert_eq!(
        lines.next(),
        Some("N,energy,residual,normalized_residual,polarization,pol_residual,separation,sep_scaled,d_of_n")
    );
    for l in lines {
        assert_eq!(l.split(',').count(), CSV_HEADER.len());
    }
    // First row: one point, no separation; last row: no polarization.
    let back = from_csv(&csv).unwrap();
    assert_eq!(back.len(), rows.len());
    assert_eq!(back[0].separation, None);
    assert_eq!(back.last().unwrap().polarization, None);
    for (a, b) in back.iter().zip(&rows) {
        assert_eq!(a.n, b.n);
        assert!((a.energy - b.energy).abs() <= 1e-14 * b.energy.abs().max(1e-300));
    }
    assert!(from_csv(&csv.replace("schema_version=1", "schema_version=2")).is_err());
    assert!(from_csv(&csv.replace("sep_scaled", "scaled")).is_err());
}

#[test]
fn schedules_parse() {
    let s: Schedule = "dyadic".parse().unwrap();
    assert_eq!(s.points(10), vec![2, 4, 8, 10]);
    assert_eq!(Schedule::dyadic(1, 10).points(6), vec![1, 2, 4, 6]);
    let s: Schedule = "all:3:6".parse().unwrap();
    assert_eq!(s.points(100), vec![3, 4, 5, 6]);
    let s: Schedule = "5,1,50".parse().unwrap();
    assert_eq!(s.points(20), vec![1, 5]);
    assert!("bogus".parse::<Schedule>().is_err());
}
