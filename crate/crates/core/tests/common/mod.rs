#![allow(dead_code)]

use std::f64::consts::PI;

use greedy_sphere::SpherePoint;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn uniform_point(rng: &mut ChaCha8Rng, d: usize) -> SpherePoint {
    let v: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
    SpherePoint::normalized(v).unwrap()
}

pub fn uniform_points(rng: &mut ChaCha8Rng, d: usize, n: usize) -> Vec<SpherePoint> {
    (0..n).map(|_| uniform_point(rng, d)).collect()
}

/// Random orthogonal matrix (rows) by Gram-Schmidt on Gaussian vectors.
pub fn random_rotation(rng: &mut ChaCha8Rng, dim: usize) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    while rows.len() < dim {
        let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        for r in &rows {
            let ip: f64 = v.iter().zip(r).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(r).for_each(|(a, b)| *a -= ip * b);
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n > 1e-6 {
            rows.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    rows
}

pub fn rotate(r: &[Vec<f64>], p: &SpherePoint) -> SpherePoint {
    let v: Vec<f64> = r
        .iter()
        .map(|row| row.iter().zip(p.coords()).map(|(a, b)| a * b).sum())
        .collect();
    SpherePoint::normalized(v).unwrap()
}

pub fn roots(n: usize) -> Vec<SpherePoint> {
    (0..n)
        .map(|k| SpherePoint::from_angle(2.0 * PI * k as f64 / n as f64))
        .collect()
}

/// Riesz or log kernel from the chord length.
pub fn k_chord(s: f64, r: f64) -> f64 {
    if s == 0.0 {
        -r.ln()
    } else {
        r.powf(-s) / s
    }
}

/// `2 Σ_{i<j} K(|x_i - x_j|)` in plain floating point.
pub fn brute_energy(points: &[SpherePoint], s: f64) -> f64 {
    let mut e = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            e += 2.0 * k_chord(s, points[i].distance(&points[j]));
        }
    }
    e
}

/// Angular difference folded into `[0, π]`.
pub fn angle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d)
}
