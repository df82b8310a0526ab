//! Closed-form results on the circle used as ground truth: van der Corput
//! order, energies of equally spaced points and the greedy brackets.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::analysis::prefix_energies_direct;
use crate::error::{Error, Result};
use crate::greedy::{build_sequence, Configuration};
use crate::kernels::special::{sinc_power_coeffs, zeta};
use crate::kernels::KernelSpec;
use crate::optimize::SolverParams;
use crate::quad::CompensatedSum;
use crate::sphere::SpherePoint;
use crate::verify::Check;

/// Slack on the bracket edges of the circle bounds.
pub const BRACKET_TOL: f64 = 1e-9;

/// Points of `S^1` by angle in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleConfig {
    angles: Vec<f64>,
}

impl CircleConfig {
    /// Reduces angles into `[0, 2π)` and rejects repeats.
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        let angles: Vec<f64> = angles.into_iter().map(|a| a.rem_euclid(2.0 * PI)).collect();
        let mut sorted = angles.clone();
        sorted.sort_by(f64::total_cmp);
        let wraps = sorted.len() > 1 && sorted[0] + 2.0 * PI == sorted[sorted.len() - 1];
        if sorted.windows(2).any(|w| w[0] == w[1]) || wraps {
            return Err(Error::InvalidArgument("circle angles must be distinct".into()));
        }
        Ok(CircleConfig { angles })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn to_points(&self) -> Vec<SpherePoint> {
        self.angles.iter().map(|&a| SpherePoint::from_angle(a)).collect()
    }

    /// Angles sorted ascending.
    pub fn sorted(&self) -> Vec<f64> {
        let mut v = self.angles.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// `k`-th term of the base-2 van der Corput sequence: the bits of `k`
/// mirrored about the binary point.
pub fn van_der_corput_fraction(mut k: u64) -> f64 {
    let mut x = 0.0;
    let mut scale = 0.5;
    while k > 0 {
        if k & 1 == 1 {
            x += scale;
        }
        k >>= 1;
        scale *= 0.5;
    }
    x
}

/// The first `n` angles `2π·vdc(k)`, starting from 0.
pub fn van_der_corput(n: usize) -> CircleConfig {
    CircleConfig {
        angles: (0..n as u64).map(|k| 2.0 * PI * van_der_corput_fraction(k)).collect(),
    }
}

/// `n` equally spaced angles starting from 0.
pub fn roots_of_unity(n: usize) -> CircleConfig {
    CircleConfig {
        angles: (0..n).map(|k| 2.0 * PI * k as f64 / n as f64).collect(),
    }
}

fn circle_kernel(s: f64) -> KernelSpec {
    if s == 0.0 {
        KernelSpec::log(1)
    } else {
        KernelSpec::riesz(s, 1)
    }
}

/// `E_s(ω*_n) = n Σ_{k=1}^{n-1} K(2 sin(πk/n))`, summed term by term.
pub fn equally_spaced_energy_brute(s: f64, n: usize) -> Result<f64> {
    let eval = circle_kernel(s).evaluator()?;
    let mut acc = CompensatedSum::default();
    for k in 1..n {
        let h = (PI * k as f64 / n as f64).sin();
        acc.add(eval.value_sq(4.0 * h * h));
    }
    Ok(n as f64 * acc.value())
}

/// Energy of `n` equally spaced points from the zeta expansion with `q+1`
/// terms. `s = 0` uses `-n log n`.
pub fn equally_spaced_energy(s: f64, n: usize, q: usize) -> Result<f64> {
    let nf = n as f64;
    if s == 0.0 {
        return Ok(-nf * nf.ln());
    }
    if !(s > -2.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "the expansion is used for -2 < s < 1, got {s}"
        )));
    }
    if (q as f64) < (s - 1.0) / 2.0 {
        return Err(Error::InvalidArgument(format!("q = {q} is too small for s = {s}")));
    }
    let i = crate::kernels::wiener_constant(s, 1)?.value;
    let a = sinc_power_coeffs(s, q).a;
    let mut acc = CompensatedSum::default();
    for (m, am) in a.iter().enumerate() {
        let e = s - 2.0 * m as f64;
        acc.add(am * zeta(e)? * nf.powf(1.0 + e));
    }
    Ok(i * nf * nf + 2.0 / (s * (2.0 * PI).powf(s)) * acc.value())
}

/// Polarization of `n` equally spaced points as the energy difference
/// `E(ω*_{2n})/(2n) - E(ω*_n)/n`, from direct sums.
pub fn roots_polarization(s: f64, n: usize) -> Result<f64> {
    if !(s > -2.0 && s < 1.0) {
        return Err(Error::InvalidArgument(format!("needs -2 < s < 1, got {s}")));
    }
    if n < 1 {
        return Err(Error::InvalidArgument("needs n >= 1".into()));
    }
    let nf = n as f64;
    Ok(equally_spaced_energy_brute(s, 2 * n)? / (2.0 * nf) - equally_spaced_energy_brute(s, n)? / nf)
}

/// Limit of `(P(ω*_n) - I n) / n^s`: `2 ζ(s) (2^s - 1) / (s (2π)^s)`.
pub fn roots_polarization_second_order(s: f64) -> Result<f64> {
    if s == 0.0 {
        return Err(Error::InvalidArgument("no power-law term at s = 0".into()));
    }
    Ok(2.0 / (s * (2.0 * PI).powf(s)) * zeta(s)? * (2f64.powf(s) - 1.0))
}

/// Greedy sequence on `S^1` from angle 0 by the exact arc search.
pub fn greedy_circle(s: f64, n: usize, params: &SolverParams) -> Result<Configuration> {
    build_sequence(1, circle_kernel(s), n, SpherePoint::from_angle(0.0), params)
}

/// Outcome of [`greedy_circle_verify`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CircleVerdict {
    pub s: f64,
    pub n: usize,
    pub checks: Vec<Check>,
}

impl CircleVerdict {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Tracks the worst value of a per-`N` margin that must stay `≥ 0`.
struct Margin {
    worst: f64,
    worst_n: usize,
    first_failure: Option<usize>,
}

impl Margin {
    fn new() -> Self {
        Margin {
            worst: f64::INFINITY,
            worst_n: 0,
            first_failure: None,
        }
    }

    fn see(&mut self, n: usize, m: f64, tol: f64) {
        if m < self.worst || m.is_nan() {
            self.worst = m;
            self.worst_n = n;
        }
        if !(m >= -tol) && self.first_failure.is_none() {
            self.first_failure = Some(n);
        }
    }

    fn check(self, name: &str, bound: &str) -> Check {
        Check::new(
            name,
            self.first_failure.is_none(),
            format!(
                "{bound}; worst margin {:.3e} at N = {}{}",
                self.worst,
                self.worst_n,
                self.first_failure
                    .map(|n| format!("; first violation at N = {n}"))
                    .unwrap_or_default()
            ),
        )
        .with_margin(self.first_failure.unwrap_or(self.worst_n), self.worst)
    }
}

/// Range of a normalized quantity over `N`.
fn range_of(values: impl Iterator<Item = (usize, f64)>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(v), hi.max(v)))
}

/// Builds the greedy sequence for `-2 < s < 1` and checks the energy and
/// polarization brackets for every `N ≤ n`. For `s = 0` the brackets are
/// explicit; otherwise the constants are unknown and the checks are the
/// signs the brackets force, with the normalized ranges reported.
pub fn greedy_circle_verify(s: f64, n: usize, params: &SolverParams) -> Result<CircleVerdict> {
    let seq = greedy_circle(s, n + 1, params)?;
    verify_circle_sequence(&seq, n)
}

/// [`greedy_circle_verify`] on an existing run of at least `n + 1` points.
pub fn verify_circle_sequence(seq: &Configuration, n: usize) -> Result<CircleVerdict> {
    let s = match seq.kernel.exponent() {
        Some(s) if seq.dim == 1 && s > -2.0 && s < 1.0 => s,
        _ => {
            return Err(Error::InvalidArgument(
                "circle verification needs a Riesz or log run on S^1 with -2 < s < 1".into(),
            ))
        }
    };
    if seq.len() < n + 1 || n < 2 {
        return Err(Error::InvalidArgument(format!(
            "need n >= 2 and n + 1 points, have {} for n = {n}",
            seq.len()
        )));
    }
    let energies = prefix_energies_direct(&seq.points[..n], &seq.kernel)?;
    let i = crate::kernels::wiener_constant(s, 1)?.value;
    let resid = |m: usize| energies[m - 1] - i * (m * m) as f64;
    let pol = |m: usize| seq.step_values[m - 1] - i * m as f64;
    let mut checks = Vec::new();
    let tol = BRACKET_TOL;
    if s == 0.0 {
        let mut lo = Margin::new();
        let mut hi = Margin::new();
        for m in 2..=n {
            let r = resid(m) + (m as f64) * (m as f64).ln();
            lo.see(m, r, tol);
            hi.see(m, (4.0f64 / 3.0).ln() * m as f64 - r, tol);
        }
        checks.push(lo.check("energy lower bracket", "E + N log N >= 0"));
        checks.push(hi.check("energy upper bracket", "E + N log N <= log(4/3) N"));
        let mut plo = Margin::new();
        let mut phi = Margin::new();
        for m in 1..=n {
            let p = pol(m);
            plo.see(m, p + ((m + 1) as f64).ln(), tol);
            phi.see(m, -p, tol);
        }
        checks.push(plo.check("polarization lower bracket", "P - I N >= -log(N+1)"));
        checks.push(phi.check("polarization upper bracket", "P - I N <= 0"));
    } else {
        let norm_e: Vec<(usize, f64)> = (2..=n).map(|m| (m, resid(m) / (m as f64).powf(s + 1.0))).collect();
        let (elo, ehi) = range_of(norm_e.iter().copied());
        let mut sign = Margin::new();
        let (what, scale_note) = if s > 0.0 {
            for &(m, v) in &norm_e {
                sign.see(m, -v, 0.0);
            }
            ("energy residual negative", "(E - I N^2)/N^(s+1) < 0")
        } else {
            for m in 2..=n {
                sign.see(m, resid(m), tol * (m * m) as f64);
            }
            ("energy residual positive", "E - I N^2 > 0")
        };
        let mut c = sign.check(what, scale_note);
        c.detail.push_str(&format!("; (E - I N^2)/N^(s+1) in [{elo:.6e}, {ehi:.6e}]"));
        checks.push(c);
        if s == -1.0 {
            let (lo, hi) = range_of((2..=n).map(|m| (m, resid(m) / (m as f64).ln())));
            checks.push(Check::new(
                "energy residual over log N",
                hi.is_finite() && lo > 0.0,
                format!("(E - I N^2)/log N in [{lo:.6e}, {hi:.6e}]"),
            ));
        } else if s < -1.0 {
            let (lo, hi) = range_of((2..=n).map(|m| (m, resid(m))));
            checks.push(Check::new(
                "energy residual bounded",
                hi.is_finite() && lo > 0.0,
                format!("E - I N^2 in [{lo:.6e}, {hi:.6e}]"),
            ));
        }
        if s > 0.0 {
            let norm_p: Vec<(usize, f64)> = (1..=n).map(|m| (m, pol(m) / (m as f64).powf(s))).collect();
            let (plo, phi) = range_of(norm_p.iter().copied());
            let mut neg = Margin::new();
            for &(m, v) in &norm_p {
                neg.see(m, -v, 0.0);
            }
            let mut c = neg.check("polarization residual negative", "(P - I N)/N^s < 0");
            c.detail.push_str(&format!("; (P - I N)/N^s in [{plo:.6e}, {phi:.6e}]"));
            checks.push(c);
        } else {
            // The lower edge is the magnitude of I (negative for s < 0).
            let mut lo = Margin::new();
            let mut hi = Margin::new();
            for m in 1..=n {
                let p = pol(m);
                lo.see(m, p + i.abs(), tol * m as f64);
                hi.see(m, -p, tol * m as f64);
            }
            checks.push(lo.check("polarization lower bracket", "P - I N >= -|I|"));
            checks.push(hi.check("polarization upper bracket", "P - I N <= 0"));
        }
    }
    Ok(CircleVerdict { s, n, checks })
}

/// Whether `angles` and `reference` agree as sets within `tol` in angle,
/// treating `2π` and `0` as the same point.
pub fn same_angle_set(angles: &[f64], reference: &[f64], tol: f64) -> bool {
    if angles.len() != reference.len() {
        return false;
    }
    let norm = |v: &[f64]| {
        let mut w: Vec<f64> = v
            .iter()
            .map(|a| {
                let r = a.rem_euclid(2.0 * PI);
                if 2.0 * PI - r <= tol {
                    0.0
                } else {
                    r
                }
            })
            .collect();
        w.sort_by(f64::total_cmp);
        w
    };
    norm(angles)
        .iter()
        .zip(norm(reference))
        .all(|(a, b)| (a - b).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vdc_small() {
        assert_eq!(van_der_corput(4).angles(), [0.0, PI, PI / 2.0, 1.5 * PI]);
        assert_eq!(van_der_corput_fraction(6), 0.375);
    }

    #[test]
    fn rejects_repeated_angles() {
        assert!(CircleConfig::new(vec![0.0, 2.0 * PI]).is_err());
        assert!(CircleConfig::new(vec![1.0, 1.0]).is_err());
        assert!(CircleConfig::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn angle_sets() {
        assert!(same_angle_set(&[2.0 * PI - 1e-12, 1.0], &[1.0, 0.0], 1e-9));
        assert!(!same_angle_set(&[0.5, 1.0], &[1.0, 0.0], 1e-9));
    }
}
