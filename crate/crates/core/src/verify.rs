//! Named verification suites: oracle identities and reference runs whose
//! measured constants are pinned in `baselines/*.json`.

use std::collections::BTreeMap;
use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::analysis::{
    polarization_bound_check, prefix_energies_direct, prefix_separations, residual_exponent, riesz_residuals,
    Schedule,
};
use crate::circle::{
    equally_spaced_energy, equally_spaced_energy_brute, greedy_circle, roots_of_unity, roots_polarization,
    roots_polarization_second_order, same_angle_set, van_der_corput, verify_circle_sequence,
};
use crate::error::{Error, Result};
use crate::greedy::{build_sequence, Configuration};
use crate::green_runs::{greedy_green, green_polarization_margin};
use crate::kernels::special::{beta, incomplete_beta, zeta};
use crate::kernels::{
    green::sphere_volume, k_of_a, riesz_kernel, riesz_laplace_beltrami, wiener_constant, GreenSeries, KernelSpec,
};
use crate::optimize::{minimize_potential, SolverParams};
use crate::quad::beta_weighted;
use crate::sphere::SpherePoint;

/// Relative tolerance against pinned baselines.
pub const BASELINE_REL: f64 = 0.05;

/// One verified assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// `N` of the worst (or first failing) case, when the check runs over `N`.
    pub n: Option<usize>,
    pub margin: Option<f64>,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
            n: None,
            margin: None,
        }
    }

    pub fn with_margin(mut self, n: usize, margin: f64) -> Self {
        self.n = Some(n);
        self.margin = Some(margin);
        self
    }

    /// `|value - expected| ≤ tol`.
    pub fn close(name: &str, value: f64, expected: f64, tol: f64) -> Self {
        let err = (value - expected).abs();
        Check::new(
            name,
            err <= tol,
            format!("value {value:.15e}, expected {expected:.15e}, error {err:.2e} (tol {tol:.0e})"),
        )
    }

    /// `|value - expected| ≤ rel |expected|`.
    pub fn close_rel(name: &str, value: f64, expected: f64, rel: f64) -> Self {
        let err = (value - expected).abs() / expected.abs();
        Check::new(
            name,
            err <= rel,
            format!("value {value:.15e}, expected {expected:.15e}, relative error {err:.2e} (tol {rel:.0e})"),
        )
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Circle,
    Kernels,
    Green,
    Separation,
    Log,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Circle, Suite::Kernels, Suite::Green, Suite::Separation, Suite::Log];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Circle => "circle",
            Suite::Kernels => "kernels",
            Suite::Green => "green",
            Suite::Separation => "separation",
            Suite::Log => "log",
        }
    }

    /// Whether the suite compares against pinned measurements.
    pub fn has_baseline(self) -> bool {
        self != Suite::Kernels
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite '{s}'")))
    }
}

/// Measured constants of a suite's reference run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Baseline {
    pub suite: String,
    pub version: String,
    pub values: BTreeMap<String, f64>,
}

impl Baseline {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("baseline file: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("baseline serializes") + "\n"
    }
}

/// The baseline shipped with the library.
pub fn embedded_baseline(suite: Suite) -> Option<Baseline> {
    let text = match suite {
        Suite::Circle => include_str!("../baselines/circle.json"),
        Suite::Green => include_str!("../baselines/green.json"),
        Suite::Separation => include_str!("../baselines/separation.json"),
        Suite::Log => include_str!("../baselines/log.json"),
        Suite::Kernels => return None,
    };
    Some(Baseline::from_json(text).expect("embedded baseline parses"))
}

/// Result of a suite.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    /// Constants measured by the reference run, in baseline form.
    pub measured: BTreeMap<String, f64>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn baseline(&self) -> Baseline {
        Baseline {
            suite: self.suite.name().into(),
            version: crate::greedy::SOFTWARE_VERSION.into(),
            values: self.measured.clone(),
        }
    }
}

/// Accumulates checks and measurements, comparing the latter against a
/// baseline when one is given.
struct Recorder<'a> {
    checks: Vec<Check>,
    measured: BTreeMap<String, f64>,
    baseline: Option<&'a Baseline>,
}

impl<'a> Recorder<'a> {
    fn new(baseline: Option<&'a Baseline>) -> Self {
        Recorder {
            checks: Vec::new(),
            measured: BTreeMap::new(),
            baseline,
        }
    }

    fn push(&mut self, c: Check) {
        self.checks.push(c);
    }

    /// Records a measured constant and, with a baseline, checks it lies
    /// within [`BASELINE_REL`] of the pinned value.
    fn pin(&mut self, key: &str, value: f64) {
        self.measured.insert(key.into(), value);
        let Some(b) = self.baseline else { return };
        let name = format!("{key} vs baseline");
        match b.values.get(key) {
            Some(&pinned) => {
                let rel = (value - pinned).abs() / pinned.abs();
                self.push(Check::new(
                    &name,
                    rel <= BASELINE_REL,
                    format!("measured {value:.6e}, pinned {pinned:.6e}, relative difference {rel:.2e}"),
                ));
            }
            None => self.push(Check::new(&name, false, "no pinned value in the baseline".into())),
        }
    }
}

/// Runs a suite. With `baseline = None` measured constants are collected
/// without comparison, which is how baselines are recorded.
pub fn run_suite(suite: Suite, baseline: Option<&Baseline>) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rec = Recorder::new(baseline);
    match suite {
        Suite::Kernels => kernels_suite(&mut rec)?,
        Suite::Circle => circle_suite(&mut rec)?,
        Suite::Separation => separation_suite(&mut rec)?,
        Suite::Log => log_suite(&mut rec)?,
        Suite::Green => green_suite(&mut rec)?,
    }
    Ok(SuiteReport {
        suite,
        checks: rec.checks,
        measured: rec.measured,
        seconds: start.elapsed().as_secs_f64(),
    })
}

// ---- reference runs ---------------------------------------------------------

/// Circle runs: the arc search ignores the mesh.
pub fn circle_params() -> SolverParams {
    SolverParams {
        multistart: 4,
        ..SolverParams::default()
    }
}

/// `S^2` reference runs.
pub fn s2_params() -> SolverParams {
    SolverParams {
        mesh_size: 200_000,
        ..SolverParams::default()
    }
}

/// `S^3` Green reference run.
pub fn s3_params() -> SolverParams {
    SolverParams {
        mesh_size: 30_000,
        ..SolverParams::default()
    }
}

pub const CIRCLE_N: usize = 4096;
pub const S2_N: usize = 2000;
pub const S3_N: usize = 500;

/// The `S^2` Riesz `s = 1` reference run, one point beyond [`S2_N`] so
/// that polarization is known up to `S2_N`.
pub fn s2_riesz_run() -> Result<Configuration> {
    build_sequence(2, KernelSpec::riesz(1.0, 2), S2_N + 1, SpherePoint::north_pole(2), &s2_params())
}

pub fn s2_log_run() -> Result<Configuration> {
    build_sequence(2, KernelSpec::log(2), S2_N + 1, SpherePoint::north_pole(2), &s2_params())
}

pub fn s3_green_run() -> Result<Configuration> {
    greedy_green(3, S3_N + 1, &s3_params())
}

/// Largest relative gap between the recorded-step energies and direct sums
/// over the scheduled prefixes.
pub fn identity_gap(seq: &Configuration, schedule: &Schedule) -> Result<f64> {
    let direct = prefix_energies_direct(&seq.points, &seq.kernel)?;
    let steps = seq.prefix_energies();
    Ok(schedule
        .points(seq.len())
        .into_iter()
        .filter(|&n| n >= 2)
        .map(|n| (steps[n - 1] - direct[n - 1]).abs() / direct[n - 1].abs())
        .fold(0.0, f64::max))
}

fn min_over<I: Iterator<Item = (usize, f64)>>(it: I) -> (usize, f64) {
    it.fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
}

fn max_over<I: Iterator<Item = (usize, f64)>>(it: I) -> (usize, f64) {
    it.fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
}

// ---- suites -----------------------------------------------------------------

fn kernels_suite(rec: &mut Recorder) -> Result<()> {
    let g2 = GreenSeries::shared(2)?;
    let mut worst = 0.0f64;
    for k in 0..100 {
        let t = 0.1 + 1.9 * k as f64 / 99.0;
        let closed = -t.ln() / (2.0 * PI) - 1.0 / (4.0 * PI) + LN_2 / (2.0 * PI);
        worst = worst.max((g2.value(t)? - closed).abs());
    }
    rec.push(Check::new(
        "Green S^2 series vs closed form",
        worst <= 1e-8,
        format!("max error {worst:.2e} over 100 samples of t in [0.1, 2] (tol 1e-8)"),
    ));

    for d in [3, 4] {
        let g = GreenSeries::shared(d)?;
        let a = 0.5 * d as f64;
        let m = beta_weighted(|v| g.value(2.0 * v.sqrt()).unwrap_or(f64::NAN), a, a, 1e-12)? / beta(a, a);
        rec.push(Check::close(&format!("Green S^{d} zero mean"), m, 0.0, 1e-6));
    }

    let a = 1e-2;
    for d in [2, 3, 4] {
        let predicted = a * a / ((2.0 * d as f64 + 4.0) * sphere_volume(d));
        rec.push(Check::close_rel(&format!("K(a) small angle, d = {d}"), k_of_a(d, a)?, predicted, 1e-3));
    }
    for d in [3, 4] {
        let predicted = k_of_a(d, PI)? - a * a / ((2.0 * d as f64 - 4.0) * sphere_volume(d));
        rec.push(Check::close_rel(&format!("K(pi - a) near pi, d = {d}"), k_of_a(d, PI - a)?, predicted, 1e-3));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let d = rng.random_range(2..=4usize);
        let df = d as f64;
        let s = rng.random_range(df - 1.9..df - 0.1);
        let theta = rng.random_range(0.2..PI - 0.2);
        let y = random_point(&mut rng, d);
        let exact = riesz_laplace_beltrami(&rotate_from(&y, theta), &y, s, d)?;
        let fd = fd_laplacian(&y, theta, s, d, 1e-3);
        worst = worst.max((fd - exact).abs() / exact.abs());
    }
    rec.push(Check::new(
        "Laplace-Beltrami vs finite differences",
        worst <= 1e-4,
        format!("max relative error {worst:.2e} over 100 random (x, y, s, d) (tol 1e-4)"),
    ));
    let y = SpherePoint::north_pole(2);
    rec.push(Check::close(
        "Laplace-Beltrami of log on S^2",
        riesz_laplace_beltrami(&rotate_from(&y, 1.1), &y, 0.0, 2)?,
        -0.5,
        1e-14,
    ));

    rec.push(Check::close("B_{1/2}(1/2, 1/2)", incomplete_beta(0.5, 0.5, 0.5)?, PI / 2.0, 1e-12));
    rec.push(Check::close("B_0.3(1, 1)", incomplete_beta(0.3, 1.0, 1.0)?, 0.3, 1e-12));
    rec.push(Check::close("I_{1,2}", wiener_constant(1.0, 2)?.value, 1.0, 1e-10));
    rec.push(Check::close("I_{0,1}", wiener_constant(0.0, 1)?.value, 0.0, 1e-10));
    rec.push(Check::close("I_{0,2}", wiener_constant(0.0, 2)?.value, 0.5 - LN_2, 1e-10));
    rec.push(Check::close("zeta(2)", zeta(2.0)?, PI * PI / 6.0, 1e-12));
    rec.push(Check::close("zeta(0)", zeta(0.0)?, -0.5, 1e-12));
    rec.push(Check::close("zeta(-1)", zeta(-1.0)?, -1.0 / 12.0, 1e-12));
    Ok(())
}

fn random_point(rng: &mut ChaCha8Rng, d: usize) -> SpherePoint {
    let v: Vec<f64> = (0..=d).map(|_| rng.sample(StandardNormal)).collect();
    SpherePoint::normalized(v).expect("nonzero Gaussian vector")
}

/// A point at geodesic distance `theta` from `y`.
fn rotate_from(y: &SpherePoint, theta: f64) -> SpherePoint {
    let c = y.coords();
    let k = if c[0].abs() < 0.9 { 0 } else { 1 };
    let mut e = vec![0.0; c.len()];
    e[k] = 1.0;
    let ip = c[k];
    e.iter_mut().zip(c).for_each(|(ei, ci)| *ei -= ip * ci);
    let n = e.iter().map(|v| v * v).sum::<f64>().sqrt();
    let v: Vec<f64> = c
        .iter()
        .zip(&e)
        .map(|(ci, ei)| theta.cos() * ci + theta.sin() * ei / n)
        .collect();
    SpherePoint::normalized(v).expect("unit")
}

// -div grad of a zonal function f(θ) on S^d is -(f'' + (d-1) cot θ f').
fn fd_laplacian(y: &SpherePoint, theta: f64, s: f64, d: usize, h: f64) -> f64 {
    let f = |t: f64| riesz_kernel(&rotate_from(y, t), y, s);
    let (fm, f0, fp) = (f(theta - h), f(theta), f(theta + h));
    let d2 = (fp - 2.0 * f0 + fm) / (h * h);
    let d1 = (fp - fm) / (2.0 * h);
    -(d2 + (d as f64 - 1.0) / theta.tan() * d1)
}

fn circle_suite(rec: &mut Recorder) -> Result<()> {
    let params = circle_params();
    let seq = greedy_circle(0.0, CIRCLE_N + 1, &params)?;
    for c in verify_circle_sequence(&seq, CIRCLE_N)?.checks {
        rec.push(c);
    }
    let angles: Vec<f64> = seq.points.iter().map(|p| p.angle()).collect();
    let mismatch = (1..=12).find(|&k| {
        let n = 1usize << k;
        !same_angle_set(&angles[..n], van_der_corput(n).angles(), 1e-9)
    });
    rec.push(Check::new(
        "greedy log equals van der Corput for N = 2^k, k <= 12",
        mismatch.is_none(),
        match mismatch {
            None => "all dyadic prefixes match within 1e-9 rad".into(),
            Some(k) => format!("prefix N = 2^{k} differs"),
        },
    ));

    for n in [4usize, 64, 1024] {
        let nf = n as f64;
        let e = crate::greedy::energy(&roots_of_unity(n).to_points(), &KernelSpec::log(1))?;
        rec.push(Check::close_rel(&format!("E_0 of {n} roots"), e, -nf * nf.ln(), 1e-10));
        rec.push(Check::close(&format!("P_0 of {n} roots"), roots_polarization(0.0, n)?, -LN_2, 1e-8));
        let direct = minimize_potential(&roots_of_unity(n).to_points(), &KernelSpec::log(1), &params)?;
        rec.push(Check::close(&format!("minimized P_0 of {n} roots"), direct.value, -LN_2, 1e-8));
    }
    for s in [-1.5, -0.5, 0.5] {
        for n in [128usize, 1024] {
            rec.push(Check::close_rel(
                &format!("zeta expansion, s = {s}, N = {n}"),
                equally_spaced_energy(s, n, 2)?,
                equally_spaced_energy_brute(s, n)?,
                1e-6,
            ));
        }
        let n = 4096;
        let i = wiener_constant(s, 1)?.value;
        let second = (roots_polarization(s, n)? - i * n as f64) / (n as f64).powf(s);
        rec.push(Check::close_rel(
            &format!("roots polarization second order, s = {s}"),
            second,
            roots_polarization_second_order(s)?,
            0.02,
        ));
    }

    // Riesz circle runs: brackets with unknown constants become sign
    // checks, and the normalized ranges are pinned.
    for s in [0.5, -0.5, -1.0, -1.5] {
        let n = 512;
        let seq = greedy_circle(s, n + 1, &params)?;
        for mut c in verify_circle_sequence(&seq, n)?.checks {
            c.name = format!("s = {s}: {}", c.name);
            rec.push(c);
        }
        let energies = prefix_energies_direct(&seq.points[..n], &seq.kernel)?;
        let i = wiener_constant(s, 1)?.value;
        let norm = |m: usize| (energies[m - 1] - i * (m * m) as f64) / (m as f64).powf(s + 1.0);
        let (_, lo) = min_over((2..=n).map(|m| (m, norm(m))));
        let (_, hi) = max_over((2..=n).map(|m| (m, norm(m))));
        rec.pin(&format!("circle_s{s}_energy_norm_min"), lo);
        rec.pin(&format!("circle_s{s}_energy_norm_max"), hi);
    }
    Ok(())
}

fn separation_suite(rec: &mut Recorder) -> Result<()> {
    let seq = s2_riesz_run()?;
    let n = S2_N;
    rec.push(identity_check(&seq, 1e-8)?);
    let rows = riesz_residuals(&seq, &Schedule::dyadic(100, n))?;
    let fit = residual_exponent(&rows)
        .ok_or_else(|| Error::Solver("residuals are not negative; no exponent fit".into()))?;
    rec.push(Check::new(
        "residual exponent",
        (1.4..=1.6).contains(&fit.slope),
        format!("fitted {:.4} over {} rows, predicted 1.5, accepted [1.4, 1.6]", fit.slope, fit.points),
    ));
    rec.pin("residual_exponent", fit.slope);

    let seps = prefix_separations(&seq.points);
    let (at, inf) = min_over((100..=n).map(|m| (m, seps[m - 1] * (m as f64).sqrt())));
    rec.push(Check::new(
        "scaled separation positive",
        inf > 0.0,
        format!("inf of delta sqrt(N) over [100, {n}] is {inf:.6} at N = {at}"),
    ));
    rec.pin("sep_scaled_inf", inf);

    let report = polarization_bound_check(&seq, &Schedule::Every { lo: 100, hi: n })?;
    let (at, worst) = min_over(report.rows.iter().map(|r| (r.n, r.margin)));
    rec.push(
        Check::new(
            "polarization margin positive",
            worst > 0.0 && report.rows.len() == n - 99,
            format!("min (I N - P)/sqrt(N) over [100, {n}] is {worst:.6} at N = {at}"),
        )
        .with_margin(at, worst),
    );
    rec.pin("pol_margin_min", worst);

    // Distance of each new point to the existing ones, scaled by sqrt(N).
    let (at, inf) = min_over((100..=n).map(|m| {
        let next = &seq.points[m];
        let dmin = seq.points[..m].iter().map(|q| next.distance(q)).fold(f64::INFINITY, f64::min);
        (m, dmin * (m as f64).sqrt())
    }));
    rec.push(Check::new(
        "minimizer separation positive",
        inf > 0.0,
        format!("inf of dist(x_(N+1), omega_N) sqrt(N) over [100, {n}] is {inf:.6} at N = {at}"),
    ));
    rec.pin("minimizer_sep_inf", inf);
    Ok(())
}

fn identity_check(seq: &Configuration, rel: f64) -> Result<Check> {
    let gap = identity_gap(seq, &Schedule::dyadic(2, seq.len()))?;
    Ok(Check::new(
        "energy-polarization identity",
        gap <= rel,
        format!("max relative gap {gap:.2e} between 2 sum P and direct energy (tol {rel:.0e})"),
    ))
}

fn log_suite(rec: &mut Recorder) -> Result<()> {
    let seq = s2_log_run()?;
    let n = S2_N;
    rec.push(identity_check(&seq, 1e-8)?);
    let i = wiener_constant(0.0, 2)?.value;
    let e = seq.prefix_energies();
    let d_of = |m: usize| {
        let mf = m as f64;
        (i * mf * mf - e[m - 1]) / (mf * mf.ln())
    };
    let (at, dmin) = min_over((2..=n).map(|m| (m, d_of(m))));
    rec.push(Check::new(
        "D(N) positive",
        dmin > 0.0,
        format!("min D(N) over [2, {n}] is {dmin:.6} at N = {at}"),
    ));
    let (at, c) = max_over((16..=n).map(|m| (m, (d_of(m) - 0.5) * (m as f64).ln())));
    rec.push(Check::new(
        "D(N) <= 1/2 + C/log N",
        c.is_finite(),
        format!("smallest C over [16, {n}] is {c:.6} (attained at N = {at})"),
    ));
    rec.pin("log_c", c);
    rec.pin("d_of_n_min_16", min_over((16..=n).map(|m| (m, d_of(m)))).1);
    let (at, worst) = min_over((2..=n).map(|m| {
        let mf = m as f64;
        (m, (mf * mf * i - mf * i) - e[m - 1])
    }));
    rec.push(
        Check::new(
            "E_0 <= N^2 I - N I",
            worst >= 0.0,
            format!("min slack {worst:.6} at N = {at}"),
        )
        .with_margin(at, worst),
    );
    Ok(())
}

fn green_suite(rec: &mut Recorder) -> Result<()> {
    let seq = s3_green_run()?;
    let n = S3_N;
    rec.push(identity_check(&seq, 1e-6)?);
    let e = seq.prefix_energies();
    let expo = 2.0 - 2.0 / 3.0;
    let d_of = |m: usize| -e[m - 1] / (m as f64).powf(expo);
    let (_, lo) = min_over((50..=n).map(|m| (m, d_of(m))));
    let (_, hi) = max_over((50..=n).map(|m| (m, d_of(m))));
    rec.push(Check::new(
        "D(N) in a positive bracket",
        lo > 0.0 && hi.is_finite(),
        format!("D(N) over [50, {n}] in [{lo:.6}, {hi:.6}]"),
    ));
    rec.pin("d_of_n_min", lo);
    rec.pin("d_of_n_max", hi);

    let seps = prefix_separations(&seq.points);
    let (at, inf) = min_over((50..=n).map(|m| (m, seps[m - 1] * (m as f64).cbrt())));
    rec.push(Check::new(
        "scaled separation positive",
        inf > 0.0,
        format!("inf of delta N^(1/3) over [50, {n}] is {inf:.6} at N = {at}"),
    ));
    rec.pin("sep_scaled_inf", inf);

    let negative = seq.step_values.iter().position(|&p| !(p < 0.0));
    rec.push(Check::new(
        "energy strictly decreasing",
        negative.is_none(),
        match negative {
            None => "every step polarization is negative".into(),
            Some(k) => format!("P(omega_{}) = {} is not negative", k + 1, seq.step_values[k]),
        },
    ));
    let antipodal = seq.points[1].distance(&seq.points[0].antipode());
    rec.push(Check::new(
        "second point antipodal",
        antipodal < 1e-6,
        format!("distance from x2 to -x1 is {antipodal:.2e}"),
    ));

    let margins = green_polarization_margin(&seq, &Schedule::Every { lo: 50, hi: n })?;
    let (at, ratio) = max_over(margins.iter().map(|r| (r.n, r.scaled_polarization / r.d_of_n)));
    rec.push(Check::new(
        "scaled polarization below a multiple of D(N)",
        ratio < 0.0,
        format!("max P/(N^(1/3) D(N)) over [50, {n}] is {ratio:.6} at N = {at}"),
    ));
    rec.pin("pol_over_d_max", ratio);
    Ok(())
}
