//! Diagnostics of greedy runs: second-order energy residuals, `D(N)`,
//! separation scaling and polarization margins.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::Configuration;
use crate::kernels::{KernelKind, KernelSpec};
use crate::optimize::chord_sq;
use crate::quad::CompensatedSum;
use crate::report::{fmt15, fmt15_opt, ser15, ser15_opt};
use crate::sphere::{dist_sq, SpherePoint};

/// Bumped whenever the CSV columns change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const CSV_HEADER: [&str; 9] = [
    "N",
    "energy",
    "residual",
    "normalized_residual",
    "polarization",
    "pol_residual",
    "separation",
    "sep_scaled",
    "d_of_n",
];

/// Which prefix lengths get a report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Powers of two in `[lo, hi]` plus both endpoints.
    Dyadic { lo: usize, hi: usize },
    /// Every `N` in `[lo, hi]`.
    Every { lo: usize, hi: usize },
    Explicit(Vec<usize>),
}

impl Schedule {
    pub fn dyadic(lo: usize, hi: usize) -> Self {
        Schedule::Dyadic { lo, hi }
    }

    /// The scheduled `N`, clipped to `1..=n_max`, sorted and deduplicated.
    pub fn points(&self, n_max: usize) -> Vec<usize> {
        let mut out = match self {
            Schedule::Dyadic { lo, hi } => {
                let hi = (*hi).min(n_max);
                let mut v = vec![*lo, hi];
                let mut p = 1usize;
                while p <= hi {
                    if p >= *lo {
                        v.push(p);
                    }
                    p *= 2;
                }
                v
            }
            Schedule::Every { lo, hi } => (*lo..=(*hi).min(n_max)).collect(),
            Schedule::Explicit(v) => v.clone(),
        };
        out.retain(|&n| n >= 1 && n <= n_max);
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl FromStr for Schedule {
    type Err = Error;

    /// `dyadic`, `dyadic:LO:HI`, `all`, `all:LO:HI` or a comma list.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("cannot parse schedule '{s}'"));
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let range = |default_lo: usize| -> Result<(usize, usize)> {
            match rest.as_slice() {
                [] => Ok((default_lo, usize::MAX)),
                [lo, hi] => Ok((lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?)),
                _ => Err(bad()),
            }
        };
        match head {
            "dyadic" => {
                let (lo, hi) = range(2)?;
                Ok(Schedule::Dyadic { lo, hi })
            }
            "all" => {
                let (lo, hi) = range(1)?;
                Ok(Schedule::Every { lo, hi })
            }
            _ if rest.is_empty() => {
                let v: std::result::Result<Vec<usize>, _> =
                    s.split(',').map(|t| t.trim().parse::<usize>()).collect();
                v.map(Schedule::Explicit).map_err(|_| bad())
            }
            _ => Err(bad()),
        }
    }
}

/// One report row. Quantities that need a later point (the polarization of
/// the full run) or two points (separation) are absent when unavailable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticsRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(serialize_with = "ser15")]
    pub energy: f64,
    #[serde(serialize_with = "ser15")]
    pub residual: f64,
    #[serde(serialize_with = "ser15_opt")]
    pub normalized_residual: Option<f64>,
    #[serde(serialize_with = "ser15_opt")]
    pub polarization: Option<f64>,
    #[serde(serialize_with = "ser15_opt")]
    pub pol_residual: Option<f64>,
    #[serde(serialize_with = "ser15_opt")]
    pub separation: Option<f64>,
    #[serde(serialize_with = "ser15_opt")]
    pub sep_scaled: Option<f64>,
    #[serde(serialize_with = "ser15_opt")]
    pub d_of_n: Option<f64>,
}

/// `δ(ω_n)` for every prefix; entry `n-1` belongs to `ω_n` and is `+∞`
/// for `n = 1`.
pub fn prefix_separations(points: &[SpherePoint]) -> Vec<f64> {
    let circle = points.first().is_some_and(|p| p.dim() == 1);
    let angles: Vec<f64> = if circle {
        points.iter().map(|p| p.angle()).collect()
    } else {
        Vec::new()
    };
    let mut out = Vec::with_capacity(points.len());
    let mut best = f64::INFINITY;
    for (n, p) in points.iter().enumerate() {
        for (j, q) in points[..n].iter().enumerate() {
            let r2 = if circle {
                chord_sq(angles[n], angles[j])
            } else {
                dist_sq(p.coords(), q.coords())
            };
            best = best.min(r2);
        }
        out.push(best.sqrt());
    }
    out
}

/// Energies of every prefix summed directly from the points, independent
/// of the recorded step values.
pub fn prefix_energies_direct(points: &[SpherePoint], kernel: &KernelSpec) -> Result<Vec<f64>> {
    let eval = kernel.evaluator()?;
    let circle = kernel.dim == 1;
    let angles: Vec<f64> = if circle {
        points.iter().map(|p| p.angle()).collect()
    } else {
        Vec::new()
    };
    let mut total = CompensatedSum::default();
    let mut out = Vec::with_capacity(points.len());
    for (n, p) in points.iter().enumerate() {
        let mut row = CompensatedSum::default();
        for (j, q) in points[..n].iter().enumerate() {
            let r2 = if circle {
                chord_sq(angles[n], angles[j])
            } else {
                dist_sq(p.coords(), q.coords())
            };
            row.add(eval.value_sq(r2));
        }
        total.add(2.0 * row.value());
        out.push(total.value());
    }
    Ok(out)
}

/// Exponent `β` in the well-separation law `δ ≥ c N^{-β}`: `1/(s+1)` for
/// Riesz `0 < s < d-2`, otherwise `1/d`.
pub fn separation_exponent(kernel: &KernelSpec) -> f64 {
    let d = kernel.dim as f64;
    match kernel.kind {
        KernelKind::Riesz { s } if s > 0.0 && s < d - 2.0 => 1.0 / (s + 1.0),
        _ => 1.0 / d,
    }
}

/// Continuous energy `I` of the uniform measure; zero for Green.
fn mean_field(kernel: &KernelSpec) -> Result<f64> {
    match kernel.kind {
        KernelKind::Green => Ok(0.0),
        _ => kernel.wiener_constant(),
    }
}

/// Scale of the second-order energy term: `N^{1+s/d}`, `N log N` for log
/// and `N^{2-2/d}` for Green.
fn second_order_scale(kernel: &KernelSpec, n: usize) -> Option<f64> {
    let nf = n as f64;
    let d = kernel.dim as f64;
    match kernel.kind {
        KernelKind::Riesz { s } => Some(nf.powf(1.0 + s / d)),
        KernelKind::Log => (n >= 2).then(|| nf * nf.ln()),
        KernelKind::Green => Some(nf.powf(2.0 - 2.0 / d)),
    }
}

fn require_runnable(seq: &Configuration) -> Result<()> {
    seq.validate()?;
    seq.kernel.validate_for_runs()
}

/// Rows for the scheduled prefix lengths of any run. `D(N)` is filled for
/// log and Green kernels.
pub fn asymptotics(seq: &Configuration, schedule: &Schedule) -> Result<Vec<AsymptoticsRow>> {
    require_runnable(seq)?;
    let kernel = seq.kernel;
    let i = mean_field(&kernel)?;
    let energies = seq.prefix_energies();
    let seps = prefix_separations(&seq.points);
    let beta = separation_exponent(&kernel);
    let rows = schedule
        .points(seq.len())
        .into_iter()
        .map(|n| {
            let nf = n as f64;
            let energy = energies[n - 1];
            let residual = energy - i * nf * nf;
            let normalized = second_order_scale(&kernel, n).map(|sc| residual / sc);
            let polarization = seq.step_values.get(n - 1).copied();
            let separation = (n >= 2).then(|| seps[n - 1]);
            let d_of_n = match kernel.kind {
                KernelKind::Riesz { .. } => None,
                _ => normalized.map(|v| -v),
            };
            AsymptoticsRow {
                n,
                energy,
                residual,
                normalized_residual: normalized,
                polarization,
                pol_residual: polarization.map(|p| p - i * nf),
                separation,
                sep_scaled: separation.map(|sep| sep * nf.powf(beta)),
                d_of_n,
            }
        })
        .collect();
    Ok(rows)
}

/// [`asymptotics`] restricted to Riesz and log kernels.
pub fn riesz_residuals(seq: &Configuration, schedule: &Schedule) -> Result<Vec<AsymptoticsRow>> {
    if seq.kernel.kind == KernelKind::Green {
        return Err(Error::InvalidArgument(
            "Riesz residuals need a Riesz or log kernel".into(),
        ));
    }
    asymptotics(seq, schedule)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub separation: f64,
    /// `δ N^β` with `β` from [`separation_exponent`].
    pub scaled: f64,
    /// `δ N^{1/(s+1)}`, reported next to `scaled` for Riesz `0 < s ≤ d-2`
    /// where both laws are of interest.
    pub scaled_alt: Option<f64>,
    /// Two points coincide.
    pub degenerate: bool,
}

/// Scaled separation of every prefix with `N ≥ 2`.
pub fn separation_scaling(seq: &Configuration) -> Result<Vec<SeparationRow>> {
    seq.validate()?;
    if seq.len() < 2 {
        return Err(Error::InvalidArgument("separation needs at least two points".into()));
    }
    let beta = separation_exponent(&seq.kernel);
    let d = seq.dim as f64;
    let alt = match seq.kernel.kind {
        KernelKind::Riesz { s } if s > 0.0 && s <= d - 2.0 => Some(1.0 / (s + 1.0)),
        _ => None,
    };
    let seps = prefix_separations(&seq.points);
    Ok((2..=seq.len())
        .map(|n| {
            let sep = seps[n - 1];
            let nf = n as f64;
            SeparationRow {
                n,
                separation: sep,
                scaled: sep * nf.powf(beta),
                scaled_alt: alt.map(|b| sep * nf.powf(b)),
                degenerate: sep == 0.0,
            }
        })
        .collect())
}

/// Least-squares slope of `log y` against `log N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub points: usize,
}

/// Fits `log y = intercept + slope log N` over positive `y`.
pub fn fit_power_law(samples: &[(usize, f64)]) -> Option<ExponentFit> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|(n, y)| *n >= 1 && *y > 0.0 && y.is_finite())
        .map(|(n, y)| ((*n as f64).ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some(ExponentFit {
        slope,
        intercept: my - slope * mx,
        points: pts.len(),
    })
}

/// Exponent of `-residual` over the given rows.
pub fn residual_exponent(rows: &[AsymptoticsRow]) -> Option<ExponentFit> {
    let samples: Vec<(usize, f64)> = rows.iter().map(|r| (r.n, -r.residual)).collect();
    fit_power_law(&samples)
}

/// Predicted residual exponent `1 + s/d` for Riesz kernels.
pub fn predicted_residual_exponent(kernel: &KernelSpec) -> Option<f64> {
    match kernel.kind {
        KernelKind::Riesz { s } => Some(1.0 + s / kernel.dim as f64),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub polarization: f64,
    /// `(I N - P) / N^γ`.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationReport {
    /// `γ` in the margin normalization.
    pub exponent: f64,
    /// Separation order `α` fitted from the run, used when `s < d-2`.
    pub alpha: Option<f64>,
    pub rows: Vec<MarginRow>,
}

impl PolarizationReport {
    pub fn min_margin(&self) -> Option<f64> {
        self.rows.iter().map(|r| r.margin).reduce(f64::min)
    }
}

/// Margins below the mean-field polarization `I N`: normalized by `N^{s/d}`
/// when `s ≥ d-2`, and by `N^{1+(s-d)/α}` when `s < d-2`, with `α` from
/// the measured decay `δ ~ N^{-1/α}`.
pub fn polarization_bound_check(seq: &Configuration, schedule: &Schedule) -> Result<PolarizationReport> {
    require_runnable(seq)?;
    let s = match seq.kernel.kind {
        KernelKind::Riesz { s } if s > 0.0 => s,
        _ => {
            return Err(Error::InvalidArgument(
                "polarization bounds need a Riesz kernel with 0 < s < d".into(),
            ))
        }
    };
    let d = seq.dim as f64;
    let i = seq.kernel.wiener_constant()?;
    let (exponent, alpha) = if s >= d - 2.0 {
        (s / d, None)
    } else {
        let seps = prefix_separations(&seq.points);
        let samples: Vec<(usize, f64)> = (2..=seq.len()).map(|n| (n, seps[n - 1])).collect();
        let fit = fit_power_law(&samples).ok_or_else(|| {
            Error::InvalidArgument("too few points to fit the separation order".into())
        })?;
        if !(fit.slope < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "separation does not decay (fitted slope {})",
                fit.slope
            )));
        }
        let alpha = -1.0 / fit.slope;
        (1.0 + (s - d) / alpha, Some(alpha))
    };
    let rows = schedule
        .points(seq.len())
        .into_iter()
        .filter_map(|n| {
            let p = *seq.step_values.get(n - 1)?;
            let nf = n as f64;
            Some(MarginRow {
                n,
                polarization: p,
                margin: (i * nf - p) / nf.powf(exponent),
            })
        })
        .collect();
    Ok(PolarizationReport { exponent, alpha, rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalRow {
    #[serde(rename = "N")]
    pub n: usize,
    /// Whether `P_s(ω_N) ≥ N I - C s N^{s/(s+2)}` held.
    pub triggered: bool,
    /// `min_j ‖x_{N+1} - x_j‖ N^{1/(s+2)}`.
    pub scaled_distance: f64,
}

/// For each scheduled `N` whose polarization is within `c s N^{s/(s+2)}`
/// of `N I`, the distance from the next greedy point (the minimizer) to
/// `ω_N`, scaled by `N^{1/(s+2)}`. The improved separation law says these
/// stay above a constant.
pub fn conditional_separation_check(
    seq: &Configuration,
    c: f64,
    schedule: &Schedule,
) -> Result<Vec<ConditionalRow>> {
    require_runnable(seq)?;
    let s = match seq.kernel.kind {
        KernelKind::Riesz { s } if s > 0.0 => s,
        _ => {
            return Err(Error::InvalidArgument(
                "the conditional separation check needs Riesz s > 0".into(),
            ))
        }
    };
    let i = seq.kernel.wiener_constant()?;
    Ok(schedule
        .points(seq.len())
        .into_iter()
        .filter(|&n| n < seq.len())
        .map(|n| {
            let nf = n as f64;
            let p = seq.step_values[n - 1];
            let next = seq.points[n].coords();
            let min_d2 = seq.points[..n]
                .iter()
                .map(|q| dist_sq(next, q.coords()))
                .fold(f64::INFINITY, f64::min);
            ConditionalRow {
                n,
                triggered: p >= nf * i - c * s * nf.powf(s / (s + 2.0)),
                scaled_distance: min_d2.sqrt() * nf.powf(1.0 / (s + 2.0)),
            }
        })
        .collect())
}

/// `D(N) = -E_G(ω_N) / N^{2-2/d}` for Green runs on `S^d`, `d ≥ 3`.
pub fn green_d_of_n(seq: &Configuration, schedule: &Schedule) -> Result<Vec<(usize, f64)>> {
    seq.validate()?;
    if seq.kernel.kind != KernelKind::Green || seq.dim < 3 {
        return Err(Error::InvalidArgument(
            "D(N) for Green energy needs a Green run with d >= 3".into(),
        ));
    }
    let e = seq.prefix_energies();
    let expo = 2.0 - 2.0 / seq.dim as f64;
    Ok(schedule
        .points(seq.len())
        .into_iter()
        .map(|n| (n, -e[n - 1] / (n as f64).powf(expo)))
        .collect())
}

/// The CSV report: a schema comment line, the header, then one line per row.
pub fn to_csv(rows: &[AsymptoticsRow]) -> String {
    let mut out = format!("# schema_version={CSV_SCHEMA_VERSION}\n{}\n", CSV_HEADER.join(","));
    for r in rows {
        let cells = [
            r.n.to_string(),
            fmt15(r.energy),
            fmt15(r.residual),
            fmt15_opt(r.normalized_residual),
            fmt15_opt(r.polarization),
            fmt15_opt(r.pol_residual),
            fmt15_opt(r.separation),
            fmt15_opt(r.sep_scaled),
            fmt15_opt(r.d_of_n),
        ];
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses [`to_csv`] output, checking the schema version and header.
pub fn from_csv(text: &str) -> Result<Vec<AsymptoticsRow>> {
    let bad = |m: String| Error::InvalidArgument(m);
    let mut lines = text.lines();
    let version = lines
        .next()
        .and_then(|l| l.strip_prefix("# schema_version="))
        .ok_or_else(|| bad("missing schema version line".into()))?;
    if version.trim() != CSV_SCHEMA_VERSION.to_string() {
        return Err(bad(format!("unsupported schema version {version}")));
    }
    if lines.next() != Some(CSV_HEADER.join(",").as_str()) {
        return Err(bad("unexpected CSV header".into()));
    }
    let num = |c: &str| -> Result<f64> { c.parse().map_err(|_| bad(format!("bad number '{c}'"))) };
    let opt = |c: &str| -> Result<Option<f64>> {
        if c.is_empty() {
            Ok(None)
        } else {
            num(c).map(Some)
        }
    };
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let c: Vec<&str> = l.split(',').collect();
            if c.len() != CSV_HEADER.len() {
                return Err(bad(format!("row has {} cells: {l}", c.len())));
            }
            Ok(AsymptoticsRow {
                n: c[0].parse().map_err(|_| bad(format!("bad N '{}'", c[0])))?,
                energy: num(c[1])?,
                residual: num(c[2])?,
                normalized_residual: opt(c[3])?,
                polarization: opt(c[4])?,
                pol_residual: opt(c[5])?,
                separation: opt(c[6])?,
                sep_scaled: opt(c[7])?,
                d_of_n: opt(c[8])?,
            })
        })
        .collect()
}

/// JSON summary of an analysis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub kernel: KernelSpec,
    pub dim: usize,
    pub n: usize,
    pub seed: u64,
    pub version: String,
    pub schedule: Vec<usize>,
    pub residual_exponent: Option<ExponentFit>,
    pub predicted_exponent: Option<f64>,
    /// `(N, D(N))` for log and Green runs.
    pub d_of_n: Vec<(usize, f64)>,
    pub min_sep_scaled: Option<f64>,
    pub min_polarization_margin: Option<f64>,
}

pub fn summarize(seq: &Configuration, rows: &[AsymptoticsRow]) -> Result<Summary> {
    let margin = match seq.kernel.kind {
        KernelKind::Riesz { s } if s > 0.0 => {
            let ns: Vec<usize> = rows.iter().map(|r| r.n).collect();
            polarization_bound_check(seq, &Schedule::Explicit(ns))?.min_margin()
        }
        _ => None,
    };
    let fit_rows: Vec<AsymptoticsRow> = rows.iter().filter(|r| r.n >= 2).cloned().collect();
    Ok(Summary {
        schema_version: CSV_SCHEMA_VERSION,
        kernel: seq.kernel,
        dim: seq.dim,
        n: seq.len(),
        seed: seq.meta.seed,
        version: seq.meta.version.clone(),
        schedule: rows.iter().map(|r| r.n).collect(),
        residual_exponent: match seq.kernel.kind {
            KernelKind::Riesz { .. } => residual_exponent(&fit_rows),
            _ => None,
        },
        predicted_exponent: predicted_residual_exponent(&seq.kernel),
        d_of_n: rows.iter().filter_map(|r| r.d_of_n.map(|v| (r.n, v))).collect(),
        min_sep_scaled: rows.iter().filter_map(|r| r.sep_scaled).reduce(f64::min),
        min_polarization_margin: margin,
    })
}
