//! Kernel mathematics: Riesz and logarithmic kernels, the Green function of
//! `S^d`, Wiener constants, and the cap-mean identities.

pub mod cap_mean;
pub mod green;
pub mod special;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;
use crate::sphere::{dist_sq, SpherePoint};

pub use cap_mean::{green_cap_mean, log_cap_mean};
pub use green::{green_kernel, k_of_a, GreenSeries};
pub use special::{incomplete_beta, sinc_power_coeffs, zeta, ZetaCoeffs};

/// Which interaction governs energy, polarization and gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    Riesz { s: f64 },
    Log,
    Green,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    #[serde(flatten)]
    pub kind: KernelKind,
    pub dim: usize,
}

impl KernelSpec {
    pub fn riesz(s: f64, dim: usize) -> Self {
        KernelSpec {
            kind: KernelKind::Riesz { s },
            dim,
        }
    }

    pub fn log(dim: usize) -> Self {
        KernelSpec {
            kind: KernelKind::Log,
            dim,
        }
    }

    pub fn green(dim: usize) -> Self {
        KernelSpec {
            kind: KernelKind::Green,
            dim,
        }
    }

    /// The Riesz exponent, with `0` for the logarithmic kernel.
    pub fn exponent(&self) -> Option<f64> {
        match self.kind {
            KernelKind::Riesz { s } => Some(s),
            KernelKind::Log => Some(0.0),
            KernelKind::Green => None,
        }
    }

    /// Checks the kernel is usable for energy and polarization runs.
    pub fn validate_for_runs(&self) -> Result<()> {
        if self.dim < 1 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        match self.kind {
            KernelKind::Riesz { s } => {
                if s == 0.0 {
                    return Err(Error::InvalidArgument(
                        "Riesz exponent 0 is the logarithmic kernel; use `log`".into(),
                    ));
                }
                if !(s > -2.0 && s < self.dim as f64) {
                    return Err(Error::InvalidArgument(format!(
                        "Riesz exponent must satisfy -2 < s < d = {}, got {s}",
                        self.dim
                    )));
                }
            }
            KernelKind::Log => {}
            KernelKind::Green => {
                if self.dim < 2 {
                    return Err(Error::InvalidArgument(
                        "the Green kernel needs d >= 2".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Kernel the solvers search with, plus `(scale, shift)` such that this
    /// kernel's potential of `n` sources is `scale * v + n * shift` where `v`
    /// is the search kernel's. Green on `S^2` searches with the log kernel, so
    /// both runs pick the same points.
    pub fn search_kernel(&self) -> (KernelSpec, f64, f64) {
        match self.kind {
            KernelKind::Green if self.dim == 2 => (KernelSpec::log(2), INV_TWO_PI, GREEN_S2_SHIFT),
            _ => (*self, 1.0, 0.0),
        }
    }

    /// Prepared evaluator for hot loops.
    pub fn evaluator(&self) -> Result<KernelEval> {
        Ok(match self.kind {
            KernelKind::Riesz { s } if s != 0.0 => KernelEval::Riesz { s },
            KernelKind::Riesz { .. } | KernelKind::Log => KernelEval::Log,
            KernelKind::Green if self.dim == 2 => KernelEval::GreenS2,
            KernelKind::Green => KernelEval::Green(GreenSeries::shared(self.dim)?),
        })
    }

    /// `I_{s,d}`, or `0` for the Green kernel.
    pub fn wiener_constant(&self) -> Result<f64> {
        match self.kind {
            KernelKind::Riesz { s } => Ok(wiener_constant(s, self.dim)?.value),
            KernelKind::Log => Ok(wiener_constant(0.0, self.dim)?.value),
            KernelKind::Green => Ok(0.0),
        }
    }

    /// Short label used in file names and reports.
    pub fn label(&self) -> String {
        match self.kind {
            KernelKind::Riesz { s } => format!("riesz(s={s})"),
            KernelKind::Log => "log".into(),
            KernelKind::Green => "green".into(),
        }
    }
}

/// Kernel evaluator working on squared chord lengths.
#[derive(Debug, Clone)]
pub enum KernelEval {
    Riesz { s: f64 },
    Log,
    /// Closed form on `S^2`: the log kernel scaled by `1/2π` plus a constant.
    GreenS2,
    Green(Arc<GreenSeries>),
}

const INV_TWO_PI: f64 = 0.5 * std::f64::consts::FRAC_1_PI;
/// `(2 log 2 - 1) / 4π`.
const GREEN_S2_SHIFT: f64 = (2.0 * std::f64::consts::LN_2 - 1.0) * 0.25 * std::f64::consts::FRAC_1_PI;

impl KernelEval {
    /// Kernel value at squared distance `r2`. Coincident points give `+∞`
    /// for singular kernels; a failed Green evaluation gives NaN.
    #[inline]
    pub fn value_sq(&self, r2: f64) -> f64 {
        match self {
            KernelEval::Riesz { s } => {
                if r2 == 0.0 {
                    if *s > 0.0 {
                        f64::INFINITY
                    } else {
                        0.0
                    }
                } else if *s == 1.0 {
                    1.0 / r2.sqrt()
                } else {
                    r2.powf(-0.5 * s) / s
                }
            }
            KernelEval::Log => {
                if r2 == 0.0 {
                    f64::INFINITY
                } else {
                    -0.5 * r2.ln()
                }
            }
            KernelEval::GreenS2 => {
                if r2 == 0.0 {
                    f64::INFINITY
                } else {
                    -0.5 * INV_TWO_PI * r2.ln() + GREEN_S2_SHIFT
                }
            }
            KernelEval::Green(g) => {
                if r2 == 0.0 {
                    f64::INFINITY
                } else {
                    g.value_sq(r2).unwrap_or(f64::NAN)
                }
            }
        }
    }

    /// Derivative of the kernel with respect to `<x, y>` at squared distance
    /// `r2 = 2 - 2 <x, y>`.
    #[inline]
    pub fn dvalue_dip(&self, r2: f64) -> f64 {
        match self {
            KernelEval::Riesz { s } => {
                if *s == 1.0 {
                    1.0 / (r2 * r2.sqrt())
                } else {
                    r2.powf(-0.5 * s - 1.0)
                }
            }
            KernelEval::Log => 1.0 / r2,
            KernelEval::GreenS2 => INV_TWO_PI / r2,
            KernelEval::Green(g) => 0.5 * g.du_sq(r2).unwrap_or(f64::NAN),
        }
    }

    /// Value and `<x, y>`-derivative together; one series pass for Green.
    #[inline]
    pub fn value_and_dip(&self, r2: f64) -> (f64, f64) {
        match self {
            KernelEval::Green(g) if r2 > 0.0 => match g.value_du_sq(r2) {
                Ok((v, du)) => (v, 0.5 * du),
                Err(_) => (f64::NAN, f64::NAN),
            },
            _ => (self.value_sq(r2), self.dvalue_dip(r2)),
        }
    }

    /// Second derivative with respect to `<x, y>`; NaN for the series-evaluated Green kernel.
    #[inline]
    pub fn d2value_dip(&self, r2: f64) -> f64 {
        match self {
            KernelEval::Riesz { s } => (s + 2.0) * r2.powf(-0.5 * s - 2.0),
            KernelEval::Log => 2.0 / (r2 * r2),
            KernelEval::GreenS2 => 2.0 * INV_TWO_PI / (r2 * r2),
            KernelEval::Green(_) => f64::NAN,
        }
    }

    pub fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.value_sq(dist_sq(x, y))
    }
}

/// Riesz `s`-kernel, with `s = 0` the logarithmic kernel.
pub fn riesz_kernel(x: &SpherePoint, y: &SpherePoint, s: f64) -> f64 {
    let r2 = dist_sq(x.coords(), y.coords());
    if s == 0.0 {
        KernelEval::Log.value_sq(r2)
    } else {
        KernelEval::Riesz { s }.value_sq(r2)
    }
}

/// Laplace–Beltrami operator (with the `-div grad` sign convention) applied
/// in `x` to the Riesz kernel `K_s(x, y)` on `S^d`.
pub fn riesz_laplace_beltrami(x: &SpherePoint, y: &SpherePoint, s: f64, d: usize) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    let r2 = dist_sq(x.coords(), y.coords());
    if r2 == 0.0 {
        return Err(Error::InvalidArgument(
            "Laplace–Beltrami of the kernel is singular at coincident points".into(),
        ));
    }
    let ip = x.dot(y);
    let df = d as f64;
    if s == 0.0 {
        Ok(((df - 1.0) * ip - 1.0) / r2)
    } else {
        Ok(-0.5 * r2.powf(-0.5 * s - 1.0) * (s + 2.0 + (s + 2.0 - 2.0 * df) * ip))
    }
}

/// How a Wiener constant was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WienerMethod {
    Quadrature,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WienerConstant {
    pub s: f64,
    pub d: usize,
    pub value: f64,
    pub method: WienerMethod,
}

const WIENER_TOL: f64 = 1e-13;

/// Continuous `s`-energy of the uniform measure on `S^d`, by quadrature in
/// `v = sin²(θ/2)`, which is `Beta(d/2, d/2)`-distributed under `σ`.
pub fn wiener_constant(s: f64, d: usize) -> Result<WienerConstant> {
    if d < 1 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    let df = d as f64;
    if s >= df {
        return Err(Error::InvalidArgument(format!(
            "the Wiener constant diverges for s >= d (s = {s}, d = {d})"
        )));
    }
    let half = 0.5 * df;
    let norm = special::beta(half, half);
    let integral = if s == 0.0 {
        quad::beta_weighted(|v| -0.5 * (4.0 * v).ln(), half, half, WIENER_TOL * norm)?
    } else {
        // K(2√v) = 4^(-s/2) v^(-s/2) / s; the power of v joins the weight.
        let scale = 4f64.powf(-0.5 * s) / s;
        quad::beta_weighted(|_| scale, half - 0.5 * s, half, WIENER_TOL * norm)?
    };
    Ok(WienerConstant {
        s,
        d,
        value: integral / norm,
        method: WienerMethod::Quadrature,
    })
}

/// Closed form `4^(-s/2) B(d/2 - s/2, d/2) / (s B(d/2, d/2))`, with the
/// digamma form for `s = 0`.
pub fn wiener_constant_closed_form(s: f64, d: usize) -> Result<WienerConstant> {
    let df = d as f64;
    if s >= df || d < 1 {
        return Err(Error::InvalidArgument(format!(
            "no finite Wiener constant for s = {s}, d = {d}"
        )));
    }
    let half = 0.5 * df;
    let value = if s == 0.0 {
        use statrs::function::gamma::digamma;
        -0.5 * (4f64.ln() + digamma(half) - digamma(df))
    } else {
        4f64.powf(-0.5 * s) / s
            * (special::ln_beta(half - 0.5 * s, half) - special::ln_beta(half, half)).exp()
    };
    Ok(WienerConstant {
        s,
        d,
        value,
        method: WienerMethod::ClosedForm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn ap(theta: f64) -> (SpherePoint, SpherePoint) {
        (
            SpherePoint::from_spherical(0.0, 0.0),
            SpherePoint::from_spherical(theta, 0.4),
        )
    }

    #[test]
    fn riesz_kernel_values() {
        let (x, y) = ap(PI);
        assert!((riesz_kernel(&x, &y, 1.0) - 0.5).abs() < 1e-15);
        assert!((riesz_kernel(&x, &y, -1.0) + 2.0).abs() < 1e-15);
        let (x, y) = ap(PI / 3.0);
        assert!(riesz_kernel(&x, &y, 0.0).abs() < 1e-15);
        assert_eq!(riesz_kernel(&x, &x, 0.0), f64::INFINITY);
        assert_eq!(riesz_kernel(&x, &x, 0.5), f64::INFINITY);
        assert_eq!(riesz_kernel(&x, &x, -0.5), 0.0);
    }

    #[test]
    fn laplace_beltrami_closed_forms() {
        for theta in [0.3, 1.0, 2.5] {
            let (x, y) = ap(theta);
            assert!((riesz_laplace_beltrami(&x, &y, 0.0, 2).unwrap() + 0.5).abs() < 1e-14);
        }
        let x = SpherePoint::north_pole(3);
        let y = x.antipode();
        assert!((riesz_laplace_beltrami(&x, &y, 1.0, 3).unwrap() + 0.375).abs() < 1e-15);
        assert!(riesz_laplace_beltrami(&x, &x, 1.0, 3).is_err());
    }

    #[test]
    fn wiener_constants_known_values() {
        assert!((wiener_constant(1.0, 2).unwrap().value - 1.0).abs() < 1e-10);
        assert!(wiener_constant(0.0, 1).unwrap().value.abs() < 1e-10);
        assert!((wiener_constant(0.0, 2).unwrap().value - (0.5 - LN_2)).abs() < 1e-10);
        assert!(wiener_constant(2.0, 2).is_err());
    }

    #[test]
    fn wiener_quadrature_matches_closed_form() {
        for d in 1..=5 {
            for &s in &[-1.5, -1.0, -0.5, 0.0, 0.5, 0.9] {
                if s >= d as f64 {
                    continue;
                }
                let q = wiener_constant(s, d).unwrap().value;
                let c = wiener_constant_closed_form(s, d).unwrap().value;
                assert!((q - c).abs() < 1e-10, "s={s} d={d}: {q} vs {c}");
            }
        }
        let q = wiener_constant(2.9, 3).unwrap().value;
        let c = wiener_constant_closed_form(2.9, 3).unwrap().value;
        assert!((q - c).abs() < 1e-10 * c.abs().max(1.0));
    }

    #[test]
    fn kernel_run_validation() {
        assert!(KernelSpec::riesz(0.0, 2).validate_for_runs().is_err());
        assert!(KernelSpec::riesz(2.0, 2).validate_for_runs().is_err());
        assert!(KernelSpec::riesz(-2.0, 2).validate_for_runs().is_err());
        assert!(KernelSpec::riesz(1.0, 2).validate_for_runs().is_ok());
        assert!(KernelSpec::green(1).validate_for_runs().is_err());
        assert!(KernelSpec::green(3).validate_for_runs().is_ok());
    }

    #[test]
    fn kernel_spec_json_shape() {
        let v = serde_json::to_value(KernelSpec::riesz(1.5, 2)).unwrap();
        assert_eq!(v["kind"], "riesz");
        assert_eq!(v["s"], 1.5);
        assert_eq!(v["dim"], 2);
        let back: KernelSpec = serde_json::from_value(v).unwrap();
        assert_eq!(back, KernelSpec::riesz(1.5, 2));
    }
}
