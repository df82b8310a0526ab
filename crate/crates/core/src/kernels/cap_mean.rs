//! Closed-form means of the logarithmic and Green kernels over a geodesic
//! cap `B(p0, a)`.

use std::f64::consts::{LN_2, PI};

use super::green::GreenSeries;
use super::special::incomplete_beta;
use crate::error::{Error, Result};
use crate::sphere::{dist_sq, SpherePoint};

fn check_cap(p0: &SpherePoint, p: &SpherePoint, a: f64, d: usize) -> Result<()> {
    for q in [p0, p] {
        if q.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: q.dim(),
            });
        }
    }
    if !(a > 0.0 && a < PI) {
        return Err(Error::InvalidArgument(format!(
            "cap radius must lie in (0, π), got {a}"
        )));
    }
    Ok(())
}

// Points on the boundary count as outside.
fn inside(p0: &SpherePoint, p: &SpherePoint, a: f64) -> bool {
    p0.dot(p).clamp(-1.0, 1.0).acos() < a
}

/// Mean of `log ‖p - q‖` over `q` uniform in the cap `B(p0, a) ⊂ S²`.
pub fn log_cap_mean(p0: &SpherePoint, a: f64, p: &SpherePoint) -> Result<f64> {
    check_cap(p0, p, a, 2)?;
    let half = 0.5 * a;
    let cot2 = (half.cos() / half.sin()).powi(2);
    let r2 = dist_sq(p0.coords(), p.coords());
    if inside(p0, p, a) {
        Ok(LN_2 - 0.5 - 0.5 * cot2 * (-0.25 * r2).ln_1p() + half.sin().ln())
    } else {
        Ok(0.5 * r2.ln() - 0.5 - cot2 * half.cos().ln())
    }
}

/// Mean of `G(S^d; p, q)` over `q` uniform in the cap `B(p0, a)`.
pub fn green_cap_mean(p0: &SpherePoint, a: f64, p: &SpherePoint, d: usize) -> Result<f64> {
    check_cap(p0, p, a, d)?;
    let g = GreenSeries::shared(d)?;
    if inside(p0, p, a) {
        let alpha = 0.5 * d as f64;
        let (sh, ch) = (0.5 * a).sin_cos();
        let ratio = incomplete_beta(ch * ch, alpha, alpha)? / incomplete_beta(sh * sh, alpha, alpha)?;
        let anti = p0.antipode();
        let g_anti = g.value_sq(dist_sq(p.coords(), anti.coords()))?;
        Ok(-ratio * (g_anti + g.k_of_a(PI - a)?))
    } else {
        Ok(g.value_sq(dist_sq(p.coords(), p0.coords()))? + g.k_of_a(a)?)
    }
}
