//! Green function of the Laplace–Beltrami operator on `S^d` and the
//! companion function `K(a)` from the cap-mean formula.
//!
//! With `u = 1 - t²/4` and `α = d/2`,
//!
//! ```text
//! g(t) = P (F(u) - S),   F(u) = Σ_k c_k u^(k+1),   P = 2 / (d V_d),
//! c_k = (d)_k / ((α+1)_k (k+1)),   S = Σ_k c_k B(α, α+k+1) / B(α, α).
//! ```
//!
//! The power series in `u` converges slowly near `u = 1` (short distances),
//! so for `u > 1/2` we use the expansion of `F` around `u = 1` obtained by
//! integrating `F'(u) = α u^(-α) (1-u)^(-α) B_u(α, α)` term by term in
//! `w = 1 - u`. The constant `S` equals `(1/B) ∫_0^1 F(v) (v(1-v))^(α-1) dv`,
//! which we integrate after one integration by parts.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use statrs::function::gamma::ln_gamma;

use super::special::{beta, incomplete_beta};
use crate::error::{Error, Result};
use crate::quad;
use crate::sphere::{dist_sq, SpherePoint};

/// Default cap on the number of terms in the plain `u` series.
pub const DEFAULT_TERM_CAP: usize = 2_000_000;
/// Tail tolerance on `g` for the plain series.
pub const SERIES_TOL: f64 = 1e-10;

const U_TABLE: usize = 4096;
const W_TABLE: usize = 320;
// Relative accuracy targeted by the hybrid evaluation.
const REL: f64 = 1e-17;
// Below this value of cos²(a/2), K(a) switches from its series to the
// complement integral.
const K_SERIES_MIN_GAP: f64 = 4e-4;

/// Coefficient tables for one dimension. Build once, share freely.
#[derive(Debug, Clone)]
pub struct GreenSeries {
    d: usize,
    alpha: f64,
    prefactor: f64,
    beta_aa: f64,
    c: Vec<f64>,
    s_const: f64,
    // Expansion around u = 1:
    //   F = C + w^(1-α) Σ sing_m w^m + log_coef ln w + w Σ reg_n w^n.
    sing: Vec<f64>,
    sing_env: Vec<f64>,
    log_coef: f64,
    reg: Vec<f64>,
    reg_env: Vec<f64>,
    c_star: f64,
    term_cap: usize,
}

/// `Vol(S^d)`.
pub fn sphere_volume(d: usize) -> f64 {
    let h = 0.5 * (d as f64 + 1.0);
    2.0 * (h * PI.ln() - ln_gamma(h)).exp()
}

fn suffix_max(v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0f64; v.len() + 1];
    for i in (0..v.len()).rev() {
        out[i] = out[i + 1].max(v[i].abs());
    }
    out
}

// Σ coef_m w^m and its derivative, stopping once the envelope bounds the
// tails of both by `tol_v` and `tol_d`.
fn power_series(coef: &[f64], env: &[f64], w: f64, tol_v: f64, tol_d: f64) -> Result<(f64, f64)> {
    let mut val = 0.0;
    let mut der = 0.0;
    let mut wk = 1.0; // w^k
    let mut wkm1 = 0.0; // w^(k-1)
    let q = 1.0 - w;
    for k in 0..coef.len() {
        val += coef[k] * wk;
        if k > 0 {
            der += k as f64 * coef[k] * wkm1;
        }
        wkm1 = wk;
        wk *= w;
        let kk = (k + 1) as f64;
        let e = env[k + 1];
        if e * wk / q <= tol_v && e * kk * wkm1 / (q * q) <= tol_d {
            return Ok((val, der));
        }
    }
    Err(Error::SeriesTruncation {
        arg: w,
        tol: tol_v,
        cap: coef.len(),
    })
}

impl GreenSeries {
    pub fn new(d: usize) -> Result<Self> {
        Self::with_term_cap(d, DEFAULT_TERM_CAP)
    }

    pub fn with_term_cap(d: usize, term_cap: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::InvalidArgument(format!(
                "the Green function needs d >= 2, got {d}"
            )));
        }
        let df = d as f64;
        let a = 0.5 * df;
        let prefactor = 2.0 / (df * sphere_volume(d));
        let b = beta(a, a);

        let mut c = Vec::with_capacity(U_TABLE);
        let mut ck = 1.0;
        for k in 0..U_TABLE {
            c.push(ck);
            let kf = k as f64;
            ck *= (df + kf) * (kf + 1.0) / ((a + 1.0 + kf) * (kf + 2.0));
        }

        let mut p = Vec::with_capacity(W_TABLE);
        let mut h = Vec::with_capacity(W_TABLE);
        let (mut pm, mut rj) = (1.0, 1.0);
        for m in 0..W_TABLE {
            let mf = m as f64;
            p.push(pm);
            h.push(rj / (a + mf));
            pm *= (a + mf) / (mf + 1.0);
            rj *= (1.0 - a + mf) / (mf + 1.0);
        }
        let integer_alpha = d.is_multiple_of(2);
        let mut log_coef = 0.0;
        let mut sing = Vec::with_capacity(W_TABLE);
        for (m, pm) in p.iter().enumerate() {
            if integer_alpha && m + 1 == d / 2 {
                log_coef = -a * b * pm;
                sing.push(0.0);
            } else {
                sing.push(-a * b * pm / (m as f64 - a + 1.0));
            }
        }
        let reg: Vec<f64> = (0..W_TABLE)
            .map(|n| {
                let qn: f64 = (0..=n).map(|j| p[n - j] * h[j]).sum();
                a * qn / (n as f64 + 1.0)
            })
            .collect();

        let mut gs = GreenSeries {
            d,
            alpha: a,
            prefactor,
            beta_aa: b,
            c,
            s_const: 0.0,
            sing_env: suffix_max(&sing),
            sing,
            log_coef,
            reg_env: suffix_max(&reg),
            reg,
            c_star: 0.0,
            term_cap,
        };
        let (f_half, _) = gs.u_series(0.5, 0.0, U_TABLE)?;
        let (t_half, _) = gs.w_part(0.5)?;
        gs.c_star = f_half - t_half;
        gs.s_const = gs.compute_s()?;
        Ok(gs)
    }

    /// Shared table for dimension `d`, built on first use.
    pub fn shared(d: usize) -> Result<Arc<GreenSeries>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GreenSeries>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(g) = cache.lock().expect("green cache poisoned").get(&d) {
            return Ok(Arc::clone(g));
        }
        let g = Arc::new(GreenSeries::new(d)?);
        let mut lock = cache.lock().expect("green cache poisoned");
        Ok(Arc::clone(lock.entry(d).or_insert(g)))
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `2 / (d V_d)`.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// `S = Σ c_k B(α, α+k+1) / B(α, α)`, so that `g(t) = P (F(u) - S)`.
    pub fn s_const(&self) -> f64 {
        self.s_const
    }

    fn coef(&self, k: usize, running: &mut f64) -> f64 {
        if k < self.c.len() {
            *running = self.c[k];
        } else {
            let kf = (k - 1) as f64;
            let df = self.d as f64;
            *running *= (df + kf) * (kf + 1.0) / ((self.alpha + 1.0 + kf) * (kf + 2.0));
        }
        *running
    }

    // Upper bound on c_{j+1}/c_j for all j >= k.
    fn ratio_bound(&self, k: usize) -> f64 {
        1.0 + (self.alpha - 2.0).max(0.0) / (k as f64 + 2.0)
    }

    /// `F(u)` and `F'(u)` from the power series in `u`, stopping when the
    /// geometric envelope bounds the tail of `F` by `tol + REL |F|`.
    fn u_series(&self, u: f64, tol: f64, cap: usize) -> Result<(f64, f64)> {
        let mut val = 0.0;
        let mut der = 0.0;
        let mut running = 1.0;
        let mut uk = 1.0; // u^k
        for k in 0..cap {
            let ck = self.coef(k, &mut running);
            let kf = k as f64;
            let dterm = ck * (kf + 1.0) * uk;
            let term = dterm * u / (kf + 1.0);
            val += term;
            der += dterm;
            uk *= u;
            let rho = u * self.ratio_bound(k);
            if term == 0.0 && k > 0 {
                return Ok((val, der));
            }
            if rho < 1.0 {
                let tail = term * rho / (1.0 - rho);
                let rho_d = rho * (kf + 2.0) / (kf + 1.0);
                let tail_d = if rho_d < 1.0 {
                    dterm * rho_d / (1.0 - rho_d)
                } else {
                    f64::INFINITY
                };
                if tail <= tol + REL * val && tail_d <= tol + REL * der {
                    return Ok((val, der));
                }
            }
        }
        Err(Error::SeriesTruncation { arg: u, tol, cap })
    }

    // The u-independent-free part T(w) = F - C and dT/dw.
    fn w_part(&self, w: f64) -> Result<(f64, f64)> {
        let a = self.alpha;
        let scale = w.powf(1.0 - a);
        let tol = 1e-18;
        let (s1, s1d) = power_series(&self.sing, &self.sing_env, w, tol / scale, tol / (scale * w.max(1e-300)))?;
        let (s2, s2d) = power_series(&self.reg, &self.reg_env, w, tol, tol / w.max(1e-300))?;
        let val = scale * s1 + self.log_coef * w.ln() + w * s2;
        let der = (1.0 - a) * scale / w * s1 + scale * s1d + self.log_coef / w + s2 + w * s2d;
        Ok((val, der))
    }

    /// `F` and `dF/du` at `w = 1 - u = t²/4`.
    fn f_of_w(&self, w: f64) -> Result<(f64, f64)> {
        let w = w.min(1.0);
        if w >= 0.5 {
            self.u_series((1.0 - w).max(0.0), 0.0, 4 * U_TABLE)
        } else {
            let (t, dt) = self.w_part(w)?;
            Ok((self.c_star + t, -dt))
        }
    }

    fn compute_s(&self) -> Result<f64> {
        let a = self.alpha;
        let b = self.beta_aa;
        // (α/B) ∫_0^1 B_u B_{1-u} / (u(1-u))^α du, symmetric about 1/2.
        let f = |u: f64| -> f64 {
            let bu = incomplete_beta(u, a, a).unwrap_or(f64::NAN);
            (bu / u.powf(a)) * ((b - bu) / (1.0 - u).powf(a))
        };
        let half = quad::integrate(f, 0.0, 0.5, 1e-15 * b)?;
        Ok(2.0 * a * half / b)
    }

    /// `g(t)` from the squared distance `t²`.
    pub fn value_sq(&self, r2: f64) -> Result<f64> {
        if r2 <= 0.0 {
            return Ok(f64::INFINITY);
        }
        let (f, _) = self.f_of_w(0.25 * r2)?;
        Ok(self.prefactor * (f - self.s_const))
    }

    /// `g(t)`.
    pub fn value(&self, t: f64) -> Result<f64> {
        self.value_sq(t * t)
    }

    /// `dg/du` from the squared distance.
    pub fn du_sq(&self, r2: f64) -> Result<f64> {
        let (_, df) = self.f_of_w(0.25 * r2)?;
        Ok(self.prefactor * df)
    }

    /// `g` and `dg/du` from the squared distance.
    pub fn value_du_sq(&self, r2: f64) -> Result<(f64, f64)> {
        if r2 <= 0.0 {
            return Ok((f64::INFINITY, f64::NAN));
        }
        let (f, df) = self.f_of_w(0.25 * r2)?;
        Ok((self.prefactor * (f - self.s_const), self.prefactor * df))
    }

    /// `g(t)` from the plain `u` series only, with the tail held below
    /// `tol` on the scale of `g`. Fails when the configured term cap is
    /// reached first.
    pub fn value_plain_series(&self, t: f64, tol: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(f64::INFINITY);
        }
        let u = (1.0 - 0.25 * t * t).max(0.0);
        let (f, _) = self
            .u_series(u, tol / self.prefactor, self.term_cap)
            .map_err(|e| match e {
                Error::SeriesTruncation { cap, .. } => Error::SeriesTruncation { arg: t, tol, cap },
                other => other,
            })?;
        Ok(self.prefactor * (f - self.s_const))
    }

    /// `K(a)` for `a ∈ (0, π]`.
    pub fn k_of_a(&self, angle: f64) -> Result<f64> {
        if !(angle > 0.0 && angle <= PI) {
            return Err(Error::InvalidArgument(format!(
                "K(a) needs a in (0, π], got {angle}"
            )));
        }
        if angle == PI {
            return Ok(self.prefactor * self.s_const);
        }
        let (sh, ch) = (0.5 * angle).sin_cos();
        let x = sh * sh;
        let y = ch * ch;
        let a = self.alpha;
        let bx = incomplete_beta(x, a, a)?;
        if y < K_SERIES_MIN_GAP {
            // K B_x / P = B S - ∫_x^1 F(v) (v(1-v))^(α-1) dv.
            let j = quad::integrate(
                |om: f64| {
                    let f = self.f_of_w(om).map(|r| r.0).unwrap_or(f64::NAN);
                    f * ((1.0 - om) * om).powf(a - 1.0)
                },
                0.0,
                y,
                1e-16,
            )?;
            return Ok(self.prefactor * (self.beta_aa * self.s_const - j) / bx);
        }
        // r_j = B_x(α+j, α) / B_x(α, α) by forward recurrence.
        let tol = 1e-16 / self.prefactor;
        let mut r = 1.0;
        let mut e = (a * x.ln() + a * y.ln()).exp() / bx;
        let mut sum = 0.0;
        let mut running = 1.0;
        for k in 0..self.term_cap {
            let jf = k as f64;
            r = ((a + jf) * r - e) / (2.0 * a + jf);
            e *= x;
            let ck = self.coef(k, &mut running);
            let term = ck * r;
            sum += term;
            let rho = x * self.ratio_bound(k);
            if rho < 1.0 {
                let envelope = ck * x.powi(k as i32 + 1);
                if envelope * rho / (1.0 - rho) <= tol + REL * sum {
                    return Ok(self.prefactor * sum);
                }
            }
        }
        Err(Error::SeriesTruncation {
            arg: angle,
            tol: 1e-16,
            cap: self.term_cap,
        })
    }
}

/// Green function `G(S^d; x, y)`. Coincident points give `+∞`.
pub fn green_kernel(x: &SpherePoint, y: &SpherePoint, d: usize) -> Result<f64> {
    if x.dim() != d || y.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: if x.dim() != d { x.dim() } else { y.dim() },
        });
    }
    GreenSeries::shared(d)?.value_sq(dist_sq(x.coords(), y.coords()))
}

/// `K(S^d, a)`.
pub fn k_of_a(d: usize, a: f64) -> Result<f64> {
    GreenSeries::shared(d)?.k_of_a(a)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volumes() {
        assert!((sphere_volume(1) - 2.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-13);
    }

    #[test]
    fn s_constants() {
        for (d, s) in [(2, 1.0), (3, 9.0 / 8.0), (4, 11.0 / 9.0), (5, 125.0 / 96.0)] {
            let g = GreenSeries::new(d).unwrap();
            assert!((g.s_const() - s).abs() < 1e-12, "d={d}: {}", g.s_const());
        }
    }

    #[test]
    fn branches_agree_at_the_switch() {
        for d in 2..=7 {
            let g = GreenSeries::new(d).unwrap();
            let (fu, du) = g.u_series(0.5, 0.0, U_TABLE).unwrap();
            let (t, dt) = g.w_part(0.5).unwrap();
            assert!((g.c_star + t - fu).abs() < 1e-14);
            assert!((-dt - du).abs() < 1e-12 * du.abs(), "d={d}: {dt} {du}");
        }
    }

    #[test]
    fn w_branch_matches_plain_series() {
        for d in [3, 4, 6] {
            let g = GreenSeries::new(d).unwrap();
            for w in [0.45, 0.3, 0.1, 0.02] {
                let (a, da) = g.f_of_w(w).unwrap();
                let (b, db) = g.u_series(1.0 - w, 1e-15, 10_000_000).unwrap();
                assert!((a - b).abs() < 1e-11 * b.abs().max(1.0), "d={d} w={w}: {a} {b}");
                assert!((da - db).abs() < 1e-9 * db.abs(), "d={d} w={w}: {da} {db}");
            }
        }
    }

    #[test]
    fn plain_series_cap_is_enforced() {
        let g = GreenSeries::with_term_cap(3, 100).unwrap();
        assert!(matches!(
            g.value_plain_series(0.01, SERIES_TOL),
            Err(Error::SeriesTruncation { .. })
        ));
        assert!(g.value_plain_series(1.9, SERIES_TOL).is_ok());
    }

    #[test]
    fn k_branches_agree() {
        // Series with a small gap versus the complement integral.
        let g = GreenSeries::new(3).unwrap();
        let angle = 2.0 * (K_SERIES_MIN_GAP * 1.5).sqrt().acos();
        let series = g.k_of_a(angle).unwrap();
        let y = (0.5 * angle).cos().powi(2);
        let bx = incomplete_beta(1.0 - y, 1.5, 1.5).unwrap();
        let j = quad::integrate(
            |om: f64| g.f_of_w(om).unwrap().0 * ((1.0 - om) * om).sqrt(),
            0.0,
            y,
            1e-16,
        )
        .unwrap();
        let complement = g.prefactor * (g.beta_aa * g.s_const - j) / bx;
        assert!((series - complement).abs() < 1e-11, "{series} {complement}");
    }
}
