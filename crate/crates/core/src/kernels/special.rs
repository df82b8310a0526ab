//! Special functions: incomplete beta, Riemann zeta and the sinc-power
//! expansion used by the equally spaced circle energies.

use std::f64::consts::{LN_2, PI};

use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

const CF_MAX_ITER: usize = 10_000;
const CF_EPS: f64 = 1e-16;
const FPMIN: f64 = 1e-300;

/// `ln B(α, β)`.
pub fn ln_beta(alpha: f64, beta: f64) -> f64 {
    ln_gamma(alpha) + ln_gamma(beta) - ln_gamma(alpha + beta)
}

/// Complete beta function `B(α, β)`.
pub fn beta(alpha: f64, beta: f64) -> f64 {
    ln_beta(alpha, beta).exp()
}

/// Unregularized incomplete beta `B_x(α, β) = ∫_0^x t^(α-1) (1-t)^(β-1) dt`.
///
/// Evaluated with the Lentz continued fraction on whichever side of the
/// symmetry point converges faster.
pub fn incomplete_beta(x: f64, alpha: f64, beta_: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) || x.is_nan() {
        return Err(Error::InvalidArgument(format!(
            "incomplete beta needs x in [0, 1], got {x}"
        )));
    }
    if !(alpha > 0.0 && beta_ > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "incomplete beta needs positive parameters, got ({alpha}, {beta_})"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    if x == 1.0 {
        return Ok(beta(alpha, beta_));
    }
    if x > (alpha + 1.0) / (alpha + beta_ + 2.0) {
        let comp = lower_cf(1.0 - x, beta_, alpha)?;
        Ok(beta(alpha, beta_) - comp)
    } else {
        lower_cf(x, alpha, beta_)
    }
}

fn lower_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    let front = (a * x.ln() + b * (1.0 - x).ln()).exp() / a;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < FPMIN {
        d = FPMIN;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=CF_MAX_ITER {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < FPMIN {
            d = FPMIN;
        }
        c = 1.0 + aa / c;
        if c.abs() < FPMIN {
            c = FPMIN;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < CF_EPS {
            return Ok(front * h);
        }
    }
    Err(Error::SeriesTruncation {
        arg: x,
        tol: CF_EPS,
        cap: CF_MAX_ITER,
    })
}

/// Regularized form `B_x(α, β) / B(α, β)`.
pub fn incomplete_beta_ratio(x: f64, alpha: f64, beta_: f64) -> Result<f64> {
    Ok(incomplete_beta(x, alpha, beta_)? / beta(alpha, beta_))
}

const BORWEIN_N: usize = 40;

/// Dirichlet eta by Borwein's accelerated alternating series; accurate for
/// real `s >= 1/2`.
fn eta(s: f64) -> f64 {
    let n = BORWEIN_N;
    let mut d = Vec::with_capacity(n + 1);
    let mut t = 1.0 / n as f64;
    let mut acc = t;
    d.push(n as f64 * acc);
    for i in 1..=n {
        let fi = i as f64;
        let fnn = n as f64;
        t *= 4.0 * (fnn + fi - 1.0) * (fnn - fi + 1.0) / ((2.0 * fi) * (2.0 * fi - 1.0));
        acc += t;
        d.push(fnn * acc);
    }
    let dn = d[n];
    let mut sum = 0.0;
    for k in 0..n {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        sum += sign * (d[k] - dn) / ((k + 1) as f64).powf(s);
    }
    -sum / dn
}

/// Riemann zeta function for real `s ≠ 1`.
pub fn zeta(s: f64) -> Result<f64> {
    if s == 1.0 {
        return Err(Error::InvalidArgument("zeta has a pole at s = 1".into()));
    }
    if s.is_nan() {
        return Err(Error::InvalidArgument("zeta of NaN".into()));
    }
    if s == 0.0 {
        return Ok(-0.5);
    }
    if s >= 0.5 {
        // 1 - 2^(1-s) without cancellation near s = 1
        let denom = -((1.0 - s) * LN_2).exp_m1();
        return Ok(eta(s) / denom);
    }
    if s < 0.0 && s.fract() == 0.0 && (s as i64) % 2 == 0 {
        return Ok(0.0);
    }
    // Functional equation with ζ(1-s) = η(1-s) / (1 - 2^s).
    let one_minus = 1.0 - s;
    let ratio = (0.5 * PI * s).sin() / (-(s * LN_2).exp_m1());
    Ok(2f64.powf(s) * PI.powf(s - 1.0) * ratio * gamma(one_minus) * eta(one_minus))
}

/// Taylor coefficients of `(sin πz / πz)^(-s)` in powers of `z²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ZetaCoeffs {
    pub s: f64,
    pub a: Vec<f64>,
}

/// Coefficients `a_0..=a_q`, obtained by exponentiating
/// `-s log(sin πz / πz) = s Σ_k ζ(2k)/k z^(2k)`.
pub fn sinc_power_coeffs(s: f64, q: usize) -> ZetaCoeffs {
    let b: Vec<f64> = (1..=q)
        .map(|k| s * zeta(2.0 * k as f64).expect("even zeta") / k as f64)
        .collect();
    let mut a = vec![1.0];
    for n in 1..=q {
        let mut acc = 0.0;
        for k in 1..=n {
            acc += k as f64 * b[k - 1] * a[n - k];
        }
        a.push(acc / n as f64);
    }
    ZetaCoeffs { s, a }
}
