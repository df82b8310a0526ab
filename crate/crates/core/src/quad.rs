//! Adaptive Gauss–Kronrod quadrature and compensated summation.

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const MAX_INTERVALS: usize = 4000;

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Integrates `f` over `[a, b]` to absolute tolerance `tol` by globally
/// adaptive bisection. The integrand is never evaluated at the endpoints.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let (v, e) = gk15(&f, a, b);
    let mut parts = vec![(a, b, v, e)];
    let mut total_err = e;
    while total_err > tol {
        if parts.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature { err: total_err, tol });
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            // Interval exhausted at machine resolution.
            return Err(Error::Quadrature { err: total_err, tol });
        }
        let (v1, e1) = gk15(&f, lo, mid);
        let (v2, e2) = gk15(&f, mid, hi);
        parts.push((lo, mid, v1, e1));
        parts.push((mid, hi, v2, e2));
        total_err = parts.iter().map(|p| p.3).sum();
        if !total_err.is_finite() {
            return Err(Error::Quadrature { err: total_err, tol });
        }
    }
    Ok(neumaier_sum(parts.iter().map(|p| p.2)))
}

/// `∫_0^1 f(v) v^(p-1) (1-v)^(q-1) dv` for `p, q > 0`.
///
/// Each half of the interval is mapped by a power substitution that absorbs
/// the algebraic endpoint factor, so `f` only needs to be integrable against
/// a bounded weight.
pub fn beta_weighted<F: Fn(f64) -> f64>(f: F, p: f64, q: f64, tol: f64) -> Result<f64> {
    // [0, 1/2]: v = z^(1/p), v^(p-1) dv = dz / p.
    let left = integrate(
        |z: f64| {
            let v = z.powf(1.0 / p);
            f(v) * (1.0 - v).powf(q - 1.0)
        },
        0.0,
        0.5f64.powf(p),
        0.5 * tol * p,
    )? / p;
    // [1/2, 1]: 1 - v = z^(1/q).
    let right = integrate(
        |z: f64| {
            let w = z.powf(1.0 / q);
            f(1.0 - w) * (1.0 - w).powf(p - 1.0)
        },
        0.0,
        0.5f64.powf(q),
        0.5 * tol * q,
    )? / q;
    Ok(left + right)
}

/// Neumaier's compensated sum.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::default();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Running compensated sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}
