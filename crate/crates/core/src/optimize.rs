//! Global minimization of the potential `x ↦ Σ_j K(x, x_j)` over `S^d`.
//!
//! On `S^d`, `d ≥ 2`, the potential is tabulated on a candidate mesh, the
//! best few mesh points are refined by projected gradient descent, and the
//! best refined point wins. On the circle the minimizer lies inside one of
//! the arcs cut out by the sources, so each promising arc is searched
//! directly with a bracketed Newton iteration on the analytic derivative.

use std::cmp::Ordering;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelEval, KernelSpec};
use crate::par;
use crate::quad::CompensatedSum;
use crate::sphere::{dist_sq, norm, Mesh, MeshStrategy, SpherePoint};

/// Rule for choosing among minimizers of equal value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TieBreak {
    #[default]
    LexicographicMin,
}

/// Values closer than this (relative to `max(1, |v|)`) count as ties.
pub const TIE_REL: f64 = 1e-12;
/// Coordinates closer than this count as equal when breaking ties.
pub const TIE_COORD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    pub mesh_size: usize,
    pub multistart: usize,
    pub grad_tol: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub tie_break: TieBreak,
    /// Mesh layout; `None` picks the default for the dimension.
    pub mesh_strategy: Option<MeshStrategy>,
    /// Seed of the random mesh.
    pub seed: u64,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            mesh_size: 20_000,
            multistart: 8,
            grad_tol: 1e-10,
            max_iters: 200,
            armijo_c: 1e-4,
            tie_break: TieBreak::LexicographicMin,
            mesh_strategy: None,
            seed: 0,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        if self.mesh_size < 1 {
            return Err(Error::InvalidArgument("mesh_size must be positive".into()));
        }
        if self.multistart < 1 {
            return Err(Error::InvalidArgument("multistart must be positive".into()));
        }
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument("grad_tol must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::InvalidArgument("armijo_c must lie in (0, 1)".into()));
        }
        Ok(())
    }

    /// Advice when the mesh is coarse for `n` points.
    pub fn mesh_warning(&self, n: usize) -> Option<String> {
        (self.mesh_size < 8 * n).then(|| {
            format!(
                "mesh_size {} is below the recommended 8·N = {}",
                self.mesh_size,
                8 * n
            )
        })
    }

    pub fn strategy_for(&self, d: usize) -> MeshStrategy {
        self.mesh_strategy.unwrap_or_else(|| MeshStrategy::default_for(d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinResult {
    pub point: SpherePoint,
    pub value: f64,
    /// Potential at the best mesh candidate (or arc midpoint on `S^1`).
    pub mesh_value: f64,
    pub refined: bool,
    pub iterations: usize,
}

// ---- potential and gradient on flat buffers -------------------------------

/// Compensated sum of `K(x, y)` over the sources. `+∞` short-circuits.
pub(crate) fn eval_potential(eval: &KernelEval, flat: &[f64], stride: usize, x: &[f64]) -> f64 {
    let mut acc = CompensatedSum::default();
    for y in flat.chunks_exact(stride) {
        let v = eval.value_sq(dist_sq(x, y));
        if !v.is_finite() {
            return v;
        }
        acc.add(v);
    }
    acc.value()
}

/// Potential and its tangential gradient at `x`.
pub(crate) fn eval_potential_grad(
    eval: &KernelEval,
    flat: &[f64],
    stride: usize,
    x: &[f64],
    grad: &mut [f64],
) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut acc = CompensatedSum::default();
    for y in flat.chunks_exact(stride) {
        let r2 = dist_sq(x, y);
        let (v, w) = eval.value_and_dip(r2);
        if !v.is_finite() {
            grad.iter_mut().for_each(|g| *g = f64::NAN);
            return v;
        }
        acc.add(v);
        for (g, yc) in grad.iter_mut().zip(y) {
            *g += w * yc;
        }
    }
    let radial: f64 = grad.iter().zip(x).map(|(g, c)| g * c).sum();
    for (g, c) in grad.iter_mut().zip(x) {
        *g -= radial * c;
    }
    acc.value()
}

fn check_sources(points: &[SpherePoint], x: &SpherePoint) -> Result<()> {
    if points.is_empty() {
        return Err(Error::InvalidArgument("configuration is empty".into()));
    }
    for p in points {
        if p.dim() != x.dim() {
            return Err(Error::DimensionMismatch {
                expected: x.dim(),
                got: p.dim(),
            });
        }
    }
    Ok(())
}

fn flatten(points: &[SpherePoint]) -> Vec<f64> {
    points.iter().flat_map(|p| p.coords().iter().copied()).collect()
}

/// `Σ_j K(x, x_j)`; `+∞` when `x` hits a source of a singular kernel.
pub fn potential(points: &[SpherePoint], kernel: &KernelSpec, x: &SpherePoint) -> Result<f64> {
    check_sources(points, x)?;
    let eval = kernel.evaluator()?;
    let v = eval_potential(&eval, &flatten(points), x.dim() + 1, x.coords());
    if v.is_nan() {
        return Err(Error::Solver("kernel evaluation failed".into()));
    }
    Ok(v)
}

/// Tangential gradient of the potential at `x`.
pub fn potential_gradient(points: &[SpherePoint], kernel: &KernelSpec, x: &SpherePoint) -> Result<Vec<f64>> {
    check_sources(points, x)?;
    if points.iter().any(|p| dist_sq(p.coords(), x.coords()) == 0.0) {
        return Err(Error::InvalidArgument(
            "gradient is undefined at a source point".into(),
        ));
    }
    let eval = kernel.evaluator()?;
    let mut g = vec![0.0; x.dim() + 1];
    eval_potential_grad(&eval, &flatten(points), x.dim() + 1, x.coords(), &mut g);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::Solver("kernel gradient evaluation failed".into()));
    }
    Ok(g)
}

// ---- selection -------------------------------------------------------------

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        if (x - y).abs() > TIE_COORD {
            return x.total_cmp(y);
        }
    }
    Ordering::Equal
}

/// Whether `(va, a)` beats `(vb, b)`: lower value, or a tie in value and a
/// lexicographically smaller point.
pub(crate) fn prefer(va: f64, a: &[f64], vb: f64, b: &[f64]) -> bool {
    let tol = TIE_REL * va.abs().max(vb.abs()).max(1.0);
    if (va - vb).abs() <= tol {
        lex_cmp(a, b) == Ordering::Less
    } else {
        va < vb
    }
}

/// Indices of the `k` smallest finite values, ordered by value then index.
pub(crate) fn smallest_k(values: &[f64], k: usize) -> Result<Vec<usize>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::Solver("kernel evaluation on the mesh failed".into()));
    }
    let mut idx: Vec<usize> = (0..values.len()).filter(|&i| values[i] < f64::INFINITY).collect();
    if idx.is_empty() {
        return Err(Error::Solver(
            "every candidate coincides with a configuration point".into(),
        ));
    }
    let cmp = |a: &usize, b: &usize| values[*a].total_cmp(&values[*b]).then(a.cmp(b));
    let k = k.min(idx.len());
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_by(cmp);
    Ok(idx)
}

// ---- descent on S^d ----------------------------------------------------------

#[derive(Debug, Clone)]
pub(crate) struct Refined {
    pub point: Vec<f64>,
    pub value: f64,
    pub start_value: f64,
    pub iterations: usize,
}

const MAX_HALVINGS: usize = 60;

/// Iterations without a new smallest gradient after which descent stops.
/// Series-evaluated kernels have a gradient noise floor above `grad_tol`.
const STALL_ITERS: usize = 25;

/// Projected gradient descent with Armijo backtracking. The first trial step
/// is 1; later trial steps use the Barzilai–Borwein estimate.
pub(crate) fn refine(
    eval: &KernelEval,
    flat: &[f64],
    stride: usize,
    start: &[f64],
    params: &SolverParams,
) -> Refined {
    let mut x = start.to_vec();
    let mut g = vec![0.0; stride];
    let mut f = eval_potential_grad(eval, flat, stride, &x, &mut g);
    let start_value = f;
    let mut out = Refined {
        point: x.clone(),
        value: f,
        start_value,
        iterations: 0,
    };
    if !f.is_finite() {
        return out;
    }
    let mut trial = 1.0;
    let mut xn = vec![0.0; stride];
    let mut gn = vec![0.0; stride];
    let mut best_g2 = f64::INFINITY;
    let mut best_at = 0;
    for it in 0..params.max_iters {
        let g2: f64 = g.iter().map(|v| v * v).sum();
        if g2.sqrt() < params.grad_tol {
            break;
        }
        if g2 < best_g2 {
            best_g2 = g2;
            best_at = it;
        } else if it - best_at >= STALL_ITERS {
            break;
        }
        let mut step = trial;
        let mut fnew = f64::NAN;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            for ((o, xi), gi) in xn.iter_mut().zip(&x).zip(&g) {
                *o = xi - step * gi;
            }
            let nn = norm(&xn);
            xn.iter_mut().for_each(|v| *v /= nn);
            fnew = eval_potential_grad(eval, flat, stride, &xn, &mut gn);
            if fnew <= f - params.armijo_c * step * g2 {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || !fnew.is_finite() {
            break;
        }
        let mut ss = 0.0;
        let mut sy = 0.0;
        for i in 0..stride {
            let s = xn[i] - x[i];
            ss += s * s;
            sy += s * (gn[i] - g[i]);
        }
        trial = if sy > 0.0 { ss / sy } else { 2.0 * step };
        std::mem::swap(&mut x, &mut xn);
        std::mem::swap(&mut g, &mut gn);
        f = fnew;
        out.iterations = it + 1;
    }
    out.point = x;
    out.value = f;
    out
}

/// Refines each start in parallel and returns the preferred result.
pub(crate) fn refine_starts(
    eval: &KernelEval,
    flat: &[f64],
    stride: usize,
    starts: &[Vec<f64>],
    params: &SolverParams,
) -> Result<Refined> {
    let results = par::map_range(starts.len(), |i| refine(eval, flat, stride, &starts[i], params));
    pick_best(results)
}

pub(crate) fn pick_best(results: Vec<Refined>) -> Result<Refined> {
    let mut best: Option<Refined> = None;
    for r in results {
        if r.value.is_nan() {
            return Err(Error::Solver("kernel evaluation failed during refinement".into()));
        }
        best = match best {
            Some(b) if !prefer(r.value, &r.point, b.value, &b.point) => Some(b),
            _ => Some(r),
        };
    }
    best.ok_or_else(|| Error::Solver("no candidates to refine".into()))
}

// ---- exact search on the circle ---------------------------------------------

/// Angle in `[0, 2π)` of `(x, y)`.
pub(crate) fn angle_of(c: &[f64]) -> f64 {
    let a = c[1].atan2(c[0]);
    if a < 0.0 {
        a + 2.0 * PI
    } else {
        a
    }
}

/// Squared chord between angles, from the half-angle sine. Far more
/// accurate for nearby angles than differencing coordinates.
#[inline]
pub(crate) fn chord_sq(a: f64, b: f64) -> f64 {
    let h = (0.5 * (a - b)).sin();
    4.0 * h * h
}

/// Potential on `S^1` of sources given by their angles.
pub(crate) fn circle_potential(eval: &KernelEval, src: &[f64], theta: f64) -> f64 {
    let mut acc = CompensatedSum::default();
    for &a in src {
        let v = eval.value_sq(chord_sq(theta, a));
        if !v.is_finite() {
            return v;
        }
        acc.add(v);
    }
    acc.value()
}

/// First and second derivatives in the angle of the potential on `S^1`.
fn circle_derivs(eval: &KernelEval, src: &[f64], theta: f64) -> (f64, f64) {
    let mut d1 = CompensatedSum::default();
    let mut d2 = CompensatedSum::default();
    for &a in src {
        let (h, c) = (0.5 * (theta - a)).sin_cos();
        let r2 = 4.0 * h * h;
        let sin_d = 2.0 * h * c;
        let cos_d = 1.0 - 2.0 * h * h;
        let k1 = eval.dvalue_dip(r2);
        let k2 = eval.d2value_dip(r2);
        d1.add(-k1 * sin_d);
        d2.add(k2 * sin_d * sin_d - k1 * cos_d);
    }
    (d1.value(), d2.value())
}

/// Minimizes the potential over the open arc `(lo, hi)` (angles, with
/// `hi > lo`) from its midpoint. Newton steps on the derivative are kept
/// inside a sign bracket and replaced by bisection when they leave it.
pub(crate) fn arc_minimize(eval: &KernelEval, src: &[f64], lo: f64, hi: f64) -> Refined {
    let mid = 0.5 * (lo + hi);
    let start_value = circle_potential(eval, src, mid);
    let (mut a, mut b) = (lo, hi);
    let mut t = mid;
    let mut iterations = 0;
    for it in 0..200 {
        iterations = it + 1;
        let (d1, d2) = circle_derivs(eval, src, t);
        if d1 == 0.0 || !d1.is_finite() {
            break;
        }
        if d1 > 0.0 {
            b = t;
        } else {
            a = t;
        }
        let newton = t - d1 / d2;
        let next = if d2 > 0.0 && newton > a && newton < b {
            newton
        } else {
            0.5 * (a + b)
        };
        let done = (next - t).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0);
        t = next;
        if done || b - a <= 4.0 * f64::EPSILON * b.abs().max(1.0) {
            break;
        }
    }
    let value = circle_potential(eval, src, t);
    let (t, value) = if value <= start_value { (t, value) } else { (mid, start_value) };
    let t = t.rem_euclid(2.0 * PI);
    Refined {
        point: vec![t.cos(), t.sin()],
        value,
        start_value,
        iterations,
    }
}

/// Sorted distinct angles of the sources; arcs run between neighbours.
pub(crate) fn sorted_angles(flat: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = flat.chunks_exact(2).map(angle_of).collect();
    a.sort_by(f64::total_cmp);
    a.dedup();
    a
}

/// Arc `i` runs from `angles[i]` to the next angle, wrapping at `2π`.
pub(crate) fn arc_bounds(angles: &[f64], i: usize) -> (f64, f64) {
    let lo = angles[i];
    let hi = if i + 1 < angles.len() {
        angles[i + 1]
    } else {
        angles[0] + 2.0 * PI
    };
    (lo, hi)
}

fn minimize_circle(eval: &KernelEval, flat: &[f64], params: &SolverParams) -> Result<MinResult> {
    let src: Vec<f64> = flat.chunks_exact(2).map(angle_of).collect();
    let angles = sorted_angles(flat);
    let mids: Vec<f64> = (0..angles.len())
        .map(|i| {
            let (lo, hi) = arc_bounds(&angles, i);
            circle_potential(eval, &src, 0.5 * (lo + hi))
        })
        .collect();
    let order = smallest_k(&mids, params.multistart)?;
    let results = par::map_range(order.len(), |j| {
        let (lo, hi) = arc_bounds(&angles, order[j]);
        arc_minimize(eval, &src, lo, hi)
    });
    let mesh_value = results[0].start_value;
    let best = pick_best(results)?;
    Ok(MinResult {
        point: SpherePoint::normalized(best.point)?,
        value: best.value,
        mesh_value,
        refined: true,
        iterations: best.iterations,
    })
}

/// Approximate global minimizer of the potential of `points`.
pub fn minimize_potential(points: &[SpherePoint], kernel: &KernelSpec, params: &SolverParams) -> Result<MinResult> {
    params.validate()?;
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidArgument("configuration is empty".into()))?;
    let d = first.dim();
    check_sources(points, first)?;
    if d != kernel.dim {
        return Err(Error::DimensionMismatch {
            expected: kernel.dim,
            got: d,
        });
    }
    let (search, scale, shift) = kernel.search_kernel();
    let eval = search.evaluator()?;
    let flat = flatten(points);
    let offset = shift * points.len() as f64;
    let mut r = if d == 1 {
        minimize_circle(&eval, &flat, params)?
    } else {
        minimize_mesh(&eval, &flat, d, params)?
    };
    r.value = scale * r.value + offset;
    r.mesh_value = scale * r.mesh_value + offset;
    Ok(r)
}

fn minimize_mesh(eval: &KernelEval, flat: &[f64], d: usize, params: &SolverParams) -> Result<MinResult> {
    let stride = d + 1;
    let mesh = Mesh::generate(d, params.mesh_size, params.strategy_for(d), params.seed)?;
    let mut field = vec![0.0; mesh.len()];
    for y in flat.chunks_exact(stride) {
        par::add_to_field(&mut field, mesh.flat(), stride, |p| eval.value_sq(dist_sq(p, y)));
    }
    let order = smallest_k(&field, params.multistart)?;
    let starts: Vec<Vec<f64>> = order.iter().map(|&i| mesh.point(i).to_vec()).collect();
    let results = par::map_range(starts.len(), |i| refine(eval, flat, stride, &starts[i], params));
    let mesh_value = results[0].start_value;
    let best = pick_best(results)?;
    Ok(MinResult {
        refined: best.iterations > 0,
        point: SpherePoint::normalized(best.point)?,
        value: best.value,
        mesh_value,
        iterations: best.iterations,
    })
}
