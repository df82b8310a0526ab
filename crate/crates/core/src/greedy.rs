//! Greedy energy sequences: each new point minimizes the potential of the
//! points chosen so far.
//!
//! The potential of the current prefix is kept on every mesh candidate (or,
//! on the circle, at every arc midpoint) and updated with one kernel column
//! per step, so a step costs `O(mesh)` plus the local refinement.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{KernelEval, KernelSpec};
use crate::optimize::{
    self, arc_bounds, arc_minimize, chord_sq, circle_potential, eval_potential_grad, minimize_potential,
    refine_starts, smallest_k, Refined, SolverParams,
};
use crate::par;
use crate::quad::CompensatedSum;
use crate::sphere::{dist_sq, norm, Mesh, SpherePoint};

pub const SOFTWARE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Refined points closer than this to an existing point count as collisions.
pub const COLLISION_DIST: f64 = 1e-9;
const PERTURBATION: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigMeta {
    pub seed: u64,
    pub params: SolverParams,
    pub initial_point: Vec<f64>,
    pub version: String,
}

/// An ordered greedy configuration with its per-step polarization log:
/// `step_values[k-1]` is the polarization of the first `k` points, attained
/// at point `k+1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    pub dim: usize,
    pub kernel: KernelSpec,
    pub points: Vec<SpherePoint>,
    pub step_values: Vec<f64>,
    pub meta: ConfigMeta,
}

impl Configuration {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `E(ω_n) = 2 Σ_{k<n} P(ω_k)` for every prefix length `n = 1..=N`.
    pub fn prefix_energies(&self) -> Vec<f64> {
        let mut acc = CompensatedSum::default();
        let mut out = Vec::with_capacity(self.len());
        out.push(0.0);
        for &v in &self.step_values {
            acc.add(v);
            out.push(2.0 * acc.value());
        }
        out.truncate(self.len());
        out
    }

    /// The first `n` points as a configuration of their own.
    pub fn prefix(&self, n: usize) -> Configuration {
        let n = n.min(self.len());
        Configuration {
            dim: self.dim,
            kernel: self.kernel,
            points: self.points[..n].to_vec(),
            step_values: self.step_values[..n.saturating_sub(1)].to_vec(),
            meta: self.meta.clone(),
        }
    }

    /// Checks the structural invariants of a greedy configuration.
    pub fn validate(&self) -> Result<()> {
        if self.points.is_empty() {
            return Err(Error::InvalidArgument("configuration is empty".into()));
        }
        if self.step_values.len() + 1 != self.points.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points need {} step values, found {}",
                self.points.len(),
                self.points.len() - 1,
                self.step_values.len()
            )));
        }
        for p in &self.points {
            if p.dim() != self.dim {
                return Err(Error::DimensionMismatch {
                    expected: self.dim,
                    got: p.dim(),
                });
            }
        }
        if self.kernel.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: self.kernel.dim,
            });
        }
        Ok(())
    }
}

enum Field {
    Mesh { mesh: Mesh, values: Vec<f64> },
    // `src` holds source angles in insertion order, `angles` the same set
    // sorted; `mids[k]` is the midpoint of the arc starting at `angles[k]`.
    Arcs {
        src: Vec<f64>,
        angles: Vec<f64>,
        mids: Vec<f64>,
        values: Vec<f64>,
    },
}

/// Incremental greedy builder.
pub struct GreedyBuilder {
    kernel: KernelSpec,
    /// Evaluator of the search kernel, and the map back to `kernel`.
    eval: KernelEval,
    scale: f64,
    shift: f64,
    params: SolverParams,
    stride: usize,
    points: Vec<SpherePoint>,
    flat: Vec<f64>,
    step_values: Vec<f64>,
    meta: ConfigMeta,
    field: Field,
}

impl GreedyBuilder {
    pub fn new(kernel: KernelSpec, x1: SpherePoint, params: SolverParams) -> Result<Self> {
        params.validate()?;
        if kernel.dim < 1 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        kernel.validate_for_runs()?;
        if x1.dim() != kernel.dim {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim,
                got: x1.dim(),
            });
        }
        let d = kernel.dim;
        let field = if d == 1 {
            Field::Arcs {
                src: Vec::new(),
                angles: Vec::new(),
                mids: Vec::new(),
                values: Vec::new(),
            }
        } else {
            let mesh = Mesh::generate(d, params.mesh_size, params.strategy_for(d), params.seed)?;
            let values = vec![0.0; mesh.len()];
            Field::Mesh { mesh, values }
        };
        let meta = ConfigMeta {
            seed: params.seed,
            params: params.clone(),
            initial_point: x1.coords().to_vec(),
            version: SOFTWARE_VERSION.to_string(),
        };
        let (search, scale, shift) = kernel.search_kernel();
        let mut b = GreedyBuilder {
            eval: search.evaluator()?,
            scale,
            shift,
            kernel,
            params,
            stride: d + 1,
            points: Vec::new(),
            flat: Vec::new(),
            step_values: Vec::new(),
            meta,
            field,
        };
        b.push(x1);
        Ok(b)
    }

    /// Rebuilds the builder state from a saved configuration.
    pub fn resume(config: &Configuration, params: &SolverParams) -> Result<Self> {
        config.validate()?;
        if *params != config.meta.params {
            return Err(Error::IncompatibleCheckpoint(
                "solver parameters differ from the checkpoint".into(),
            ));
        }
        let x1 = config.points[0].clone();
        if x1.coords() != config.meta.initial_point.as_slice() {
            return Err(Error::IncompatibleCheckpoint(
                "first point differs from the recorded initial point".into(),
            ));
        }
        let mut b = GreedyBuilder::new(config.kernel, x1, params.clone())?;
        b.meta = config.meta.clone();
        for p in &config.points[1..] {
            b.push(p.clone());
        }
        b.step_values = config.step_values.clone();
        Ok(b)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SpherePoint] {
        &self.points
    }

    fn push(&mut self, p: SpherePoint) {
        let eval = &self.eval;
        let y = p.coords().to_vec();
        match &mut self.field {
            Field::Mesh { mesh, values } => {
                let stride = self.stride;
                par::add_to_field(values, mesh.flat(), stride, |m| eval.value_sq(dist_sq(m, &y)));
            }
            Field::Arcs {
                src,
                angles,
                mids,
                values,
            } => {
                let theta = optimize::angle_of(&y);
                for (v, m) in values.iter_mut().zip(mids.iter()) {
                    *v += eval.value_sq(chord_sq(*m, theta));
                }
                src.push(theta);
                let pos = angles.partition_point(|a| *a < theta);
                angles.insert(pos, theta);
                mids.insert(pos, 0.0);
                values.insert(pos, 0.0);
                let n = angles.len();
                for k in [pos, (pos + n - 1) % n] {
                    let (lo, hi) = arc_bounds(angles, k);
                    mids[k] = 0.5 * (lo + hi);
                    values[k] = circle_potential(eval, src, mids[k]);
                }
            }
        }
        self.flat.extend_from_slice(&y);
        self.points.push(p);
    }

    fn collides(&self, x: &[f64]) -> bool {
        let lim = COLLISION_DIST * COLLISION_DIST;
        self.flat.chunks_exact(self.stride).any(|y| dist_sq(x, y) < lim)
    }

    fn search(&self) -> Result<Refined> {
        let k = self.params.multistart;
        match &self.field {
            Field::Arcs {
                src, angles, values, ..
            } => {
                let order = smallest_k(values, k)?;
                let results = par::map_range(order.len(), |j| {
                    let (lo, hi) = arc_bounds(angles, order[j]);
                    arc_minimize(&self.eval, src, lo, hi)
                });
                optimize::pick_best(results)
            }
            Field::Mesh { mesh, values } => {
                let order = smallest_k(values, k)?;
                let starts: Vec<Vec<f64>> = order.iter().map(|&i| mesh.point(i).to_vec()).collect();
                let best = refine_starts(&self.eval, &self.flat, self.stride, &starts, &self.params)?;
                if !self.collides(&best.point) {
                    return Ok(best);
                }
                // Nudge the first start downhill and try once more.
                let mut g = vec![0.0; self.stride];
                eval_potential_grad(&self.eval, &self.flat, self.stride, &starts[0], &mut g);
                let gn = norm(&g);
                let mut x = starts[0].clone();
                if gn.is_finite() && gn > 0.0 {
                    x.iter_mut().zip(&g).for_each(|(c, gi)| *c -= PERTURBATION * gi / gn);
                } else {
                    let i = if x[0].abs() < 0.9 { 0 } else { 1 };
                    x[i] += PERTURBATION;
                }
                let nx = norm(&x);
                x.iter_mut().for_each(|c| *c /= nx);
                let retry = refine_starts(&self.eval, &self.flat, self.stride, &[x], &self.params)?;
                if self.collides(&retry.point) {
                    return Err(Error::Solver(
                        "refined point collides with an existing point; the mesh is too coarse".into(),
                    ));
                }
                Ok(retry)
            }
        }
    }

    /// Adds one greedy point.
    pub fn step(&mut self) -> Result<()> {
        let step = self.points.len() + 1;
        let wrap = |e: Error| Error::Step {
            step,
            source: Box::new(e),
        };
        let best = self.search().map_err(wrap)?;
        if !best.value.is_finite() {
            return Err(wrap(Error::Solver(format!(
                "non-finite potential {} at the selected point",
                best.value
            ))));
        }
        let p = SpherePoint::normalized(best.point).map_err(wrap)?;
        self.step_values
            .push(self.scale * best.value + self.shift * self.points.len() as f64);
        self.push(p);
        Ok(())
    }

    /// Steps until `n` points exist, calling `progress` after each step.
    pub fn run_to<F: FnMut(&GreedyBuilder) -> Result<()>>(&mut self, n: usize, mut progress: F) -> Result<()> {
        while self.points.len() < n {
            self.step()?;
            progress(self)?;
        }
        Ok(())
    }

    pub fn configuration(&self) -> Configuration {
        Configuration {
            dim: self.kernel.dim,
            kernel: self.kernel,
            points: self.points.clone(),
            step_values: self.step_values.clone(),
            meta: self.meta.clone(),
        }
    }
}

/// Greedy sequence of `n` points started at `x1`.
pub fn build_sequence(
    d: usize,
    kernel: KernelSpec,
    n: usize,
    x1: SpherePoint,
    params: &SolverParams,
) -> Result<Configuration> {
    if n < 1 {
        return Err(Error::InvalidArgument("a sequence needs at least one point".into()));
    }
    if kernel.dim != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: kernel.dim,
        });
    }
    let mut b = GreedyBuilder::new(kernel, x1, params.clone())?;
    b.run_to(n, |_| Ok(()))?;
    Ok(b.configuration())
}

/// Continues a saved run by `extra` points; identical to a fresh run of the
/// combined length.
pub fn extend_sequence(checkpoint: &Configuration, extra: usize, params: &SolverParams) -> Result<Configuration> {
    let mut b = GreedyBuilder::resume(checkpoint, params)?;
    let target = checkpoint.len() + extra;
    b.run_to(target, |_| Ok(()))?;
    Ok(b.configuration())
}

/// As [`extend_sequence`], also requiring the checkpoint's kernel to match.
pub fn extend_sequence_with_kernel(
    checkpoint: &Configuration,
    kernel: &KernelSpec,
    extra: usize,
    params: &SolverParams,
) -> Result<Configuration> {
    if checkpoint.kernel != *kernel {
        return Err(Error::IncompatibleCheckpoint(format!(
            "checkpoint kernel {} differs from requested {}",
            checkpoint.kernel.label(),
            kernel.label()
        )));
    }
    extend_sequence(checkpoint, extra, params)
}

/// `Σ_{i≠j} K(x_i, x_j)`, counting each unordered pair twice.
pub fn energy(points: &[SpherePoint], kernel: &KernelSpec) -> Result<f64> {
    let eval = kernel.evaluator()?;
    for p in points {
        if p.dim() != kernel.dim {
            return Err(Error::DimensionMismatch {
                expected: kernel.dim,
                got: p.dim(),
            });
        }
    }
    // On the circle chords come from angle differences, which keeps the
    // sum accurate enough for the exact circle identities.
    let angles: Vec<f64> = if kernel.dim == 1 {
        points.iter().map(|p| optimize::angle_of(p.coords())).collect()
    } else {
        Vec::new()
    };
    let rows = par::map_range(points.len(), |i| {
        let mut acc = CompensatedSum::default();
        for (j, q) in points.iter().enumerate().skip(i + 1) {
            let r2 = if angles.is_empty() {
                dist_sq(points[i].coords(), q.coords())
            } else {
                chord_sq(angles[i], angles[j])
            };
            let v = eval.value_sq(r2);
            if !v.is_finite() {
                return v;
            }
            acc.add(v);
        }
        acc.value()
    });
    let mut acc = CompensatedSum::default();
    for r in rows {
        if !r.is_finite() {
            return Ok(r);
        }
        acc.add(r);
    }
    Ok(2.0 * acc.value())
}

/// `min_x Σ_j K(x, x_j)` by the mesh-and-refine solver.
pub fn polarization(points: &[SpherePoint], kernel: &KernelSpec, params: &SolverParams) -> Result<f64> {
    Ok(minimize_potential(points, kernel, params)?.value)
}
