//! Geometry of the unit sphere `S^d ⊂ R^(d+1)`: points, distances, caps,
//! candidate meshes and the equal-area partition of `S^2`.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::special::incomplete_beta_ratio;

/// Tolerance on the Euclidean norm of a [`SpherePoint`].
pub const NORM_TOL: f64 = 1e-12;

/// A unit vector in `R^(d+1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SpherePoint {
    coords: Vec<f64>,
}

impl SpherePoint {
    /// Wraps coordinates that are already unit length.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::InvalidArgument(
                "a sphere point needs at least two coordinates".into(),
            ));
        }
        let norm = norm(&coords);
        if !((norm - 1.0).abs() <= NORM_TOL) {
            return Err(Error::InvalidArgument(format!(
                "coordinates have norm {norm}, expected 1"
            )));
        }
        Ok(SpherePoint { coords })
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalized(mut coords: Vec<f64>) -> Result<Self> {
        let n = norm(&coords);
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::InvalidArgument("cannot normalize a zero vector".into()));
        }
        coords.iter_mut().for_each(|c| *c /= n);
        SpherePoint::new(coords)
    }

    /// `(0, …, 0, 1)` on `S^d`.
    pub fn north_pole(d: usize) -> Self {
        let mut coords = vec![0.0; d + 1];
        coords[d] = 1.0;
        SpherePoint { coords }
    }

    /// Point of `S^1` at the given angle.
    pub fn from_angle(theta: f64) -> Self {
        SpherePoint {
            coords: vec![theta.cos(), theta.sin()],
        }
    }

    /// Point of `S^2` from colatitude and longitude.
    pub fn from_spherical(theta: f64, phi: f64) -> Self {
        let st = theta.sin();
        SpherePoint {
            coords: vec![st * phi.cos(), st * phi.sin(), theta.cos()],
        }
    }

    pub fn antipode(&self) -> Self {
        SpherePoint {
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    /// Intrinsic dimension `d`.
    pub fn dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    /// Angle in `[0, 2π)` of a point on `S^1`.
    pub fn angle(&self) -> f64 {
        let a = self.coords[1].atan2(self.coords[0]);
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }

    pub fn dot(&self, other: &SpherePoint) -> f64 {
        dot(&self.coords, &other.coords)
    }

    pub fn distance(&self, other: &SpherePoint) -> f64 {
        dist_sq(&self.coords, &other.coords).sqrt()
    }
}

impl TryFrom<Vec<f64>> for SpherePoint {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        SpherePoint::new(v)
    }
}

impl From<SpherePoint> for Vec<f64> {
    fn from(p: SpherePoint) -> Self {
        p.coords
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Geodesic (great-circle) distance in `[0, π]`.
pub fn geodesic_distance(x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch {
            expected: x.dim(),
            got: y.dim(),
        });
    }
    Ok(x.dot(y).clamp(-1.0, 1.0).acos())
}

/// Minimum pairwise Euclidean distance.
pub fn separation(points: &[SpherePoint]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument(
            "separation needs at least two points".into(),
        ));
    }
    let mut best = f64::INFINITY;
    for (i, p) in points.iter().enumerate() {
        for q in &points[i + 1..] {
            best = best.min(dist_sq(p.coords(), q.coords()));
        }
    }
    Ok(best.sqrt())
}

/// Geodesic ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cap {
    pub center: SpherePoint,
    pub radius: f64,
}

impl Cap {
    pub fn new(center: SpherePoint, radius: f64) -> Result<Self> {
        check_cap_radius(radius)?;
        Ok(Cap { center, radius })
    }

    pub fn contains(&self, p: &SpherePoint) -> bool {
        p.dot(&self.center).clamp(-1.0, 1.0).acos() < self.radius
    }

    pub fn measure(&self) -> f64 {
        cap_measure(self.center.dim(), self.radius).expect("validated radius")
    }
}

fn check_cap_radius(a: f64) -> Result<()> {
    if !(a > 0.0 && a <= PI) {
        return Err(Error::InvalidArgument(format!(
            "cap radius must lie in (0, π], got {a}"
        )));
    }
    Ok(())
}

/// Normalized surface measure of a cap of geodesic radius `a` on `S^d`:
/// the regularized incomplete beta `I_{sin²(a/2)}(d/2, d/2)`.
pub fn cap_measure(d: usize, a: f64) -> Result<f64> {
    if d < 1 {
        return Err(Error::InvalidArgument("dimension must be at least 1".into()));
    }
    check_cap_radius(a)?;
    if a == PI {
        return Ok(1.0);
    }
    let half = 0.5 * d as f64;
    let x = (0.5 * a).sin().powi(2);
    incomplete_beta_ratio(x, half, half)
}

/// How candidate points for the global minimization are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeshStrategy {
    /// Spherical Fibonacci lattice, `S^2` only.
    FibonacciS2,
    /// Normalized Gaussian vectors from a seeded generator.
    RandomUniform,
}

impl MeshStrategy {
    /// Fibonacci on `S^2`, random elsewhere.
    pub fn default_for(d: usize) -> Self {
        if d == 2 {
            MeshStrategy::FibonacciS2
        } else {
            MeshStrategy::RandomUniform
        }
    }
}

/// Candidate points stored as one flat coordinate buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    dim: usize,
    coords: Vec<f64>,
}

impl Mesh {
    pub fn generate(d: usize, m: usize, strategy: MeshStrategy, seed: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidArgument("mesh needs at least one point".into()));
        }
        if d < 1 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        let stride = d + 1;
        let mut coords = Vec::with_capacity(m * stride);
        match strategy {
            MeshStrategy::FibonacciS2 => {
                if d != 2 {
                    return Err(Error::InvalidArgument(format!(
                        "Fibonacci mesh is defined on S^2 only, got d = {d}"
                    )));
                }
                if m == 1 {
                    coords.extend_from_slice(&[0.0, 0.0, 1.0]);
                } else {
                    let golden = 0.5 * (1.0 + 5f64.sqrt());
                    for i in 0..m {
                        let z = 1.0 - 2.0 * i as f64 / (m - 1) as f64;
                        let r = (1.0 - z * z).max(0.0).sqrt();
                        let phi = 2.0 * PI * (i as f64 / golden).fract();
                        coords.extend_from_slice(&[r * phi.cos(), r * phi.sin(), z]);
                    }
                }
            }
            MeshStrategy::RandomUniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut v = vec![0.0; stride];
                for _ in 0..m {
                    loop {
                        for c in v.iter_mut() {
                            *c = StandardNormal.sample(&mut rng);
                        }
                        let n = norm(&v);
                        if n > 1e-8 {
                            coords.extend(v.iter().map(|c| c / n));
                            break;
                        }
                    }
                }
            }
        }
        Ok(Mesh { dim: d, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / (self.dim + 1)
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let s = self.dim + 1;
        &self.coords[i * s..(i + 1) * s]
    }

    pub fn flat(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_points(&self) -> Vec<SpherePoint> {
        self.coords
            .chunks(self.dim + 1)
            .map(|c| SpherePoint { coords: c.to_vec() })
            .collect()
    }
}

/// Candidate mesh as a list of points.
pub fn candidate_mesh(
    d: usize,
    m: usize,
    strategy: MeshStrategy,
    seed: u64,
) -> Result<Vec<SpherePoint>> {
    Ok(Mesh::generate(d, m, strategy, seed)?.to_points())
}

/// One cell of the equal-area partition of `S^2`, in colatitude/longitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRegion {
    pub theta_lo: f64,
    pub theta_hi: f64,
    pub phi_lo: f64,
    pub phi_hi: f64,
    pub area: f64,
    #[serde(skip_serializing, default)]
    pub diameter_bound: f64,
}

impl PartitionRegion {
    fn new(theta_lo: f64, theta_hi: f64, phi_lo: f64, phi_hi: f64) -> Self {
        let area = 0.5 * (theta_lo.cos() - theta_hi.cos()) * (phi_hi - phi_lo) / (2.0 * PI);
        let mut r = PartitionRegion {
            theta_lo,
            theta_hi,
            phi_lo,
            phi_hi,
            area,
            diameter_bound: 0.0,
        };
        r.diameter_bound = r.diameter();
        r
    }

    /// Euclidean diameter. Extreme pairs sit on opposite meridian edges, so
    /// the search runs over pairs of colatitudes at the widest longitude gap.
    fn diameter(&self) -> f64 {
        let gap = (self.phi_hi - self.phi_lo).min(PI);
        let c = gap.cos();
        const K: usize = 24;
        let mut thetas: Vec<f64> = (0..=K)
            .map(|i| self.theta_lo + (self.theta_hi - self.theta_lo) * i as f64 / K as f64)
            .collect();
        let mid = 0.5 * PI;
        if mid > self.theta_lo && mid < self.theta_hi {
            thetas.push(mid);
        }
        let mut min_dot = 1.0f64;
        for &t1 in &thetas {
            let (s1, c1) = t1.sin_cos();
            for &t2 in &thetas {
                let (s2, c2) = t2.sin_cos();
                // same meridian or opposite meridians
                min_dot = min_dot.min(c1 * c2 + s1 * s2 * c).min((t1 - t2).cos());
            }
            let t3 = PI - t1;
            if t3 >= self.theta_lo && t3 <= self.theta_hi {
                let (s3, c3) = t3.sin_cos();
                min_dot = min_dot.min(c1 * c3 + s1 * s3 * c);
            }
        }
        (2.0 - 2.0 * min_dot).max(0.0).sqrt()
    }

    pub fn contains(&self, p: &SpherePoint) -> bool {
        let c = p.coords();
        let theta = c[2].clamp(-1.0, 1.0).acos();
        let mut phi = c[1].atan2(c[0]);
        if phi < 0.0 {
            phi += 2.0 * PI;
        }
        theta >= self.theta_lo && theta <= self.theta_hi && phi >= self.phi_lo && phi <= self.phi_hi
    }

    /// Uniform sample from the region.
    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> SpherePoint {
        let z_lo = self.theta_hi.cos();
        let z_hi = self.theta_lo.cos();
        let z: f64 = Uniform::new_inclusive(z_lo, z_hi).expect("band").sample(rng);
        let phi: f64 = Uniform::new_inclusive(self.phi_lo, self.phi_hi).expect("arc").sample(rng);
        let r = (1.0 - z * z).max(0.0).sqrt();
        SpherePoint::normalized(vec![r * phi.cos(), r * phi.sin(), z]).expect("unit")
    }
}

/// Colatitude of a polar cap holding the fraction `frac` of the sphere.
fn cap_colatitude(frac: f64) -> f64 {
    if frac >= 1.0 {
        PI
    } else {
        2.0 * frac.max(0.0).sqrt().asin()
    }
}

/// Equal-area partition of `S^2` into `n` regions: two polar caps and
/// latitudinal collars cut into equal longitude arcs.
pub fn equal_area_partition(n: usize) -> Result<Vec<PartitionRegion>> {
    if n < 1 {
        return Err(Error::InvalidArgument("partition needs N >= 1".into()));
    }
    if n == 1 {
        return Ok(vec![PartitionRegion::new(0.0, PI, 0.0, 2.0 * PI)]);
    }
    let nf = n as f64;
    let polar = cap_colatitude(1.0 / nf);
    let ideal_angle = (4.0 * PI / nf).sqrt();
    let n_collars = if n > 2 {
        (((PI - 2.0 * polar) / ideal_angle).round() as usize).max(1)
    } else {
        0
    };
    // Ideal (fractional) region counts per collar, then rounded with carry.
    let mut counts = Vec::with_capacity(n_collars);
    if n_collars > 0 {
        let fitting = (PI - 2.0 * polar) / n_collars as f64;
        let cap_area = |theta: f64| 0.5 * (1.0 - theta.cos());
        let mut carry = 0.0;
        for i in 0..n_collars {
            let lo = polar + i as f64 * fitting;
            let hi = polar + (i + 1) as f64 * fitting;
            let ideal = (cap_area(hi) - cap_area(lo)) * nf;
            let rounded = (ideal + carry).round().max(1.0);
            carry += ideal - rounded;
            counts.push(rounded as usize);
        }
    }
    let mut regions = Vec::with_capacity(n);
    regions.push(PartitionRegion::new(0.0, polar, 0.0, 2.0 * PI));
    let mut cumulative = 1usize;
    let mut theta_lo = polar;
    for &m in &counts {
        cumulative += m;
        let theta_hi = cap_colatitude(cumulative as f64 / nf);
        for j in 0..m {
            let phi_lo = 2.0 * PI * j as f64 / m as f64;
            let phi_hi = 2.0 * PI * (j + 1) as f64 / m as f64;
            regions.push(PartitionRegion::new(theta_lo, theta_hi, phi_lo, phi_hi));
        }
        theta_lo = theta_hi;
    }
    if cumulative + 1 != n {
        return Err(Error::InvalidArgument(format!(
            "collar rounding produced {} regions for N = {n}",
            cumulative + 1
        )));
    }
    regions.push(PartitionRegion::new(theta_lo, PI, 0.0, 2.0 * PI));
    Ok(regions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn geodesic_basic_cases() {
        let x = SpherePoint::new(vec![1.0, 0.0, 0.0]).unwrap();
        let y = SpherePoint::new(vec![0.0, 1.0, 0.0]).unwrap();
        assert_eq!(geodesic_distance(&x, &x).unwrap(), 0.0);
        assert!((geodesic_distance(&x, &x.antipode()).unwrap() - PI).abs() < 1e-15);
        assert!((geodesic_distance(&x, &y).unwrap() - PI / 2.0).abs() < 1e-15);
        let z = SpherePoint::from_angle(0.3);
        assert!(matches!(
            geodesic_distance(&x, &z),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_non_unit_coordinates() {
        assert!(SpherePoint::new(vec![1.0, 1.0]).is_err());
        assert!(SpherePoint::new(vec![1.0]).is_err());
        assert!(SpherePoint::normalized(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn separation_cases() {
        let pts = vec![SpherePoint::from_angle(0.0), SpherePoint::from_angle(PI)];
        assert!((separation(&pts).unwrap() - 2.0).abs() < 1e-15);
        for n in [3usize, 7, 64] {
            let pts: Vec<_> = (0..n)
                .map(|k| SpherePoint::from_angle(2.0 * PI * k as f64 / n as f64))
                .collect();
            assert!((separation(&pts).unwrap() - 2.0 * (PI / n as f64).sin()).abs() < 1e-14);
        }
        let p = SpherePoint::north_pole(2);
        assert_eq!(separation(&[p.clone(), p]).unwrap(), 0.0);
        assert!(separation(&[SpherePoint::north_pole(3)]).is_err());
    }

    #[test]
    fn cap_measure_cases() {
        assert!((cap_measure(2, PI).unwrap() - 1.0).abs() < 1e-15);
        assert!((cap_measure(2, PI / 2.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((cap_measure(3, PI / 2.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((cap_measure(1, 1.0).unwrap() - 1.0 / PI).abs() < 1e-14);
        for &a in &[0.01, 0.5, 2.0, 3.0] {
            let v = cap_measure(2, a).unwrap();
            assert!((v - 0.5 * (1.0 - a.cos())).abs() < 1e-14);
        }
        assert!(cap_measure(2, 0.0).is_err());
        assert!(cap_measure(2, 4.0).is_err());
    }

    #[test]
    fn fibonacci_mesh() {
        let one = candidate_mesh(2, 1, MeshStrategy::FibonacciS2, 0).unwrap();
        assert_eq!(one[0], SpherePoint::north_pole(2));
        let many = candidate_mesh(2, 500, MeshStrategy::FibonacciS2, 0).unwrap();
        assert_eq!(many.len(), 500);
        assert!(candidate_mesh(3, 10, MeshStrategy::FibonacciS2, 0).is_err());
    }

    #[test]
    fn random_mesh_is_reproducible_and_centered() {
        let a = Mesh::generate(3, 100, MeshStrategy::RandomUniform, 42).unwrap();
        let b = Mesh::generate(3, 100, MeshStrategy::RandomUniform, 42).unwrap();
        assert_eq!(a, b);
        let m = 100_000;
        let big = Mesh::generate(2, m, MeshStrategy::RandomUniform, 7).unwrap();
        let mut mean = [0.0; 3];
        for i in 0..m {
            for (k, c) in big.point(i).iter().enumerate() {
                mean[k] += c / m as f64;
            }
        }
        assert!(norm(&mean) <= 0.02);
    }

    #[test]
    fn partition_small_cases() {
        let one = equal_area_partition(1).unwrap();
        assert_eq!(one.len(), 1);
        assert!((one[0].area - 1.0).abs() < 1e-15);
        let two = equal_area_partition(2).unwrap();
        assert_eq!(two.len(), 2);
        for r in &two {
            assert!((r.area - 0.5).abs() < 1e-15);
        }
        assert!((two[0].theta_hi - PI / 2.0).abs() < 1e-15);
        assert!(equal_area_partition(0).is_err());
    }

    #[test]
    fn partition_400_diameters() {
        let regions = equal_area_partition(400).unwrap();
        let max = regions.iter().map(|r| r.diameter_bound).fold(0.0, f64::max);
        assert!(max <= 7.0 / 20.0, "max diameter {max}");
    }

    #[test]
    fn partition_diameter_dominates_sampled_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for r in equal_area_partition(37).unwrap() {
            for _ in 0..200 {
                let p = r.sample(&mut rng);
                let q = r.sample(&mut rng);
                assert!(r.contains(&p));
                assert!(p.distance(&q) <= r.diameter_bound + 1e-9);
            }
        }
        let _: f64 = rng.random();
    }

    #[test]
    fn partition_json_schema() {
        let regions = equal_area_partition(4).unwrap();
        let v = serde_json::to_value(&regions).unwrap();
        let obj = v[0].as_object().unwrap();
        let mut keys: Vec<_> = obj.keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["area", "phi_hi", "phi_lo", "theta_hi", "theta_lo"]);
    }
}
