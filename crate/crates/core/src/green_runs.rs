//! Green-energy experiments on `S^d`, `d ≥ 3`, and the equal-area
//! partition construction of low-energy configurations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analysis::{green_d_of_n, Schedule};
use crate::error::{Error, Result};
use crate::greedy::{build_sequence, energy, Configuration};
use crate::kernels::{wiener_constant, KernelSpec};
use crate::optimize::SolverParams;
use crate::sphere::{equal_area_partition, SpherePoint};

/// A Green greedy run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenRunConfig {
    pub d: usize,
    pub n: usize,
    pub params: SolverParams,
    /// Defaults to the north pole.
    #[serde(default)]
    pub x1: Option<SpherePoint>,
}

impl GreenRunConfig {
    pub fn new(d: usize, n: usize, params: SolverParams) -> Self {
        GreenRunConfig { d, n, params, x1: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 3 {
            return Err(Error::InvalidArgument(format!(
                "Green runs need d >= 3; on S^2 the Green function is an affine image of the log kernel, use the log kernel (got d = {})",
                self.d
            )));
        }
        self.params.validate()
    }

    pub fn run(&self) -> Result<Configuration> {
        self.validate()?;
        let x1 = self.x1.clone().unwrap_or_else(|| SpherePoint::north_pole(self.d));
        build_sequence(self.d, KernelSpec::green(self.d), self.n, x1, &self.params)
    }
}

/// Greedy Green sequence of `n` points on `S^d` from the north pole.
pub fn greedy_green(d: usize, n: usize, params: &SolverParams) -> Result<Configuration> {
    GreenRunConfig::new(d, n, params.clone()).run()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenMarginRow {
    #[serde(rename = "N")]
    pub n: usize,
    pub polarization: f64,
    pub d_of_n: f64,
    /// `P_G(ω_N) / N^{1-2/d}`.
    pub scaled_polarization: f64,
}

/// Scaled polarization `P_G(ω_N)/N^{1-2/d}` next to `D(N)` for the
/// scheduled `N` whose polarization the run records.
pub fn green_polarization_margin(seq: &Configuration, schedule: &Schedule) -> Result<Vec<GreenMarginRow>> {
    let d_rows = green_d_of_n(seq, schedule)?;
    let expo = 1.0 - 2.0 / seq.dim as f64;
    Ok(d_rows
        .into_iter()
        .filter_map(|(n, dn)| {
            let p = *seq.step_values.get(n - 1)?;
            Some(GreenMarginRow {
                n,
                polarization: p,
                d_of_n: dn,
                scaled_polarization: p / (n as f64).powf(expo),
            })
        })
        .collect())
}

/// One point drawn uniformly from each region of the equal-area partition
/// of `S^2`, with its log energy against the mean-field value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionSample {
    pub n: usize,
    pub seed: u64,
    pub points: Vec<SpherePoint>,
    pub energy: f64,
    /// `N² I_{0,2}`.
    pub mean_field: f64,
    /// `(N² I_{0,2} - E_0) / (N log N)`; absent for `N = 1`.
    pub bound_ratio: Option<f64>,
}

/// Partition-based configuration on `S^2` with the log kernel.
pub fn partition_upper_bound_config(n: usize, seed: u64) -> Result<PartitionSample> {
    let regions = equal_area_partition(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<SpherePoint> = regions.iter().map(|r| r.sample(&mut rng)).collect();
    let kernel = KernelSpec::log(2);
    let e = energy(&points, &kernel)?;
    let i = wiener_constant(0.0, 2)?.value;
    let nf = n as f64;
    let mean_field = nf * nf * i;
    Ok(PartitionSample {
        n,
        seed,
        points,
        energy: e,
        mean_field,
        bound_ratio: (n >= 2).then(|| (mean_field - e) / (nf * nf.ln())),
    })
}
