//! Run specifications merged from flags, a config file and defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use greedy_sphere::{KernelSpec, SolverParams, SpherePoint};
use serde::{Deserialize, Serialize};

/// Everything that determines a run. Flags win over the config file, which
/// wins over the defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct RunSpec {
    /// Intrinsic dimension d of S^d.
    #[arg(long)]
    pub dim: Option<usize>,
    /// riesz, log or green.
    #[arg(long)]
    pub kernel: Option<String>,
    /// Riesz exponent; 0 selects the log kernel.
    #[arg(long, allow_negative_numbers = true)]
    pub s: Option<f64>,
    /// Number of points.
    #[arg(long)]
    pub n: Option<usize>,
    /// Seed of the random candidate mesh.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Candidate mesh points on S^d (ignored on S^1).
    #[arg(long)]
    pub mesh_size: Option<usize>,
    /// Best mesh candidates refined per step.
    #[arg(long)]
    pub multistart: Option<usize>,
    /// First point as comma-separated coordinates; defaults to the north pole.
    #[arg(long, allow_negative_numbers = true)]
    pub x1: Option<String>,
    /// Report rows: dyadic, dyadic:LO:HI, all, all:LO:HI or a list.
    #[arg(long)]
    pub schedule: Option<String>,
    /// Checkpoint path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV report path; defaults to the checkpoint path with a .csv extension.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// JSON summary path; defaults to the checkpoint path with .summary.json.
    #[arg(long)]
    pub summary: Option<PathBuf>,
    /// Write the checkpoint every this many points (0: only at the end).
    #[arg(long)]
    pub checkpoint_every: Option<usize>,
}

macro_rules! merge_fields {
    ($hi:expr, $lo:expr, $($f:ident),*) => {
        RunSpec { $($f: $hi.$f.clone().or_else(|| $lo.$f.clone()),)* }
    };
}

impl RunSpec {
    /// Field-wise `self` over `other`.
    pub fn over(&self, other: &RunSpec) -> RunSpec {
        merge_fields!(
            self, other, dim, kernel, s, n, seed, mesh_size, multistart, x1, schedule, out, report, summary,
            checkpoint_every
        )
    }

    pub fn from_toml_file(path: &Path) -> Result<RunSpec> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fills every defaulted field.
    pub fn resolved(&self) -> RunSpec {
        let p = SolverParams::default();
        let out = self.out.clone().unwrap_or_else(|| PathBuf::from("run.jsonl"));
        RunSpec {
            dim: self.dim,
            kernel: self.kernel.clone(),
            s: self.s,
            n: self.n,
            seed: Some(self.seed.unwrap_or(p.seed)),
            mesh_size: Some(self.mesh_size.unwrap_or(p.mesh_size)),
            multistart: Some(self.multistart.unwrap_or(p.multistart)),
            x1: self.x1.clone(),
            schedule: Some(self.schedule.clone().unwrap_or_else(|| "dyadic".into())),
            report: Some(self.report.clone().unwrap_or_else(|| out.with_extension("csv"))),
            summary: Some(self.summary.clone().unwrap_or_else(|| out.with_extension("summary.json"))),
            out: Some(out),
            checkpoint_every: Some(self.checkpoint_every.unwrap_or(0)),
        }
    }

    pub fn params(&self) -> SolverParams {
        let d = SolverParams::default();
        SolverParams {
            mesh_size: self.mesh_size.unwrap_or(d.mesh_size),
            multistart: self.multistart.unwrap_or(d.multistart),
            seed: self.seed.unwrap_or(d.seed),
            ..d
        }
    }

    pub fn kernel_spec(&self) -> Result<KernelSpec> {
        let Some(d) = self.dim else { bail!("--dim is required") };
        let name = self.kernel.as_deref().unwrap_or("riesz");
        let k = match name {
            "log" => KernelSpec::log(d),
            "riesz" => match self.s {
                Some(s) => KernelSpec::riesz(s, d),
                None => bail!("--s is required for the riesz kernel"),
            },
            "green" => {
                if d == 2 {
                    bail!(greedy_sphere::Error::InvalidArgument(
                        "the Green function on S^2 is an affine image of the log kernel and yields the same sequence; use --kernel log".into()
                    ));
                }
                KernelSpec::green(d)
            }
            other => bail!("unknown kernel '{other}' (expected riesz, log or green)"),
        };
        if name != "riesz" && self.s.is_some() {
            bail!("--s only applies to the riesz kernel");
        }
        k.validate_for_runs()?;
        Ok(k)
    }

    pub fn initial_point(&self, d: usize) -> Result<SpherePoint> {
        match &self.x1 {
            None => Ok(SpherePoint::north_pole(d)),
            Some(text) => {
                let coords: Vec<f64> = text
                    .split(',')
                    .map(|t| t.trim().parse::<f64>())
                    .collect::<std::result::Result<_, _>>()
                    .with_context(|| format!("cannot parse --x1 '{text}'"))?;
                if coords.len() != d + 1 {
                    bail!("--x1 needs {} coordinates for S^{d}, got {}", d + 1, coords.len());
                }
                Ok(SpherePoint::normalized(coords)?)
            }
        }
    }
}
