//! JSON-lines checkpoints: one metadata record, then one record per point.
//!
//! Floats are written in shortest round-trip form so a resumed run sees
//! exactly the coordinates of the original.

use std::io::{BufRead, BufReader, Read};
#[cfg(feature = "fs")]
use std::io::Write;
#[cfg(feature = "fs")]
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::greedy::{ConfigMeta, Configuration};
use crate::kernels::KernelSpec;
use crate::optimize::SolverParams;
use crate::sphere::SpherePoint;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct MetaRecord {
    record: String,
    format: u32,
    dim: usize,
    kernel: KernelSpec,
    n: usize,
    seed: u64,
    params: SolverParams,
    initial_point: Vec<f64>,
    version: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRecord {
    index: usize,
    coords: Vec<f64>,
    step_value: Option<f64>,
}

/// Serializes a configuration to checkpoint text.
pub fn to_jsonl(config: &Configuration) -> Result<String> {
    config.validate()?;
    let meta = MetaRecord {
        record: "meta".into(),
        format: FORMAT_VERSION,
        dim: config.dim,
        kernel: config.kernel,
        n: config.len(),
        seed: config.meta.seed,
        params: config.meta.params.clone(),
        initial_point: config.meta.initial_point.clone(),
        version: config.meta.version.clone(),
    };
    let ser = |e: serde_json::Error| Error::Io(e.to_string());
    let mut out = serde_json::to_string(&meta).map_err(ser)?;
    out.push('\n');
    for (i, p) in config.points.iter().enumerate() {
        let rec = PointRecord {
            index: i,
            coords: p.coords().to_vec(),
            step_value: i.checked_sub(1).map(|k| config.step_values[k]),
        };
        out.push_str(&serde_json::to_string(&rec).map_err(ser)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parses checkpoint text.
pub fn from_jsonl<R: Read>(reader: R) -> Result<Configuration> {
    let corrupt = |m: String| Error::CorruptCheckpoint(m);
    let mut lines = BufReader::new(reader).lines();
    let first = loop {
        match lines.next() {
            None => return Err(corrupt("checkpoint is empty".into())),
            Some(l) => {
                let l = l?;
                if !l.trim().is_empty() {
                    break l;
                }
            }
        }
    };
    let meta: MetaRecord =
        serde_json::from_str(&first).map_err(|e| corrupt(format!("metadata record: {e}")))?;
    if meta.record != "meta" {
        return Err(corrupt("first record is not metadata".into()));
    }
    if meta.format != FORMAT_VERSION {
        return Err(corrupt(format!("unsupported format version {}", meta.format)));
    }
    let mut points = Vec::with_capacity(meta.n);
    let mut step_values = Vec::with_capacity(meta.n.saturating_sub(1));
    for (lineno, l) in lines.enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let rec: PointRecord = serde_json::from_str(&l)
            .map_err(|e| corrupt(format!("line {}: {e}", lineno + 2)))?;
        if rec.index != points.len() {
            return Err(corrupt(format!(
                "line {}: expected index {}, found {}",
                lineno + 2,
                points.len(),
                rec.index
            )));
        }
        let p = SpherePoint::new(rec.coords).map_err(|e| corrupt(format!("point {}: {e}", rec.index)))?;
        match (rec.index, rec.step_value) {
            (0, None) => {}
            (0, Some(_)) => return Err(corrupt("point 0 cannot carry a step value".into())),
            (_, Some(v)) => step_values.push(v),
            (i, None) => return Err(corrupt(format!("point {i} is missing its step value"))),
        }
        points.push(p);
    }
    if points.is_empty() {
        return Err(corrupt("checkpoint holds no points".into()));
    }
    if points.len() != meta.n {
        return Err(corrupt(format!(
            "metadata announces {} points, found {}",
            meta.n,
            points.len()
        )));
    }
    let config = Configuration {
        dim: meta.dim,
        kernel: meta.kernel,
        points,
        step_values,
        meta: ConfigMeta {
            seed: meta.seed,
            params: meta.params,
            initial_point: meta.initial_point,
            version: meta.version,
        },
    };
    config.validate().map_err(|e| corrupt(e.to_string()))?;
    Ok(config)
}

/// Writes atomically: a temporary file in the target directory is renamed
/// over `path` once complete.
#[cfg(feature = "fs")]
pub fn write_checkpoint(path: &Path, config: &Configuration) -> Result<()> {
    write_atomic(path, to_jsonl(config)?.as_bytes())
}

#[cfg(feature = "fs")]
pub fn read_checkpoint(path: &Path) -> Result<Configuration> {
    from_jsonl(std::fs::File::open(path)?)
}

/// Write-temp-then-rename.
#[cfg(feature = "fs")]
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}
