mod output;
mod spec;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use greedy_sphere::analysis::{asymptotics, summarize, to_csv, Schedule, Summary};
use greedy_sphere::checkpoint::{read_checkpoint, write_atomic, write_checkpoint};
use greedy_sphere::circle::{verify_circle_sequence, CircleVerdict};
use greedy_sphere::green_runs::{partition_upper_bound_config, PartitionSample};
use greedy_sphere::greedy::{GreedyBuilder, SOFTWARE_VERSION};
use greedy_sphere::kernels::{k_of_a, wiener_constant, GreenSeries, WienerConstant};
use greedy_sphere::sphere::{equal_area_partition, PartitionRegion};
use greedy_sphere::verify::{embedded_baseline, run_suite, Baseline, Suite};
use greedy_sphere::{Configuration, KernelKind};
use serde::Serialize;
use spec::RunSpec;

#[derive(Parser)]
#[command(name = "greedy-sphere", version, about = "Greedy energy sequences on spheres")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat TOML file of run options; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a greedy sequence, writing a checkpoint, CSV report and summary.
    Generate(RunSpec),
    /// Continue a checkpointed run.
    Extend {
        /// Checkpoint to extend.
        checkpoint: PathBuf,
        /// Points to add.
        #[arg(long)]
        extra: usize,
        #[command(flatten)]
        spec: RunSpec,
    },
    /// Report rows and summary of a checkpoint.
    Analyze {
        checkpoint: PathBuf,
        /// Report rows, as for generate (default: dyadic).
        #[arg(long)]
        schedule: Option<String>,
        /// CSV output; stdout when absent.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// JSON summary output; stdout when absent and --csv is given.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run an acceptance suite: circle, kernels, green, separation, log or all.
    Verify {
        suite: String,
        /// Baseline file to compare against instead of the built-in one.
        #[arg(long)]
        baseline: Option<PathBuf>,
        /// Measure without comparing and write the measurements as a baseline.
        #[arg(long)]
        record_baseline: Option<PathBuf>,
        /// Write the full report as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Equal-area partition of S^2 and a log-energy sample drawn from it.
    Partition {
        /// Number of regions.
        #[arg(long)]
        n: usize,
        /// Seed of the per-region samples.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// JSON output; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wiener constants and Green tables K(a), g(t).
    Constants {
        /// Intrinsic dimension d of S^d.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// Comma-separated Riesz exponents (0 is the log kernel).
        #[arg(long, default_value = "-1,-0.5,0,0.5,1", allow_hyphen_values = true)]
        s: String,
        /// Rows of the K(a) and g(t) tables.
        #[arg(long, default_value_t = 8)]
        rows: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = anyhow::Error::msg(e.to_string().trim().to_string());
            eprintln!("{}", output::error_json(&err));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", output::error_json(&e));
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let file = match &cli.config {
        Some(p) => RunSpec::from_toml_file(p)?,
        None => RunSpec::default(),
    };
    match cli.command {
        Command::Generate(flags) => generate(flags.over(&file).resolved()),
        Command::Extend { checkpoint, extra, spec } => extend(&checkpoint, extra, spec.over(&file)),
        Command::Analyze {
            checkpoint,
            schedule,
            csv,
            summary,
        } => {
            let schedule = schedule.or(file.schedule).unwrap_or_else(|| "dyadic".into());
            analyze(&checkpoint, &schedule, csv.as_deref(), summary.as_deref())
        }
        Command::Verify {
            suite,
            baseline,
            record_baseline,
            json,
        } => verify(&suite, baseline.as_deref(), record_baseline.as_deref(), json.as_deref()),
        Command::Partition { n, seed, out } => partition(n, seed, out.as_deref()),
        Command::Constants { dim, s, rows } => constants(dim, &s, rows),
    }
}

/// Summary JSON: the analysis plus the spec that reproduces the run.
#[derive(Serialize)]
struct RunReport {
    spec: RunSpec,
    version: &'static str,
    summary: Summary,
    #[serde(skip_serializing_if = "Option::is_none")]
    circle_verdict: Option<CircleVerdict>,
}

/// The spec that reproduces a checkpoint.
fn spec_of(seq: &Configuration) -> RunSpec {
    let (kernel, s) = match seq.kernel.kind {
        KernelKind::Riesz { s } => ("riesz", Some(s)),
        KernelKind::Log => ("log", None),
        KernelKind::Green => ("green", None),
    };
    let p = &seq.meta.params;
    RunSpec {
        dim: Some(seq.dim),
        kernel: Some(kernel.into()),
        s,
        n: Some(seq.len()),
        seed: Some(p.seed),
        mesh_size: Some(p.mesh_size),
        multistart: Some(p.multistart),
        x1: Some(
            seq.meta
                .initial_point
                .iter()
                .map(|c| format!("{c:?}"))
                .collect::<Vec<_>>()
                .join(","),
        ),
        ..RunSpec::default()
    }
}

/// Bracket verdict for circle runs with `-2 < s < 1`.
fn circle_verdict(seq: &Configuration) -> Result<Option<CircleVerdict>> {
    match seq.kernel.exponent() {
        Some(s) if seq.dim == 1 && s > -2.0 && s < 1.0 && seq.len() >= 2 => {
            Ok(Some(verify_circle_sequence(seq, seq.len() - 1)?))
        }
        _ => Ok(None),
    }
}

fn report(seq: &Configuration, spec: &RunSpec, schedule: &str) -> Result<(String, RunReport)> {
    let schedule: Schedule = schedule.parse()?;
    let rows = asymptotics(seq, &schedule)?;
    let summary = summarize(seq, &rows)?;
    Ok((
        to_csv(&rows),
        RunReport {
            spec: spec.clone(),
            version: SOFTWARE_VERSION,
            summary,
            circle_verdict: circle_verdict(seq)?,
        },
    ))
}

fn write_outputs(seq: &Configuration, spec: &RunSpec) -> Result<()> {
    let out = spec.out.as_ref().expect("resolved");
    write_checkpoint(out, seq).with_context(|| format!("writing {}", out.display()))?;
    let (csv, rep) = report(seq, spec, spec.schedule.as_deref().unwrap_or("dyadic"))?;
    let csv_path = spec.report.as_ref().expect("resolved");
    write_atomic(csv_path, csv.as_bytes())?;
    let sum_path = spec.summary.as_ref().expect("resolved");
    output::write_json(sum_path, &rep)?;
    println!(
        "{}",
        serde_json::json!({
            "checkpoint": out,
            "report": csv_path,
            "summary": sum_path,
            "n": seq.len(),
        })
    );
    Ok(())
}

/// Steps `b` to `n` points, writing interim checkpoints when asked.
fn drive(b: &mut GreedyBuilder, n: usize, spec: &RunSpec) -> Result<()> {
    let every = spec.checkpoint_every.unwrap_or(0);
    let out = spec.out.clone().expect("resolved");
    b.run_to(n, |b| {
        if every > 0 && b.len() % every == 0 && b.len() < n {
            write_checkpoint(&out, &b.configuration())?;
        }
        Ok(())
    })?;
    Ok(())
}

fn generate(spec: RunSpec) -> Result<ExitCode> {
    let kernel = spec.kernel_spec()?;
    let Some(n) = spec.n else { bail!("--n is required") };
    if n < 1 {
        bail!("--n must be at least 1");
    }
    let params = spec.params();
    if let Some(w) = params.mesh_warning(n) {
        eprintln!("warning: {w}");
    }
    let x1 = spec.initial_point(kernel.dim)?;
    let mut b = GreedyBuilder::new(kernel, x1, params)?;
    drive(&mut b, n, &spec)?;
    write_outputs(&b.configuration(), &spec)?;
    Ok(ExitCode::SUCCESS)
}

fn extend(path: &Path, extra: usize, flags: RunSpec) -> Result<ExitCode> {
    let seq = read_checkpoint(path).with_context(|| format!("reading {}", path.display()))?;
    let recorded = spec_of(&seq);
    // Solver settings come from the checkpoint; only output options apply.
    for (name, set) in [
        ("dim", flags.dim.is_some()),
        ("kernel", flags.kernel.is_some()),
        ("s", flags.s.is_some()),
        ("seed", flags.seed.is_some()),
        ("mesh-size", flags.mesh_size.is_some()),
        ("multistart", flags.multistart.is_some()),
        ("x1", flags.x1.is_some()),
        ("n", flags.n.is_some()),
    ] {
        if set {
            bail!(greedy_sphere::Error::IncompatibleCheckpoint(format!(
                "--{name} is fixed by the checkpoint and cannot be changed when extending"
            )));
        }
    }
    let spec = RunSpec {
        out: Some(flags.out.clone().unwrap_or_else(|| path.to_path_buf())),
        ..flags
    }
    .over(&recorded)
    .resolved();
    let mut b = GreedyBuilder::resume(&seq, &seq.meta.params)?;
    drive(&mut b, seq.len() + extra, &spec)?;
    let cfg = b.configuration();
    let spec = RunSpec { n: Some(cfg.len()), ..spec };
    write_outputs(&cfg, &spec)?;
    Ok(ExitCode::SUCCESS)
}

fn analyze(path: &Path, schedule: &str, csv: Option<&Path>, summary: Option<&Path>) -> Result<ExitCode> {
    let seq = read_checkpoint(path).with_context(|| format!("reading {}", path.display()))?;
    let spec = RunSpec {
        schedule: Some(schedule.into()),
        ..spec_of(&seq)
    };
    let (text, rep) = report(&seq, &spec, schedule)?;
    match csv {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    match (summary, csv) {
        (Some(p), _) => output::write_json(p, &rep)?,
        (None, Some(_)) => print!("{}", output::to_json(&rep)?),
        (None, None) => {}
    }
    Ok(ExitCode::SUCCESS)
}

fn verify(name: &str, baseline: Option<&Path>, record: Option<&Path>, json: Option<&Path>) -> Result<ExitCode> {
    let suites: Vec<Suite> = if name == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![name.parse()?]
    };
    if record.is_some() && suites.len() != 1 {
        bail!("--record-baseline needs a single suite");
    }
    if baseline.is_some() && record.is_some() {
        bail!("--baseline and --record-baseline are exclusive");
    }
    let custom = match baseline {
        Some(p) => Some(Baseline::from_json(
            &std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?),
        None => None,
    };
    let mut ok = true;
    let mut reports = Vec::new();
    for suite in suites {
        let pinned = match (&custom, record) {
            (_, Some(_)) => None,
            (Some(b), None) => Some(b.clone()),
            (None, None) => embedded_baseline(suite),
        };
        let rep = run_suite(suite, pinned.as_ref())?;
        for c in &rep.checks {
            let at = match (c.n, c.margin) {
                (Some(n), Some(m)) => format!(" [N = {n}, margin {m:.3e}]"),
                _ => String::new(),
            };
            println!("{c}{at}");
        }
        let failed = rep.failures().count();
        println!(
            "{} {}: {} checks, {} failed, {:.1} s",
            if rep.passed() { "PASS" } else { "FAIL" },
            suite,
            rep.checks.len(),
            failed,
            rep.seconds
        );
        ok &= rep.passed();
        if let Some(p) = record {
            write_atomic(p, rep.baseline().to_json().as_bytes())?;
            println!("baseline written to {}", p.display());
        }
        reports.push(rep);
    }
    if let Some(p) = json {
        output::write_json(p, &reports)?;
    }
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

#[derive(Serialize)]
struct PartitionReport {
    n: usize,
    regions: Vec<PartitionRegion>,
    sample: PartitionSample,
}

fn partition(n: usize, seed: u64, out: Option<&Path>) -> Result<ExitCode> {
    let rep = PartitionReport {
        n,
        regions: equal_area_partition(n)?,
        sample: partition_upper_bound_config(n, seed)?,
    };
    match out {
        Some(p) => output::write_json(p, &rep)?,
        None => print!("{}", output::to_json(&rep)?),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct GreenTables {
    /// Rows `[a, K(a)]`.
    k_of_a: Vec<[f64; 2]>,
    /// Rows `[t, g(t)]` with `t` the chord length.
    g_of_t: Vec<[f64; 2]>,
}

#[derive(Serialize)]
struct ConstantsReport {
    dim: usize,
    wiener: Vec<WienerConstant>,
    #[serde(skip_serializing_if = "Option::is_none")]
    green: Option<GreenTables>,
}

fn constants(dim: usize, s_list: &str, rows: usize) -> Result<ExitCode> {
    let mut wiener = Vec::new();
    for t in s_list.split(',') {
        let s: f64 = t.trim().parse().with_context(|| format!("cannot parse exponent '{t}'"))?;
        wiener.push(wiener_constant(s, dim)?);
    }
    let green = if dim >= 2 && rows > 0 {
        let g = GreenSeries::new(dim)?;
        let pi = std::f64::consts::PI;
        let k_rows = (1..=rows)
            .map(|i| {
                let a = pi * i as f64 / rows as f64;
                Ok([a, k_of_a(dim, a)?])
            })
            .collect::<Result<Vec<_>>>()?;
        let g_rows = (1..=rows)
            .map(|i| {
                let t = 2.0 * i as f64 / rows as f64;
                Ok([t, g.value_sq(t * t)?])
            })
            .collect::<Result<Vec<_>>>()?;
        Some(GreenTables {
            k_of_a: k_rows,
            g_of_t: g_rows,
        })
    } else {
        None
    };
    print!("{}", output::to_json(&ConstantsReport { dim, wiener, green })?);
    Ok(ExitCode::SUCCESS)
}
