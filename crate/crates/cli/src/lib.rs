//! Command-line benchmark harness for the penetration-depth pipeline.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime error. Diagnostics are a
//! single line on stderr.

pub mod report;
pub mod runner;

use std::ffi::OsString;
use std::fs::File;
use std::io::Write;

use anyhow::{bail, Result};
use clap::Parser;
use nalgebra::Vector3;

use rtpd_core::hdist::{HdistConfig, SamplingStrategy};
use rtpd_core::mesh::Axis;

use report::{emit_report, ReportFormat, Row};
use runner::{Placement, RunOptions, SceneSpec, SweepSpec, SweepVariable};

#[derive(Debug, Parser)]
#[command(
    name = "rtpd",
    about = "Penetration depth between closed triangle meshes via ray-cast \
             point classification and sampled Hausdorff distance",
    disable_help_subcommand = true
)]
struct Cli {
    /// First object (OBJ or ASCII PLY).
    #[arg(long, value_name = "PATH")]
    mesh_a: String,

    /// Second object; defaults to MESH_A (two copies of one object).
    #[arg(long, value_name = "PATH")]
    mesh_b: Option<String>,

    /// Fraction of A's AABB extent shared with B along --axis, in (0, 1].
    #[arg(long, value_name = "R", conflicts_with = "raw_translate")]
    overlap: Option<f64>,

    /// Placement axis for --overlap.
    #[arg(long, default_value = "x")]
    axis: Axis,

    /// Rigid translation of B instead of --overlap.
    #[arg(long, value_name = "D", num_args = 3, allow_negative_numbers = true)]
    raw_translate: Option<Vec<f64>>,

    /// Ray sampling strategy.
    #[arg(long, default_value = "vertex", value_parser = ["vertex", "sphere", "aabb"])]
    strategy: String,

    /// Vertex sampling rate in (0, 1] (vertex strategy).
    #[arg(long, value_name = "R")]
    rate: Option<f64>,

    /// Rays per source point (sphere and aabb strategies).
    #[arg(long, value_name = "N")]
    count: Option<usize>,

    /// Sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Ray-length adaptation culling.
    #[arg(long, default_value = "on", value_parser = ["on", "off"])]
    culling: String,

    /// Filter sampled vertices by each point's PIP hit distance and cap the
    /// initial ray length with it.
    #[arg(long, default_value = "on", value_parser = ["on", "off"])]
    dpip: String,

    /// Compute the brute-force ground truth and the error rate.
    #[arg(long)]
    oracle: bool,

    /// Sweep the vertex sampling rate over a comma-separated list.
    #[arg(long, value_name = "LIST", value_delimiter = ',', conflicts_with = "sweep_overlap")]
    sweep_rate: Option<Vec<f64>>,

    /// Sweep the overlap ratio over a comma-separated list.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    sweep_overlap: Option<Vec<f64>>,

    /// Seeds for sweep trials (comma-separated); defaults to --seed.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    seeds: Option<Vec<u64>>,

    /// Report format.
    #[arg(long, default_value = "json", value_parser = ["json", "csv"])]
    format: String,

    /// Report destination; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    out: Option<String>,

    /// Include traversal statistics in the report.
    #[arg(long)]
    stats: bool,

    /// Omit wall-clock timings (for byte-stable output).
    #[arg(long)]
    no_timing: bool,

    /// Worker threads (0 = all cores). Ignored in builds without the
    /// parallel feature.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

struct Invocation {
    scene: SceneSpec,
    config: HdistConfig,
    options: RunOptions,
    sweep: Option<SweepSpec>,
    format: ReportFormat,
    out: Option<String>,
    threads: usize,
}

fn build_invocation(cli: Cli) -> Result<Invocation> {
    let placement = match (cli.overlap, &cli.raw_translate) {
        (Some(ratio), None) => {
            if !(ratio > 0.0 && ratio <= 1.0) {
                bail!("--overlap {ratio} is outside (0, 1]");
            }
            Placement::Overlap {
                ratio,
                axis: cli.axis,
            }
        }
        (None, Some(d)) => Placement::Translate(Vector3::new(d[0], d[1], d[2])),
        (None, None) => {
            if cli.sweep_overlap.is_some() {
                // the sweep provides the ratios
                Placement::Overlap {
                    ratio: 1.0,
                    axis: cli.axis,
                }
            } else {
                bail!("scene placement required: pass --overlap R or --raw-translate DX DY DZ");
            }
        }
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    };

    let strategy = match cli.strategy.as_str() {
        "vertex" => {
            if cli.count.is_some() {
                bail!("--count applies to the sphere and aabb strategies; use --rate");
            }
            let rate = cli.rate.unwrap_or(0.01);
            if !(rate > 0.0 && rate <= 1.0) {
                bail!("--rate {rate} is outside (0, 1]");
            }
            SamplingStrategy::VertexUniform {
                rate,
                seed: cli.seed,
            }
        }
        name => {
            if cli.rate.is_some() {
                bail!("--rate applies to the vertex strategy; use --count");
            }
            let Some(count) = cli.count else {
                bail!("--strategy {name} needs --count N");
            };
            if count == 0 {
                bail!("--count must be at least 1");
            }
            if name == "sphere" {
                SamplingStrategy::Sphere {
                    count,
                    seed: cli.seed,
                }
            } else {
                SamplingStrategy::AabbBox {
                    count,
                    seed: cli.seed,
                }
            }
        }
    };

    let sweep = match (&cli.sweep_rate, &cli.sweep_overlap) {
        (Some(values), None) => Some(SweepSpec {
            variable: SweepVariable::Rate,
            values: values.clone(),
            seeds: cli.seeds.clone().unwrap_or_else(|| vec![cli.seed]),
        }),
        (None, Some(values)) => Some(SweepSpec {
            variable: SweepVariable::OverlapRatio,
            values: values.clone(),
            seeds: cli.seeds.clone().unwrap_or_else(|| vec![cli.seed]),
        }),
        (None, None) => {
            if cli.seeds.is_some() {
                bail!("--seeds applies to sweeps; use --seed for single runs");
            }
            None
        }
        (Some(_), Some(_)) => unreachable!("clap conflict"),
    };
    if let Some(s) = &sweep {
        if s.values.is_empty() {
            bail!("sweep value list is empty");
        }
        for &v in &s.values {
            let ok = match s.variable {
                SweepVariable::Rate => v > 0.0 && v <= 1.0,
                SweepVariable::OverlapRatio => v > 0.0 && v <= 1.0,
            };
            if !ok {
                bail!("sweep value {v} is outside (0, 1]");
            }
        }
    }

    let mesh_a = cli.mesh_a;
    let mesh_b = cli.mesh_b.unwrap_or_else(|| mesh_a.clone());
    Ok(Invocation {
        scene: SceneSpec {
            path_a: mesh_a,
            path_b: mesh_b,
            placement,
        },
        config: HdistConfig {
            strategy,
            culling: cli.culling == "on",
            dpip_filter: cli.dpip == "on",
        },
        options: RunOptions {
            with_oracle: cli.oracle,
            with_timing: !cli.no_timing,
            with_stats: cli.stats,
        },
        sweep,
        format: if cli.format == "json" {
            ReportFormat::Json
        } else {
            ReportFormat::Csv
        },
        out: cli.out,
        threads: cli.threads,
    })
}

#[cfg(feature = "parallel")]
fn configure_threads(threads: usize) {
    if threads > 0 {
        // ignore the error from configuring twice (tests call run() repeatedly)
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_threads: usize) {}

fn execute(invocation: &Invocation) -> Result<Vec<Row>> {
    configure_threads(invocation.threads);
    match &invocation.sweep {
        Some(sweep) => runner::run_sweep(
            &invocation.scene,
            &invocation.config,
            sweep,
            &invocation.options,
        ),
        None => runner::run_scene(&invocation.scene, &invocation.config, &invocation.options),
    }
}

fn write_rows(rows: &[Row], format: ReportFormat, out: Option<&str>) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = File::create(path)?;
            emit_report(rows, format, &mut file)?;
            file.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            emit_report(rows, format, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn first_line(text: &str) -> String {
    text.lines().next().unwrap_or("error").to_string()
}

/// Parses arguments, runs, writes the report. Returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // --help / --version are not errors
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", first_line(&e.to_string()));
            return 1;
        }
    };
    let invocation = match build_invocation(cli) {
        Ok(inv) => inv,
        Err(e) => {
            eprintln!("error: {}", first_line(&e.to_string()));
            return 1;
        }
    };
    let rows = match execute(&invocation) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("error: {}", first_line(&e.to_string()));
            return 2;
        }
    };
    if let Err(e) = write_rows(&rows, invocation.format, invocation.out.as_deref()) {
        eprintln!("error: {}", first_line(&e.to_string()));
        return 2;
    }
    0
}
