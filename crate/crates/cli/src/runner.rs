//! Scene loading, single runs, and sweep orchestration.

use anyhow::{bail, Context, Result};
use nalgebra::{Point3, Vector3};

use rtpd_core::hdist::{
    penetration_depth_timed, HdistConfig, RunStatus, SamplingStrategy, StageTimings,
};
use rtpd_core::mesh::{self, Axis, TriangleMesh};
use rtpd_core::oracle;

use crate::report::{
    AggregateRow, ConfigEcho, J17, Row, RunReport, SceneDesc, StatsEcho, TimingMs,
};

/// How object B is positioned relative to A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Placement {
    /// Share `ratio` of A's AABB extent along `axis`.
    Overlap { ratio: f64, axis: Axis },
    /// Translate B rigidly by the given offset.
    Translate(Vector3<f64>),
}

#[derive(Debug, Clone)]
pub struct SceneSpec {
    pub path_a: String,
    pub path_b: String,
    pub placement: Placement,
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub with_oracle: bool,
    pub with_timing: bool,
    pub with_stats: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    Rate,
    OverlapRatio,
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub values: Vec<f64>,
    pub seeds: Vec<u64>,
}

/// A loaded, placed scene.
pub struct PlacedScene {
    pub mesh_a: TriangleMesh,
    pub mesh_b: TriangleMesh,
    pub desc: SceneDesc,
}

fn place(
    mesh_a: &TriangleMesh,
    mesh_b_raw: &TriangleMesh,
    same_file: bool,
    placement: Placement,
) -> Result<(TriangleMesh, TriangleMesh)> {
    match placement {
        Placement::Overlap { ratio, axis } if same_file => {
            Ok(mesh::make_overlap_scene(mesh_a, ratio, axis)?)
        }
        Placement::Overlap { ratio, axis } => {
            // different shapes: align B's near face so the AABB overlap
            // along the axis equals ratio * extent(A)
            if !(ratio > 0.0 && ratio <= 1.0) {
                bail!("overlap ratio {ratio} is outside (0, 1]");
            }
            let i = axis.index();
            let (ba, bb) = (mesh_a.aabb(), mesh_b_raw.aabb());
            let extent = ba.max[i] - ba.min[i];
            if extent <= 0.0 {
                bail!("mesh has zero extent along axis {axis}");
            }
            let shift = (ba.max[i] - ratio * extent) - bb.min[i];
            Ok((
                mesh_a.clone(),
                mesh_b_raw.translated(axis.unit() * shift),
            ))
        }
        Placement::Translate(offset) => Ok((mesh_a.clone(), mesh_b_raw.translated(offset))),
    }
}

pub fn load_scene(spec: &SceneSpec) -> Result<PlacedScene> {
    let mesh_a = mesh::load_mesh(&spec.path_a)
        .with_context(|| format!("loading {}", spec.path_a))?;
    let same_file = spec.path_a == spec.path_b;
    let mesh_b_raw = if same_file {
        mesh_a.clone()
    } else {
        mesh::load_mesh(&spec.path_b).with_context(|| format!("loading {}", spec.path_b))?
    };
    let (mesh_a, mesh_b) = place(&mesh_a, &mesh_b_raw, same_file, spec.placement)?;

    let (overlap_ratio, axis, translate) = match spec.placement {
        Placement::Overlap { ratio, axis } => (Some(J17(ratio)), Some(axis.to_string()), None),
        Placement::Translate(v) => (None, None, Some([J17(v.x), J17(v.y), J17(v.z)])),
    };
    Ok(PlacedScene {
        mesh_a,
        mesh_b,
        desc: SceneDesc {
            mesh_a: spec.path_a.clone(),
            mesh_b: spec.path_b.clone(),
            overlap_ratio,
            axis,
            translate,
        },
    })
}

fn config_echo(config: &HdistConfig) -> ConfigEcho {
    let (strategy, rate, count) = match config.strategy {
        SamplingStrategy::VertexUniform { rate, .. } => ("vertex", Some(J17(rate)), None),
        SamplingStrategy::Sphere { count, .. } => ("sphere", None, Some(count)),
        SamplingStrategy::AabbBox { count, .. } => ("aabb", None, Some(count)),
    };
    ConfigEcho {
        strategy: strategy.to_string(),
        rate,
        count,
        seed: config.strategy.seed(),
        culling: config.culling,
        dpip: config.dpip_filter,
    }
}

/// Ground-truth penetration depth: brute-force vertex-pair Hausdorff
/// distance between the oracle-classified penetration point sets. Zero when
/// either set is empty.
pub fn oracle_depth(mesh_a: &TriangleMesh, mesh_b: &TriangleMesh) -> Result<f64> {
    let ids_a = oracle::brute_penetration_points(mesh_a, mesh_b)?;
    let ids_b = oracle::brute_penetration_points(mesh_b, mesh_a)?;
    if ids_a.is_empty() || ids_b.is_empty() {
        return Ok(0.0);
    }
    let pts_a: Vec<Point3<f64>> = ids_a.iter().map(|&i| mesh_a.vertices[i as usize]).collect();
    let pts_b: Vec<Point3<f64>> = ids_b.iter().map(|&i| mesh_b.vertices[i as usize]).collect();
    let h_ab = oracle::brute_hausdorff_vertices(&pts_a, &pts_b)?;
    let h_ba = oracle::brute_hausdorff_vertices(&pts_b, &pts_a)?;
    Ok(h_ab.max(h_ba))
}

/// One pipeline run over an already placed scene. `known_oracle_depth`
/// short-circuits the ground-truth computation when a sweep already has it.
pub fn run_placed(
    scene: &PlacedScene,
    config: &HdistConfig,
    options: &RunOptions,
    known_oracle_depth: Option<f64>,
) -> Result<RunReport> {
    let (result, timings): (_, StageTimings) =
        penetration_depth_timed(&scene.mesh_a, &scene.mesh_b, config)?;

    let oracle_depth_value = if options.with_oracle {
        Some(match known_oracle_depth {
            Some(d) => d,
            None => oracle_depth(&scene.mesh_a, &scene.mesh_b)?,
        })
    } else {
        None
    };
    let error_rate = oracle_depth_value
        .filter(|&d| d != 0.0)
        .map(|d| (result.depth - d).abs() / d);

    Ok(RunReport {
        kind: "run",
        scene: scene.desc.clone(),
        config: config_echo(config),
        status: match result.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::NoOverlap => "no_overlap".to_string(),
        },
        depth: J17(result.depth),
        h_ab: J17(result.h_ab),
        h_ba: J17(result.h_ba),
        witness_ab: result.witness_ab,
        witness_ba: result.witness_ba,
        oracle_depth: oracle_depth_value.map(J17),
        error_rate: error_rate.map(J17),
        timing_ms: options.with_timing.then_some(TimingMs {
            pip: J17(timings.pip_ms),
            psg: J17(timings.psg_ms),
            hdist: J17(timings.hdist_ms),
        }),
        stats: options.with_stats.then_some(StatsEcho {
            node_visits: result.stats.node_visits,
            triangle_tests: result.stats.triangle_tests,
            rays_cast: result.stats.rays_cast,
        }),
    })
}

/// Load, place, run once.
pub fn run_scene(spec: &SceneSpec, config: &HdistConfig, options: &RunOptions) -> Result<Vec<Row>> {
    let scene = load_scene(spec)?;
    let report = run_placed(&scene, config, options, None)?;
    Ok(vec![Row::Run(Box::new(report))])
}

fn with_seed(strategy: SamplingStrategy, seed: u64) -> SamplingStrategy {
    match strategy {
        SamplingStrategy::VertexUniform { rate, .. } => SamplingStrategy::VertexUniform { rate, seed },
        SamplingStrategy::Sphere { count, .. } => SamplingStrategy::Sphere { count, seed },
        SamplingStrategy::AabbBox { count, .. } => SamplingStrategy::AabbBox { count, seed },
    }
}

/// `|values| x |seeds|` runs plus one aggregate row per value. Sweeps always
/// compute the oracle (the aggregates are error summaries); the ground truth
/// is computed once per distinct scene placement.
pub fn run_sweep(
    spec: &SceneSpec,
    base_config: &HdistConfig,
    sweep: &SweepSpec,
    options: &RunOptions,
) -> Result<Vec<Row>> {
    if sweep.values.is_empty() {
        bail!("sweep needs at least one value");
    }
    if sweep.seeds.is_empty() {
        bail!("sweep needs at least one seed");
    }
    if sweep.variable == SweepVariable::Rate
        && !matches!(base_config.strategy, SamplingStrategy::VertexUniform { .. })
    {
        bail!("--sweep-rate applies to the vertex strategy only");
    }
    let options = RunOptions {
        with_oracle: true,
        ..options.clone()
    };

    let mut rows = Vec::new();
    let mut aggregates = Vec::new();
    // scene and ground truth are reusable across seeds (and across rate
    // values, when the placement is fixed)
    let mut fixed_scene: Option<(PlacedScene, f64)> = None;

    for &value in &sweep.values {
        let (scene, truth) = match sweep.variable {
            SweepVariable::Rate => {
                if fixed_scene.is_none() {
                    let scene = load_scene(spec)?;
                    let truth = oracle_depth(&scene.mesh_a, &scene.mesh_b)?;
                    fixed_scene = Some((scene, truth));
                }
                let (scene, truth) = fixed_scene.as_ref().unwrap();
                (scene as &PlacedScene, *truth)
            }
            SweepVariable::OverlapRatio => {
                let axis = match spec.placement {
                    Placement::Overlap { axis, .. } => axis,
                    Placement::Translate(_) => Axis::X,
                };
                let spec = SceneSpec {
                    placement: Placement::Overlap { ratio: value, axis },
                    ..spec.clone()
                };
                let scene = load_scene(&spec)?;
                let truth = oracle_depth(&scene.mesh_a, &scene.mesh_b)?;
                fixed_scene = Some((scene, truth));
                let (scene, truth) = fixed_scene.as_ref().unwrap();
                (scene as &PlacedScene, *truth)
            }
        };

        let mut errors = Vec::new();
        for &seed in &sweep.seeds {
            let mut config = *base_config;
            config.strategy = with_seed(base_config.strategy, seed);
            if sweep.variable == SweepVariable::Rate {
                config.strategy = match config.strategy {
                    SamplingStrategy::VertexUniform { seed, .. } => {
                        SamplingStrategy::VertexUniform { rate: value, seed }
                    }
                    other => other,
                };
            }
            let report = run_placed(scene, &config, &options, Some(truth))?;
            if let Some(e) = report.error_rate {
                errors.push(e.0);
            }
            rows.push(Row::Run(Box::new(report)));
        }

        let mean_error = (!errors.is_empty())
            .then(|| errors.iter().sum::<f64>() / errors.len() as f64);
        let max_error = errors.iter().copied().reduce(f64::max);
        aggregates.push(Row::Aggregate(AggregateRow {
            kind: "aggregate",
            sweep_variable: match sweep.variable {
                SweepVariable::Rate => "rate".to_string(),
                SweepVariable::OverlapRatio => "overlap_ratio".to_string(),
            },
            value: J17(value),
            runs: sweep.seeds.len(),
            mean_error: mean_error.map(J17),
            max_error: max_error.map(J17),
        }));
    }
    rows.extend(aggregates);
    Ok(rows)
}
