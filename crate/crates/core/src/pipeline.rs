//! End-to-end runs: skeleton, decomposition, viewpoints, planning and
//! trajectory, with per-stage timing, exports, ablation and benchmarking.

use crate::config::PipelineConfig;
use crate::decomposition::{decompose, Decomposition};
use crate::error::{Error, Result};
use crate::geometry::{FlightSpace, OccupancyGrid, PointCloud, Vec3};
use crate::planner::{plan, CoveragePath, PlanDiagnostics, PlanInput, PlanMode, Pose};
use crate::scenes::{synth_scene, SceneKind, SceneParams};
use crate::skeleton::{extract_skeleton, SkeletonOutput};
use crate::trajectory::{build_corridors, generate_trajectory, knots_from_path, validate_trajectory, Corridor, FeasibilityReport, Trajectory};
use crate::viewpoints::{generate_viewpoints, label_internal_and_rays, write_viewpoints_csv, CoverageContext, Viewpoint, ViewpointSet};
use serde::Serialize;
use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// Runs `f` on a pool of `workers` threads (0 uses every core).
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Optional export directory; files are written as soon as a stage ends, so
/// a failing run keeps everything produced before the failure.
struct Sink<'a>(Option<&'a Path>);

impl Sink<'_> {
    fn write(&self, name: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let Some(dir) = self.0 else { return Ok(()) };
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }
}

/// Stages shared by every planning mode.
pub struct Prepared {
    pub skeleton: SkeletonOutput,
    pub decomposition: Decomposition,
    pub grid: OccupancyGrid,
    pub viewpoints: ViewpointSet,
    pub start: Pose,
    pub stage_ms: BTreeMap<String, f64>,
}

/// A free point beside the scene: level with the cloud center, one sampling
/// distance beyond its lowest x, moved outward until it is flyable.
pub fn default_start(flight: &FlightSpace, cloud: &PointCloud, distance: f64) -> Result<Vec3> {
    let b = cloud.bounds().ok_or(Error::EmptyInput)?;
    let c = b.center();
    let step = flight.grid().voxel_size() / 2.0;
    let mut p = Vec3::new(b.min.x - distance, c.y, c.z);
    while flight.grid().index_of(&p).is_some() {
        if flight.is_free_point(&p) {
            return Ok(p);
        }
        p.x -= step;
    }
    Err(Error::InvalidParameter("no free start position beside the scene; set `start`".into()))
}

fn prepare_inner(cfg: &PipelineConfig, cloud: &PointCloud, sink: &Sink) -> Result<Prepared> {
    let mut stage_ms = BTreeMap::new();
    let t = Instant::now();
    let skeleton = extract_skeleton(cloud, &cfg.skeleton).map_err(|e| e.in_stage("skeleton"))?;
    stage_ms.insert("skeleton".to_string(), ms(t));
    sink.write("skeleton.txt", |w| skeleton.graph.write_text(w))?;

    let t = Instant::now();
    let decomposition = decompose(cloud, &skeleton.graph, &cfg.decomposition).map_err(|e| e.in_stage("decomposition"))?;
    stage_ms.insert("decomposition".to_string(), ms(t));
    sink.write("labels.txt", |w| decomposition.write_labels(w))?;
    sink.write("subspaces.csv", |w| decomposition.write_summary(w))?;

    let t = Instant::now();
    let g = &cfg.grid;
    let mut grid = OccupancyGrid::build(cloud, g.voxel_size, g.padding).map_err(|e| e.in_stage("viewpoints"))?;
    let labeling = label_internal_and_rays(&mut grid, cloud, &decomposition.subspaces);
    let flight = FlightSpace::new(&grid, g.clearance);
    let ctx = CoverageContext::new(&flight, cfg.viewpoints.sensor());
    let viewpoints = generate_viewpoints(&ctx, &labeling.rays, &cfg.viewpoints).map_err(|e| e.in_stage("viewpoints"))?;
    let start = match cfg.start {
        Some(s) => {
            let p = Vec3::new(s[0], s[1], s[2]);
            if !flight.is_free_point(&p) {
                return Err(Error::InvalidParameter(format!("start {s:?} is not in free space")).in_stage("planner"));
            }
            p
        }
        None => default_start(&flight, cloud, cfg.viewpoints.distance()).map_err(|e| e.in_stage("planner"))?,
    };
    stage_ms.insert("viewpoints".to_string(), ms(t));
    sink.write("viewpoints.csv", |w| write_viewpoints_csv(&viewpoints.viewpoints, w))?;
    drop(ctx);
    drop(flight);
    Ok(Prepared { skeleton, decomposition, grid, viewpoints, start: Pose::at(start), stage_ms })
}

/// Skeleton, decomposition and viewpoint stages.
pub fn prepare(cfg: &PipelineConfig, cloud: &PointCloud) -> Result<Prepared> {
    prepare_with_exports(cfg, cloud, None)
}

/// [`prepare`], writing skeleton, label, subspace and viewpoint files to `out`.
pub fn prepare_with_exports(cfg: &PipelineConfig, cloud: &PointCloud, out: Option<&Path>) -> Result<Prepared> {
    cfg.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    with_workers(cfg.workers, || prepare_inner(cfg, cloud, &Sink(out)))?
}

/// Planning stage alone; returns the path, diagnostics and wall time in ms.
pub fn plan_prepared(cfg: &PipelineConfig, prepared: &Prepared, mode: PlanMode, out: Option<&Path>) -> Result<(CoveragePath, PlanDiagnostics, f64)> {
    cfg.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    with_workers(cfg.workers, || plan_stage(cfg, prepared, mode, &Sink(out)))?
}

/// Corridor, trajectory and feasibility check for a planned path.
pub fn trajectory_for(cfg: &PipelineConfig, prepared: &Prepared, path: &CoveragePath, out: Option<&Path>) -> Result<(Corridor, Trajectory, FeasibilityReport)> {
    cfg.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    with_workers(cfg.workers, || trajectory_stage(cfg, prepared, path, &Sink(out)))?
}

/// Percentage of coverable Occupied voxels seen by the given viewpoints,
/// recomputed from scratch.
pub fn compute_coverage_rate(viewpoints: &[Viewpoint], ctx: &CoverageContext, distance: f64) -> f64 {
    if viewpoints.is_empty() {
        return 0.0;
    }
    let coverable = ctx.coverable(distance);
    if coverable.is_empty() {
        return 100.0;
    }
    let seen: HashSet<usize> = viewpoints.iter().flat_map(|v| ctx.coverage_set(&v.position, v.pitch, v.yaw)).collect();
    100.0 * coverable.keys().filter(|l| seen.contains(l)).count() as f64 / coverable.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoverageReport {
    pub mode: PlanMode,
    pub seed: u64,
    pub viewpoint_number: usize,
    pub initial_viewpoints: usize,
    pub subspace_count: usize,
    pub path_length_m: f64,
    /// Summed travel-time metric of the path, seconds.
    pub path_cost_s: f64,
    /// Total trajectory duration, seconds.
    pub exec_time_s: f64,
    pub coverage_rate_percent: f64,
    pub feasible: bool,
    pub comp_time_ms: BTreeMap<String, f64>,
    pub total_comp_time_ms: f64,
}

impl CoverageReport {
    pub fn write_json<W: Write>(&self, w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(std::io::Error::other)
    }

    /// Aligned two-column text.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let rows: Vec<(String, String)> = [
            ("mode".to_string(), self.mode.to_string()),
            ("seed".to_string(), self.seed.to_string()),
            ("viewpoints".to_string(), format!("{} (initial {})", self.viewpoint_number, self.initial_viewpoints)),
            ("subspaces".to_string(), self.subspace_count.to_string()),
            ("path length (m)".to_string(), format!("{:.2}", self.path_length_m)),
            ("path cost (s)".to_string(), format!("{:.2}", self.path_cost_s)),
            ("exec time (s)".to_string(), format!("{:.2}", self.exec_time_s)),
            ("coverage (%)".to_string(), format!("{:.2}", self.coverage_rate_percent)),
            ("feasible".to_string(), self.feasible.to_string()),
        ]
        .into_iter()
        .chain(self.comp_time_ms.iter().map(|(k, v)| (format!("{k} (ms)"), format!("{v:.1}"))))
        .chain(std::iter::once(("total (ms)".to_string(), format!("{:.1}", self.total_comp_time_ms))))
        .collect();
        let width = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        for (k, v) in rows {
            writeln!(w, "{k:<width$}  {v}")?;
        }
        Ok(())
    }
}

pub struct Artifacts {
    pub prepared: Prepared,
    pub path: CoveragePath,
    pub diagnostics: PlanDiagnostics,
    pub corridor: Corridor,
    pub trajectory: Trajectory,
    pub feasibility: FeasibilityReport,
}

fn plan_stage(cfg: &PipelineConfig, prep: &Prepared, mode: PlanMode, sink: &Sink) -> Result<(CoveragePath, PlanDiagnostics, f64)> {
    let t = Instant::now();
    let flight = FlightSpace::new(&prep.grid, cfg.grid.clearance);
    let input = PlanInput {
        flight: &flight,
        viewpoints: &prep.viewpoints,
        branches: &prep.decomposition.branches,
        skeleton_vertices: &prep.skeleton.graph.vertices,
        start: prep.start,
    };
    let r_jc = cfg.planner.r_jc.unwrap_or(2.0 * cfg.viewpoints.sensor().query_radius());
    let (path, diag) = plan(&input, &cfg.planner, r_jc, mode, cfg.seed).map_err(|e| e.in_stage("planner"))?;
    let elapsed = ms(t);
    sink.write("path.csv", |w| path.write_csv(w))?;
    sink.write("path.obj", |w| path.write_polyline_obj(w))?;
    sink.write("plan_diagnostics.json", |w| diag.write_json(w))?;
    Ok((path, diag, elapsed))
}

fn trajectory_stage(cfg: &PipelineConfig, prep: &Prepared, path: &CoveragePath, sink: &Sink) -> Result<(Corridor, Trajectory, FeasibilityReport)> {
    let flight = FlightSpace::new(&prep.grid, cfg.grid.clearance);
    let knots = knots_from_path(path);
    let corridor = build_corridors(&knots, &flight, cfg.trajectory.max_box_extent).map_err(|e| e.in_stage("trajectory"))?;
    let limits = &cfg.planner.limits;
    let traj = generate_trajectory(&corridor, limits, &cfg.trajectory).map_err(|e| e.in_stage("trajectory"))?;
    let report = validate_trajectory(&traj, &corridor, limits, 1000.0, 1e-6);
    sink.write("trajectory.csv", |w| traj.write_csv(w, cfg.trajectory.export_rate_hz))?;
    sink.write("trajectory.json", |w| traj.write_json(w))?;
    sink.write("feasibility.json", |w| report.write_json(w))?;
    Ok((corridor, traj, report))
}

fn report_for(cfg: &PipelineConfig, prep: &Prepared, mode: PlanMode, path: &CoveragePath, traj: &Trajectory, feasible: bool, stage_ms: BTreeMap<String, f64>) -> CoverageReport {
    let flight = FlightSpace::new(&prep.grid, cfg.grid.clearance);
    let ctx = CoverageContext::new(&flight, cfg.viewpoints.sensor());
    let coverage = compute_coverage_rate(&path.viewpoints, &ctx, cfg.viewpoints.distance());
    CoverageReport {
        mode,
        seed: cfg.seed,
        viewpoint_number: path.viewpoints.len(),
        initial_viewpoints: prep.viewpoints.initial.len(),
        subspace_count: prep.decomposition.subspaces.len(),
        path_length_m: path.total_length,
        path_cost_s: path.total_cost,
        exec_time_s: traj.total_time,
        coverage_rate_percent: coverage,
        feasible,
        total_comp_time_ms: stage_ms.values().sum(),
        comp_time_ms: stage_ms,
    }
}

/// Full pipeline. With `out`, every stage writes its exports there as soon as
/// it finishes.
pub fn run_pipeline(cfg: &PipelineConfig, cloud: &PointCloud, mode: PlanMode, out: Option<&Path>) -> Result<(Artifacts, CoverageReport)> {
    cfg.validate()?;
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    let sink = Sink(out);
    with_workers(cfg.workers, || {
        let prepared = prepare_inner(cfg, cloud, &sink)?;
        let mut stage_ms = prepared.stage_ms.clone();
        let (path, diagnostics, plan_ms) = plan_stage(cfg, &prepared, mode, &sink)?;
        stage_ms.insert("planner".to_string(), plan_ms);
        let t = Instant::now();
        let (corridor, trajectory, feasibility) = trajectory_stage(cfg, &prepared, &path, &sink)?;
        stage_ms.insert("trajectory".to_string(), ms(t));
        let report = report_for(cfg, &prepared, mode, &path, &trajectory, feasibility.pass, stage_ms);
        sink.write("report.json", |w| report.write_json(w))?;
        sink.write("report.txt", |w| report.write_text(w))?;
        Ok((Artifacts { prepared, path, diagnostics, corridor, trajectory, feasibility }, report))
    })?
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AblationRow {
    pub mode: PlanMode,
    pub plan_ms: f64,
    pub path_cost_s: f64,
    pub path_length_m: f64,
    pub viewpoints: usize,
    pub subspaces: usize,
}

/// Plans the same prepared scene once per mode.
pub fn run_ablation(cfg: &PipelineConfig, prepared: &Prepared, modes: &[PlanMode]) -> Result<Vec<AblationRow>> {
    cfg.validate()?;
    with_workers(cfg.workers, || {
        modes
            .iter()
            .map(|&mode| {
                let (path, _, plan_ms) = plan_stage(cfg, prepared, mode, &Sink(None))?;
                Ok(AblationRow {
                    mode,
                    plan_ms,
                    path_cost_s: path.total_cost,
                    path_length_m: path.total_length,
                    viewpoints: path.viewpoints.len(),
                    subspaces: prepared.viewpoints.per_subspace.len(),
                })
            })
            .collect()
    })?
}

pub fn write_ablation_table<W: Write>(rows: &[AblationRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{:<6}{:>12}{:>14}{:>16}{:>12}{:>11}", "mode", "plan_ms", "path_cost_s", "path_length_m", "viewpoints", "subspaces")?;
    for r in rows {
        writeln!(
            w,
            "{:<6}{:>12.1}{:>14.2}{:>16.2}{:>12}{:>11}",
            r.mode.to_string(),
            r.plan_ms,
            r.path_cost_s,
            r.path_length_m,
            r.viewpoints,
            r.subspaces
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub scene: String,
    pub mode: PlanMode,
    pub seed: u64,
    pub report: CoverageReport,
}

pub const BENCH_HEADER: &str =
    "scene,mode,seed,viewpoints,initial_viewpoints,subspaces,path_length_m,path_cost_s,exec_time_s,coverage_percent,feasible,plan_ms,total_ms";

impl BenchRow {
    pub fn csv_line(&self) -> String {
        let r = &self.report;
        format!(
            "{},{},{},{},{},{},{:.4},{:.4},{:.4},{:.3},{},{:.2},{:.2}",
            self.scene,
            self.mode,
            self.seed,
            r.viewpoint_number,
            r.initial_viewpoints,
            r.subspace_count,
            r.path_length_m,
            r.path_cost_s,
            r.exec_time_s,
            r.coverage_rate_percent,
            r.feasible,
            r.comp_time_ms.get("planner").copied().unwrap_or(0.0),
            r.total_comp_time_ms
        )
    }
}

/// One row per (scene, mode, seed). The seed drives both scene synthesis and
/// planning; shared stages run once per (scene, seed).
pub fn run_bench(cfg: &PipelineConfig, scenes: &[SceneKind], scene_params: &SceneParams, modes: &[PlanMode], seeds: &[u64]) -> Result<Vec<BenchRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    for &scene in scenes {
        for &seed in seeds {
            let (cloud, _) = synth_scene(scene, scene_params, seed)?;
            let run_cfg = PipelineConfig { seed, ..cfg.clone() };
            let prepared = prepare(&run_cfg, &cloud)?;
            for &mode in modes {
                let report = with_workers(cfg.workers, || -> Result<CoverageReport> {
                    let mut stage_ms = prepared.stage_ms.clone();
                    let (path, _, plan_ms) = plan_stage(&run_cfg, &prepared, mode, &Sink(None))?;
                    stage_ms.insert("planner".to_string(), plan_ms);
                    let t = Instant::now();
                    let (_, traj, feas) = trajectory_stage(&run_cfg, &prepared, &path, &Sink(None))?;
                    stage_ms.insert("trajectory".to_string(), ms(t));
                    Ok(report_for(&run_cfg, &prepared, mode, &path, &traj, feas.pass, stage_ms))
                })??;
                rows.push(BenchRow { scene: scene.to_string(), mode, seed, report });
            }
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut w: W) -> std::io::Result<()> {
    writeln!(w, "{BENCH_HEADER}")?;
    for r in rows {
        writeln!(w, "{}", r.csv_line())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::VoxelState;
    use crate::viewpoints::{look_angles, SensorModel};

    #[test]
    fn coverage_rate_edge_cases() {
        let mut pts = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    pts.push(Vec3::new(i as f64 * 0.2, j as f64 * 0.2, k as f64 * 0.2));
                }
            }
        }
        let cloud = PointCloud::new(pts);
        let grid = OccupancyGrid::build(&cloud, 0.2, 12).unwrap();
        assert!(grid.count(VoxelState::Occupied) > 0);
        let flight = FlightSpace::new(&grid, 0.3);
        let sensor = SensorModel { fov_h: 100f64.to_radians(), fov_w: 100f64.to_radians(), d_v: 2.5, pitch_min: -1.5, pitch_max: 1.5 };
        let ctx = CoverageContext::new(&flight, sensor);
        assert_eq!(compute_coverage_rate(&[], &ctx, 1.5), 0.0);
        let c = Vec3::new(0.2, 0.2, 0.2);
        let mut ring = Vec::new();
        for u in crate::viewpoints::icosphere(1) {
            let (pitch, yaw) = look_angles(&-u);
            if pitch.abs() < 1.4 {
                ring.push(Viewpoint::new(c + u * 1.5, pitch, yaw, 0));
            }
        }
        let full = compute_coverage_rate(&ring, &ctx, 1.5);
        assert!((full - 100.0).abs() < 1e-9, "{full}");
        // Dropping a viewpoint that alone sees some voxel lowers the rate.
        let sets: Vec<Vec<usize>> = ring.iter().map(|v| ctx.coverage_set(&v.position, v.pitch, v.yaw)).collect();
        let sole = (0..ring.len()).find(|&i| sets[i].iter().any(|l| sets.iter().enumerate().all(|(j, s)| j == i || !s.contains(l))));
        if let Some(i) = sole {
            let mut fewer = ring.clone();
            fewer.remove(i);
            assert!(compute_coverage_rate(&fewer, &ctx, 1.5) < full);
        }
    }

    #[test]
    fn report_text_is_aligned() {
        let r = CoverageReport {
            mode: PlanMode::Full,
            seed: 1,
            viewpoint_number: 3,
            initial_viewpoints: 9,
            subspace_count: 1,
            path_length_m: 1.0,
            path_cost_s: 0.5,
            exec_time_s: 4.0,
            coverage_rate_percent: 99.0,
            feasible: true,
            comp_time_ms: [("skeleton".to_string(), 1.0)].into_iter().collect(),
            total_comp_time_ms: 1.0,
        };
        let mut buf = Vec::new();
        r.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("skeleton (ms)"));
        let width = "path length (m)".len();
        for line in text.lines() {
            assert_eq!(&line[width..width + 2], "  ", "{line}");
            assert_ne!(line.as_bytes()[width + 2], b' ', "{line}");
        }
    }
}
