use clap::{Args, Parser, Subcommand};
use skelcover::config::PipelineConfig;
use skelcover::decomposition::decompose;
use skelcover::geometry::PointCloud;
use skelcover::io::load_cloud;
use skelcover::pipeline::{
    plan_prepared, prepare, prepare_with_exports, run_ablation, run_bench, run_pipeline, trajectory_for, with_workers, write_ablation_table,
    write_bench_csv,
};
use skelcover::planner::PlanMode;
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};
use skelcover::skeleton::extract_skeleton;
use skelcover::{Error, Result};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Skeleton-guided coverage planning for point-cloud scenes.
///
/// Configuration comes from --config (TOML), then SKELCOVER_* environment
/// variables (SKELCOVER_GRID__VOXEL_SIZE=0.25), then --seed and --workers.
#[derive(Parser)]
#[command(name = "skelcover", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Export directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Input {
    /// Point cloud file (.ply, .pcd, .xyz).
    #[arg(long, conflicts_with = "scene")]
    input: Option<PathBuf>,
    #[arg(long, default_value = "auto")]
    format: String,
    /// Synthetic scene: cylinder, pipe_network, y_tube, torus, wall_gap, tower.
    #[arg(long)]
    scene: Option<String>,
    #[arg(long, default_value_t = 20_000)]
    points: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the curve skeleton.
    Skeletonize(Input),
    /// Skeleton plus branch decomposition.
    Decompose(Input),
    /// Everything up to the viewpoint set.
    Viewpoints(Input),
    /// Everything up to the coverage path.
    Plan {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "full")]
        mode: String,
    },
    /// Everything up to the trajectory and its feasibility check.
    Trajectory {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "full")]
        mode: String,
    },
    /// Full pipeline with report.
    Run {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value = "full")]
        mode: String,
    },
    /// Synthetic-scene benchmark; one CSV row per (scene, mode, seed).
    Bench {
        #[arg(long, value_delimiter = ',', default_value = "cylinder,pipe_network,y_tube,torus,wall_gap,tower")]
        scenes: Vec<String>,
        #[arg(long, value_delimiter = ',', default_value = "full,nr,go")]
        modes: Vec<String>,
        /// Seeds; defaults to the configured seed.
        #[arg(long, value_delimiter = ',')]
        seeds: Vec<u64>,
        #[arg(long, default_value_t = 20_000)]
        points: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Compare planning modes on one scene.
    Ablate {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_delimiter = ',', default_value = "full,nr,go")]
        modes: Vec<String>,
    },
}

fn load_input(input: &Input, seed: u64) -> Result<PointCloud> {
    match (&input.input, &input.scene) {
        (Some(path), _) => {
            if !path.is_file() {
                return Err(Error::InvalidParameter(format!("input file {} not found", path.display())));
            }
            load_cloud(path, input.format.parse()?)
        }
        (None, Some(scene)) => {
            let kind: SceneKind = scene.parse()?;
            let params = SceneParams { n_points: input.points, noise: input.noise };
            Ok(synth_scene(kind, &params, seed)?.0)
        }
        (None, None) => Err(Error::InvalidParameter("one of --input or --scene is required".into())),
    }
}

fn parse_modes(modes: &[String]) -> Result<Vec<PlanMode>> {
    modes.iter().map(|m| m.parse()).collect()
}

fn create_out(out: Option<&Path>) -> Result<()> {
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
    }
    Ok(())
}

fn write_file(dir: &Path, name: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(name))?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn execute(cli: Cli) -> Result<()> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(workers) = cli.workers {
        cfg.workers = workers;
    }
    cfg.validate()?;
    let out = cli.out.as_deref();
    let stdout = std::io::stdout();

    match &cli.command {
        Command::Skeletonize(input) => {
            let cloud = load_input(input, cfg.seed)?;
            let sk = with_workers(cfg.workers, || extract_skeleton(&cloud, &cfg.skeleton))??;
            let g = &sk.graph;
            println!("{} vertices, {} edges, {} components", g.vertices.len(), g.edges.len(), g.component_count());
            create_out(out)?;
            if let Some(dir) = out {
                write_file(dir, "skeleton.txt", |w| g.write_text(w))?;
            }
        }
        Command::Decompose(input) => {
            let cloud = load_input(input, cfg.seed)?;
            let (sk, dec) = with_workers(cfg.workers, || -> Result<_> {
                let sk = extract_skeleton(&cloud, &cfg.skeleton)?;
                let dec = decompose(&cloud, &sk.graph, &cfg.decomposition)?;
                Ok((sk, dec))
            })??;
            println!("{} branches, {} subspaces", dec.branches.len(), dec.subspaces.len());
            dec.write_summary(stdout.lock())?;
            create_out(out)?;
            if let Some(dir) = out {
                write_file(dir, "skeleton.txt", |w| sk.graph.write_text(w))?;
                write_file(dir, "labels.txt", |w| dec.write_labels(w))?;
                write_file(dir, "subspaces.csv", |w| dec.write_summary(w))?;
            }
        }
        Command::Viewpoints(input) => {
            let cloud = load_input(input, cfg.seed)?;
            let prep = prepare_with_exports(&cfg, &cloud, out)?;
            let vs = &prep.viewpoints;
            println!("{} viewpoints (initial {}) over {} subspaces", vs.viewpoints.len(), vs.initial.len(), vs.per_subspace.len());
        }
        Command::Plan { input, mode } => {
            let mode: PlanMode = mode.parse()?;
            let cloud = load_input(input, cfg.seed)?;
            let prep = prepare_with_exports(&cfg, &cloud, out)?;
            let (path, _, plan_ms) = plan_prepared(&cfg, &prep, mode, out)?;
            println!(
                "{mode}: {} viewpoints, length {:.2} m, cost {:.2} s, planned in {plan_ms:.1} ms",
                path.viewpoints.len(),
                path.total_length,
                path.total_cost
            );
        }
        Command::Trajectory { input, mode } => {
            let mode: PlanMode = mode.parse()?;
            let cloud = load_input(input, cfg.seed)?;
            let prep = prepare_with_exports(&cfg, &cloud, out)?;
            let (path, _, _) = plan_prepared(&cfg, &prep, mode, out)?;
            let (corridor, traj, feas) = trajectory_for(&cfg, &prep, &path, out)?;
            println!(
                "{} pieces in {} boxes, duration {:.2} s, feasible {}",
                traj.pieces.len(),
                corridor.boxes.len(),
                traj.total_time,
                feas.pass
            );
            if !feas.pass {
                return Err(Error::TrajectoryFailure("trajectory violates its limits; see feasibility.json".into()));
            }
        }
        Command::Run { input, mode } => {
            let mode: PlanMode = mode.parse()?;
            let cloud = load_input(input, cfg.seed)?;
            let (_, report) = run_pipeline(&cfg, &cloud, mode, out)?;
            report.write_text(stdout.lock())?;
        }
        Command::Bench { scenes, modes, seeds, points, noise } => {
            let scenes: Vec<SceneKind> = scenes.iter().map(|s| s.parse()).collect::<Result<_>>()?;
            let modes = parse_modes(modes)?;
            let seeds = if seeds.is_empty() { vec![cfg.seed] } else { seeds.clone() };
            let rows = run_bench(&cfg, &scenes, &SceneParams { n_points: *points, noise: *noise }, &modes, &seeds)?;
            match out {
                Some(dir) => {
                    create_out(out)?;
                    write_file(dir, "bench.csv", |w| write_bench_csv(&rows, w))?;
                    println!("{} rows written to {}", rows.len(), dir.join("bench.csv").display());
                }
                None => write_bench_csv(&rows, stdout.lock())?,
            }
        }
        Command::Ablate { input, modes } => {
            let modes = parse_modes(modes)?;
            let cloud = load_input(input, cfg.seed)?;
            let prep = prepare(&cfg, &cloud)?;
            let rows = run_ablation(&cfg, &prep, &modes)?;
            write_ablation_table(&rows, stdout.lock())?;
            create_out(out)?;
            if let Some(dir) = out {
                write_file(dir, "ablation.json", |w| serde_json::to_writer_pretty(w, &rows).map_err(std::io::Error::other))?;
                write_file(dir, "ablation.txt", |w| write_ablation_table(&rows, w))?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
