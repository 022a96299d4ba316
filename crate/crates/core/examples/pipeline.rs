//! Runs the whole pipeline on a synthetic scene and prints the report.
//!
//! cargo run --release --example pipeline -- pipe_network [out_dir]

use skelcover::config::PipelineConfig;
use skelcover::pipeline::run_pipeline;
use skelcover::planner::PlanMode;
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: SceneKind = args.next().as_deref().unwrap_or("y_tube").parse()?;
    let out = args.next().map(std::path::PathBuf::from);
    let cfg = PipelineConfig::default();
    let (cloud, _) = synth_scene(kind, &SceneParams::default(), cfg.seed)?;
    let (artifacts, report) = run_pipeline(&cfg, &cloud, PlanMode::Full, out.as_deref())?;
    report.write_text(std::io::stdout().lock())?;
    let f = &artifacts.feasibility;
    println!("trajectory: {} pieces, {} corridor boxes", artifacts.trajectory.pieces.len(), artifacts.corridor.boxes.len());
    if !f.pass {
        println!("feasibility violations: {f:?}");
    }
    if let Some(dir) = out {
        println!("exports in {}", dir.display());
    }
    Ok(())
}
