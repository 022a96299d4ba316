//! Full, no-refinement and global-tour planning side by side.
//!
//! cargo run --release --example ablation -- pipe_network

use skelcover::config::PipelineConfig;
use skelcover::pipeline::{prepare, run_ablation, write_ablation_table};
use skelcover::planner::PlanMode;
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let kind: SceneKind = std::env::args().nth(1).as_deref().unwrap_or("pipe_network").parse()?;
    let mut cfg = PipelineConfig::default();
    cfg.viewpoints.d_v = 2.5;
    let (cloud, _) = synth_scene(kind, &SceneParams::default(), cfg.seed)?;
    let prep = prepare(&cfg, &cloud)?;
    let rows = run_ablation(&cfg, &prep, &[PlanMode::Full, PlanMode::Nr, PlanMode::Go])?;
    write_ablation_table(&rows, std::io::stdout().lock())?;
    Ok(())
}
