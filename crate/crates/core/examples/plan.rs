//! Coverage path over a scene's viewpoints, with and without local
//! refinement.
//!
//! cargo run --release --example plan -- torus [path.csv]

use skelcover::config::PipelineConfig;
use skelcover::pipeline::{plan_prepared, prepare};
use skelcover::planner::PlanMode;
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: SceneKind = args.next().as_deref().unwrap_or("torus").parse()?;
    let cfg = PipelineConfig::default();
    let (cloud, _) = synth_scene(kind, &SceneParams::default(), cfg.seed)?;
    let prep = prepare(&cfg, &cloud)?;

    let (path, diag, ms) = plan_prepared(&cfg, &prep, PlanMode::Full, None)?;
    println!("{kind}: {} viewpoints, subspace order {:?}", path.viewpoints.len(), diag.subspace_sequence);
    println!("cost {:.2} s -> {:.2} s after refinement, length {:.2} m, {} path searches, {ms:.1} ms", diag.cost_before_refine, diag.cost_after_refine, path.total_length, diag.path_searches);
    if let Some(r) = &diag.refine {
        println!("refinement: {} junctions ({} active), {} of {} moves accepted", r.junctions, r.active_junctions, r.accepted, r.iterations);
    }
    if let Some(out) = args.next() {
        path.write_csv(std::fs::File::create(&out)?)?;
        println!("wrote {out}");
    }
    Ok(())
}
