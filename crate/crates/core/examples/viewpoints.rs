//! Viewpoint generation on a scene: initial samples, reduction and coverage.
//!
//! cargo run --release --example viewpoints -- tower [viewpoints.csv]

use skelcover::config::PipelineConfig;
use skelcover::geometry::FlightSpace;
use skelcover::pipeline::{compute_coverage_rate, prepare};
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};
use skelcover::viewpoints::{write_viewpoints_csv, CoverageContext};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: SceneKind = args.next().as_deref().unwrap_or("tower").parse()?;
    let cfg = PipelineConfig::default();
    let (cloud, _) = synth_scene(kind, &SceneParams::default(), cfg.seed)?;
    let prep = prepare(&cfg, &cloud)?;
    let vs = &prep.viewpoints;
    let s = &vs.stats;
    println!("{kind}: {} rays, {} initial viewpoints, {} after {} rounds", s.rays, s.initial, s.final_count, s.rounds);
    for (sub, ids) in &vs.per_subspace {
        println!("  subspace {sub}: {} viewpoints", ids.len());
    }
    let flight = FlightSpace::new(&prep.grid, cfg.grid.clearance);
    let ctx = CoverageContext::new(&flight, cfg.viewpoints.sensor());
    println!("coverage {:.2}%", compute_coverage_rate(&vs.viewpoints, &ctx, cfg.viewpoints.distance()));
    if let Some(path) = args.next() {
        write_viewpoints_csv(&vs.viewpoints, std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
