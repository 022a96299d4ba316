//! Extracts the curve skeleton of a synthetic scene and reports its topology.
//!
//! cargo run --release --example skeletonize -- y_tube [out.skel]

use skelcover::scenes::{synth_scene, SceneKind, SceneParams};
use skelcover::skeleton::{extract_skeleton, SkeletonParams};
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: SceneKind = args.next().as_deref().unwrap_or("y_tube").parse()?;
    let (cloud, truth) = synth_scene(kind, &SceneParams { n_points: 20_000, noise: 0.01 }, 42)?;

    let start = Instant::now();
    let out = extract_skeleton(&cloud, &SkeletonParams::default())?;
    let elapsed = start.elapsed();
    let g = &out.graph;

    let degrees = g.degrees();
    let count = |d: usize| degrees.iter().filter(|&&x| x == d).count();
    println!("scene {kind}: {} points -> {} downsampled, {} flagged", cloud.len(), out.downsampled.len(), out.flagged);
    println!("skeleton: {} vertices, {} edges, {} components", g.vertices.len(), g.edges.len(), g.component_count());
    println!("degrees: leaves {} / chain {} / joints {}", count(1), count(2), degrees.iter().filter(|&&x| x >= 3).count());
    println!("expected: leaves {} / joints {} / cycles {}", truth.leaves, truth.joints, truth.cycles);
    let dists: Vec<f64> = g.vertices.iter().filter_map(|v| truth.axis_distance(v)).collect();
    if !dists.is_empty() {
        let within = dists.iter().filter(|&&d| d <= 0.15).count();
        println!("axis: {:.1}% of vertices within 0.15 m", 100.0 * within as f64 / dists.len() as f64);
    }
    println!("time: {:.1} ms", elapsed.as_secs_f64() * 1e3);

    if let Some(path) = args.next() {
        g.write_text(std::io::BufWriter::new(std::fs::File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
