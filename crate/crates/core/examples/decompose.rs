//! Splits a scene into branch subspaces and prints their sizes.
//!
//! cargo run --release --example decompose -- pipe_network [delta_deg]

use skelcover::decomposition::{decompose, DecompositionParams};
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};
use skelcover::skeleton::{extract_skeleton, SkeletonParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: SceneKind = args.next().as_deref().unwrap_or("pipe_network").parse()?;
    let delta_deg: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(45.0);
    let (cloud, _) = synth_scene(kind, &SceneParams::default(), 42)?;
    let sk = extract_skeleton(&cloud, &SkeletonParams::default())?;
    let params = DecompositionParams { delta_deg, ..DecompositionParams::default() };
    let d = decompose(&cloud, &sk.graph, &params)?;

    println!("{kind}: {} branches at {delta_deg} deg, plane radius {:.2} m", d.branches.len(), d.r_plane);
    for s in &d.subspaces {
        let verts = s.branch.vertices();
        println!("  subspace {:>2}: {:>5} points, {:>2} skeleton vertices, {:>2} cutting planes", s.id, s.allocated_points.len(), verts.len(), s.planes.len());
    }
    d.write_summary(std::io::stdout().lock())?;
    Ok(())
}
