//! Reads a point cloud file (PLY, PCD or XYZ) and extracts its skeleton.
//! Without an argument a synthetic scene is written as binary PLY first.
//!
//! cargo run --release --example load_cloud -- [cloud.ply]

use skelcover::io::{load_cloud, save_ply, CloudFormat};
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};
use skelcover::skeleton::{extract_skeleton, SkeletonParams};
use std::path::PathBuf;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = match std::env::args().nth(1) {
        Some(p) => PathBuf::from(p),
        None => {
            let p = std::env::temp_dir().join("skelcover_torus.ply");
            let (cloud, _) = synth_scene(SceneKind::Torus, &SceneParams::default(), 1)?;
            save_ply(&cloud, &p, true)?;
            println!("wrote {}", p.display());
            p
        }
    };
    let cloud = load_cloud(&path, CloudFormat::Auto)?;
    let b = cloud.bounds().ok_or("empty cloud")?;
    println!("{} points, normals {}, extent {:.2} x {:.2} x {:.2}", cloud.len(), cloud.normals.is_some(), b.extent().x, b.extent().y, b.extent().z);
    let g = extract_skeleton(&cloud, &SkeletonParams::default())?.graph;
    println!("skeleton: {} vertices, {} edges", g.vertices.len(), g.edges.len());
    Ok(())
}
