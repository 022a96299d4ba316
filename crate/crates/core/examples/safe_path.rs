//! Collision-free path through the doorway of the wall scene.

use skelcover::geometry::{FlightSpace, OccupancyGrid, Vec3};
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (cloud, _) = synth_scene(SceneKind::WallGap, &SceneParams::default(), 1)?;
    let grid = OccupancyGrid::build(&cloud, 0.2, 12)?;
    let flight = FlightSpace::new(&grid, 0.4);
    let (a, b) = (Vec3::new(-2.0, 3.0, 1.0), Vec3::new(2.0, -3.0, 1.0));
    for shortcut in [false, true] {
        let p = flight.path(&a, &b, shortcut)?;
        println!("shortcut {shortcut}: {} waypoints, {:.2} m (straight line {:.2} m)", p.waypoints.len(), p.length, (b - a).norm());
    }
    let p = flight.path(&a, &b, true)?;
    for w in &p.waypoints {
        println!("  {:>6.2} {:>6.2} {:>6.2}", w.x, w.y, w.z);
    }
    Ok(())
}
