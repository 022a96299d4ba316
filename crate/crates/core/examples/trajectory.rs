//! Corridor and time-allocated trajectory for a planned path, checked at
//! 1 kHz against the dynamic limits.
//!
//! cargo run --release --example trajectory -- y_tube [trajectory.csv]

use skelcover::config::PipelineConfig;
use skelcover::pipeline::{plan_prepared, prepare, trajectory_for};
use skelcover::planner::PlanMode;
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let kind: SceneKind = args.next().as_deref().unwrap_or("y_tube").parse()?;
    let cfg = PipelineConfig::default();
    let (cloud, _) = synth_scene(kind, &SceneParams::default(), cfg.seed)?;
    let prep = prepare(&cfg, &cloud)?;
    let (path, _, _) = plan_prepared(&cfg, &prep, PlanMode::Full, None)?;
    let (corridor, traj, f) = trajectory_for(&cfg, &prep, &path, None)?;

    let lim = &cfg.planner.limits;
    println!("{} knots, {} boxes, {} pieces, {:.1} s", corridor.knots.len(), corridor.boxes.len(), traj.pieces.len(), traj.total_time);
    println!("speed {:.3}/{}  accel {:.3}/{}  jerk {:.3}/{}", f.max_speed, lim.v_max, f.max_acceleration, lim.a_max, f.max_jerk, lim.j_max);
    println!("pitch rate {:.3}  yaw rate {:.3}  (limit {})", f.max_pitch_rate, f.max_yaw_rate, lim.omega_max);
    println!("corridor violations {}, waypoint error {:.1e}, feasible {}", f.corridor_violations, f.max_waypoint_error, f.pass);
    if let Some(out) = args.next() {
        traj.write_csv(std::fs::File::create(&out)?, cfg.trajectory.export_rate_hz)?;
        println!("wrote {out}");
    }
    Ok(())
}
