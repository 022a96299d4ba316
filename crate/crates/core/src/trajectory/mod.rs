//! Corridor-constrained quintic trajectories for position and gimbal, with
//! iterative time dilation and an independent feasibility check.

mod corridor;

pub use corridor::{build_corridors, knots_from_path, Corridor, Knot};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::planner::DynamicLimits;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Channel order of piece coefficients.
pub const CHANNELS: [&str; 5] = ["x", "y", "z", "pitch", "yaw"];

/// Quintic coefficients c0..c5 in local time for a rest state (p, v, a) at
/// both ends.
pub fn quintic(p0: f64, v0: f64, a0: f64, p1: f64, v1: f64, a1: f64, t: f64) -> [f64; 6] {
    let h = p1 - p0 - v0 * t - 0.5 * a0 * t * t;
    let dv = v1 - v0 - a0 * t;
    let da = a1 - a0;
    let (t2, t3) = (t * t, t * t * t);
    [
        p0,
        v0,
        0.5 * a0,
        (10.0 * h - 4.0 * dv * t + 0.5 * da * t2) / t3,
        (-15.0 * h + 7.0 * dv * t - da * t2) / (t3 * t),
        (6.0 * h - 3.0 * dv * t + 0.5 * da * t2) / (t3 * t2),
    ]
}

/// Value and first three derivatives of a polynomial at `t`.
pub fn poly_eval(c: &[f64; 6], t: f64) -> [f64; 4] {
    let mut out = [0.0; 4];
    for (d, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for k in (d..6).rev() {
            let f: f64 = ((k - d + 1)..=k).map(|m| m as f64).product();
            acc = acc * t + c[k] * f;
        }
        *o = acc;
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    pub duration: f64,
    /// Coefficients per channel in `CHANNELS` order.
    pub coefficients: [[f64; 6]; 5],
}

/// Derivatives of every channel at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
    pub jerk: Vec3,
    pub pitch: f64,
    pub yaw: f64,
    pub pitch_rate: f64,
    pub yaw_rate: f64,
}

impl Piece {
    pub fn sample(&self, t: f64) -> Sample {
        let e: Vec<[f64; 4]> = self.coefficients.iter().map(|c| poly_eval(c, t)).collect();
        let v = |d: usize| Vec3::new(e[0][d], e[1][d], e[2][d]);
        Sample {
            position: v(0),
            velocity: v(1),
            acceleration: v(2),
            jerk: v(3),
            pitch: e[3][0],
            yaw: e[4][0],
            pitch_rate: e[3][1],
            yaw_rate: e[4][1],
        }
    }

    /// Local sample times with spacing max(1 ms, T / 1000), ending at T.
    pub fn sample_times(&self, min_step: f64) -> impl Iterator<Item = f64> + '_ {
        let dt = min_step.max(self.duration / 1000.0);
        let n = (self.duration / dt).ceil().max(1.0) as usize;
        (0..=n).map(move |k| (k as f64 * dt).min(self.duration))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub pieces: Vec<Piece>,
    pub total_time: f64,
}

impl Trajectory {
    /// Piece index and local time of a global time, clamped to the ends.
    pub fn locate(&self, t: f64) -> Option<(usize, f64)> {
        let mut start = 0.0;
        for (i, p) in self.pieces.iter().enumerate() {
            if t <= start + p.duration || i + 1 == self.pieces.len() {
                return Some((i, (t - start).clamp(0.0, p.duration)));
            }
            start += p.duration;
        }
        None
    }

    pub fn sample(&self, t: f64) -> Option<Sample> {
        self.locate(t).map(|(i, tau)| self.pieces[i].sample(tau))
    }

    /// Copy with every duration scaled; coefficients are refit so the same
    /// knot states are reached at the new times.
    pub fn time_scaled(&self, factor: f64) -> Trajectory {
        let pieces: Vec<Piece> = self
            .pieces
            .iter()
            .map(|p| {
                let mut c = p.coefficients;
                for ch in c.iter_mut() {
                    for (k, v) in ch.iter_mut().enumerate() {
                        *v /= factor.powi(k as i32);
                    }
                }
                Piece { duration: p.duration * factor, coefficients: c }
            })
            .collect();
        Trajectory { total_time: pieces.iter().map(|p| p.duration).sum(), pieces }
    }

    /// CSV sampled at `rate_hz`: t, x, y, z, pitch, yaw, vx, vy, vz.
    pub fn write_csv<W: Write>(&self, mut w: W, rate_hz: f64) -> std::io::Result<()> {
        writeln!(w, "t,x,y,z,pitch,yaw,vx,vy,vz")?;
        if self.pieces.is_empty() {
            return Ok(());
        }
        let n = (self.total_time * rate_hz).floor() as usize;
        let mut times: Vec<f64> = (0..=n).map(|k| k as f64 / rate_hz).collect();
        if times.last().is_none_or(|&t| t < self.total_time) {
            times.push(self.total_time);
        }
        for t in times {
            let s = self.sample(t).expect("non-empty trajectory");
            let (p, v) = (s.position, s.velocity);
            writeln!(w, "{t:.4},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}", p.x, p.y, p.z, s.pitch, s.yaw, v.x, v.y, v.z)?;
        }
        Ok(())
    }

    pub fn write_json<W: Write>(&self, w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(std::io::Error::other)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryParams {
    /// Edge cap of corridor boxes, meters.
    pub max_box_extent: f64,
    /// Junction speeds are capped at this fraction of the limit.
    pub junction_speed_fraction: f64,
    pub dilation: f64,
    pub max_rounds: usize,
    /// Sampling rate of the CSV export.
    pub export_rate_hz: f64,
}

impl Default for TrajectoryParams {
    fn default() -> Self {
        Self { max_box_extent: 4.0, junction_speed_fraction: 0.8, dilation: 1.1, max_rounds: 100, export_rate_hz: 50.0 }
    }
}

impl TrajectoryParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.max_box_extent.is_finite() && self.max_box_extent > 0.0) {
            return bad(format!("max_box_extent must be positive, got {}", self.max_box_extent));
        }
        if !(0.0..1.0).contains(&self.junction_speed_fraction) {
            return bad(format!("junction_speed_fraction must be in [0, 1), got {}", self.junction_speed_fraction));
        }
        if !(self.dilation.is_finite() && self.dilation > 1.0) {
            return bad(format!("dilation must exceed 1, got {}", self.dilation));
        }
        if self.max_rounds == 0 {
            return bad("max_rounds must be at least 1".into());
        }
        if !(self.export_rate_hz.is_finite() && self.export_rate_hz > 0.0) {
            return bad(format!("export_rate_hz must be positive, got {}", self.export_rate_hz));
        }
        Ok(())
    }
}

/// Minimum time of a straight move under speed and acceleration limits.
pub fn trapezoid_time(length: f64, v: f64, a: f64) -> f64 {
    if length <= v * v / a {
        2.0 * (length / a).sqrt()
    } else {
        length / v + v / a
    }
}

/// Generator margin below the limits, so a denser check still passes.
const MARGIN: f64 = 0.999;
/// Dilation rounds after which a piece also comes to rest at both ends.
const REST_AFTER: usize = 30;
const MIN_STEP: f64 = 1e-3;

fn channel(k: &Knot, ch: usize) -> f64 {
    match ch {
        0..=2 => k.position[ch],
        3 => k.pitch,
        _ => k.yaw,
    }
}

fn fit(a: &Knot, b: &Knot, va: &[f64; 5], vb: &[f64; 5], t: f64) -> Piece {
    let mut coefficients = [[0.0; 6]; 5];
    for (ch, c) in coefficients.iter_mut().enumerate() {
        *c = quintic(channel(a, ch), va[ch], 0.0, channel(b, ch), vb[ch], 0.0, t);
    }
    Piece { duration: t, coefficients }
}

#[derive(Debug, Clone, Copy, Default)]
struct PieceCheck {
    limits_ok: bool,
    inside: bool,
}

fn check_piece(p: &Piece, b: &crate::geometry::Aabb, lim: &DynamicLimits) -> PieceCheck {
    let mut out = PieceCheck { limits_ok: true, inside: true };
    for t in p.sample_times(MIN_STEP) {
        let s = p.sample(t);
        if s.velocity.norm() > lim.v_max * MARGIN
            || s.acceleration.norm() > lim.a_max * MARGIN
            || s.jerk.norm() > lim.j_max * MARGIN
            || s.pitch_rate.abs() > lim.omega_max * MARGIN
            || s.yaw_rate.abs() > lim.omega_max * MARGIN
        {
            out.limits_ok = false;
        }
        if !b.contains(&s.position, 1e-9) {
            out.inside = false;
        }
        if !out.limits_ok && !out.inside {
            break;
        }
    }
    out
}

/// Quintic pieces through the corridor knots with zero acceleration at every
/// knot. Junction velocities come from centered differences capped below the
/// limits; a piece leaving its box, or still infeasible after many dilations,
/// is brought to rest at both ends. Durations start from trapezoidal timing
/// and grow by the dilation factor until every piece passes.
pub fn generate_trajectory(corridor: &Corridor, limits: &DynamicLimits, params: &TrajectoryParams) -> Result<Trajectory> {
    limits.validate()?;
    params.validate()?;
    let knots = &corridor.knots;
    let m = knots.len().saturating_sub(1);
    if corridor.piece_box.len() != m {
        return Err(Error::InvalidParameter("corridor piece assignment does not match its knots".into()));
    }
    let mut durations: Vec<f64> = knots
        .windows(2)
        .map(|w| {
            let l = (w[1].position - w[0].position).norm();
            trapezoid_time(l, limits.v_max, limits.a_max)
                .max((w[1].pitch - w[0].pitch).abs() / limits.omega_max)
                .max((w[1].yaw - w[0].yaw).abs() / limits.omega_max)
                .max(MIN_STEP)
        })
        .collect();
    let mut vel = vec![[0.0; 5]; knots.len()];
    for k in 1..m {
        let dt = durations[k - 1] + durations[k];
        let mut v: Vec3 = (knots[k + 1].position - knots[k - 1].position) / dt;
        let cap = params.junction_speed_fraction * limits.v_max;
        if v.norm() > cap {
            v *= cap / v.norm();
        }
        let wcap = params.junction_speed_fraction * limits.omega_max;
        let pr = ((knots[k + 1].pitch - knots[k - 1].pitch) / dt).clamp(-wcap, wcap);
        let yr = ((knots[k + 1].yaw - knots[k - 1].yaw) / dt).clamp(-wcap, wcap);
        vel[k] = [v.x, v.y, v.z, pr, yr];
    }
    let mut dilations = vec![0usize; m];
    let mut dirty = vec![true; m];
    let mut pieces: Vec<Piece> = vec![Piece { duration: 0.0, coefficients: [[0.0; 6]; 5] }; m];
    for _ in 0..params.max_rounds {
        let checks: Vec<Option<PieceCheck>> = (0..m)
            .into_par_iter()
            .map(|i| {
                dirty[i].then(|| {
                    let p = fit(&knots[i], &knots[i + 1], &vel[i], &vel[i + 1], durations[i]);
                    let c = check_piece(&p, &corridor.boxes[corridor.piece_box[i]], limits);
                    (p, c)
                })
            })
            .collect::<Vec<_>>()
            .into_iter()
            .enumerate()
            .map(|(i, r)| {
                r.map(|(p, c)| {
                    pieces[i] = p;
                    c
                })
            })
            .collect();
        let mut next_dirty = vec![false; m];
        let mut all_ok = true;
        for (i, c) in checks.iter().enumerate() {
            let Some(c) = c else { continue };
            if c.limits_ok && c.inside {
                continue;
            }
            all_ok = false;
            next_dirty[i] = true;
            let rest = !c.inside || dilations[i] >= REST_AFTER;
            if rest {
                for k in [i, i + 1] {
                    if vel[k] != [0.0; 5] {
                        vel[k] = [0.0; 5];
                        if k > 0 {
                            next_dirty[k - 1] = true;
                        }
                        if k < m {
                            next_dirty[k] = true;
                        }
                    }
                }
            }
            if !c.limits_ok {
                durations[i] *= params.dilation;
                dilations[i] += 1;
            }
        }
        if all_ok && next_dirty.iter().all(|d| !d) {
            return Ok(Trajectory { total_time: pieces.iter().map(|p| p.duration).sum(), pieces });
        }
        dirty = next_dirty;
    }
    Err(Error::TrajectoryFailure(format!("limits not met after {} dilation rounds", params.max_rounds)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub samples: usize,
    pub max_speed: f64,
    pub max_acceleration: f64,
    pub max_jerk: f64,
    pub max_pitch_rate: f64,
    pub max_yaw_rate: f64,
    pub corridor_violations: usize,
    pub max_corridor_excess: f64,
    pub max_continuity_residual: f64,
    /// Largest yaw jump between consecutive knots.
    pub max_yaw_step: f64,
    pub max_waypoint_error: f64,
    pub velocity_ok: bool,
    pub acceleration_ok: bool,
    pub jerk_ok: bool,
    pub gimbal_ok: bool,
    pub corridor_ok: bool,
    pub continuity_ok: bool,
    pub waypoints_ok: bool,
    pub pass: bool,
}

fn box_excess(b: &crate::geometry::Aabb, p: &Vec3) -> f64 {
    (0..3).map(|k| (b.min[k] - p[k]).max(p[k] - b.max[k]).max(0.0)).fold(0.0, f64::max)
}

/// Samples every piece at `rate_hz` (plus both ends) and checks limits,
/// corridor containment, C2 continuity and knot interpolation, each within `tol`.
pub fn validate_trajectory(traj: &Trajectory, corridor: &Corridor, limits: &DynamicLimits, rate_hz: f64, tol: f64) -> FeasibilityReport {
    let step = 1.0 / rate_hz;
    let per_piece: Vec<(usize, [f64; 5], usize, f64)> = traj
        .pieces
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let b = corridor.piece_box.get(i).and_then(|&k| corridor.boxes.get(k));
            let n = (p.duration / step).ceil().max(1.0) as usize;
            let mut maxima = [0.0f64; 5];
            let (mut violations, mut excess) = (0, 0.0f64);
            for k in 0..=n {
                let s = p.sample((k as f64 * step).min(p.duration));
                for (m, v) in maxima.iter_mut().zip([
                    s.velocity.norm(),
                    s.acceleration.norm(),
                    s.jerk.norm(),
                    s.pitch_rate.abs(),
                    s.yaw_rate.abs(),
                ]) {
                    *m = m.max(v);
                }
                let e = b.map_or(f64::INFINITY, |b| box_excess(b, &s.position));
                if e > tol {
                    violations += 1;
                }
                excess = excess.max(e);
            }
            (n + 1, maxima, violations, excess)
        })
        .collect();
    let mut r = FeasibilityReport {
        samples: per_piece.iter().map(|x| x.0).sum(),
        max_speed: 0.0,
        max_acceleration: 0.0,
        max_jerk: 0.0,
        max_pitch_rate: 0.0,
        max_yaw_rate: 0.0,
        corridor_violations: per_piece.iter().map(|x| x.2).sum(),
        max_corridor_excess: per_piece.iter().map(|x| x.3).fold(0.0, f64::max),
        max_continuity_residual: 0.0,
        max_yaw_step: 0.0,
        max_waypoint_error: 0.0,
        velocity_ok: false,
        acceleration_ok: false,
        jerk_ok: false,
        gimbal_ok: false,
        corridor_ok: false,
        continuity_ok: false,
        waypoints_ok: false,
        pass: false,
    };
    for (_, m, _, _) in &per_piece {
        r.max_speed = r.max_speed.max(m[0]);
        r.max_acceleration = r.max_acceleration.max(m[1]);
        r.max_jerk = r.max_jerk.max(m[2]);
        r.max_pitch_rate = r.max_pitch_rate.max(m[3]);
        r.max_yaw_rate = r.max_yaw_rate.max(m[4]);
    }
    for w in traj.pieces.windows(2) {
        for ch in 0..5 {
            let a = poly_eval(&w[0].coefficients[ch], w[0].duration);
            let b = poly_eval(&w[1].coefficients[ch], 0.0);
            for d in 0..3 {
                r.max_continuity_residual = r.max_continuity_residual.max((a[d] - b[d]).abs());
            }
        }
    }
    let knots = &corridor.knots;
    for w in knots.windows(2) {
        r.max_yaw_step = r.max_yaw_step.max((w[1].yaw - w[0].yaw).abs());
    }
    let mut waypoint_err = if traj.pieces.len() + 1 == knots.len() || knots.len() <= 1 && traj.pieces.is_empty() { 0.0 } else { f64::INFINITY };
    for (i, p) in traj.pieces.iter().enumerate().take(knots.len().saturating_sub(1)) {
        let (s0, s1) = (p.sample(0.0), p.sample(p.duration));
        for (s, k) in [(s0, &knots[i]), (s1, &knots[i + 1])] {
            waypoint_err = waypoint_err
                .max((s.position - k.position).norm())
                .max((s.pitch - k.pitch).abs())
                .max((s.yaw - k.yaw).abs());
        }
    }
    r.max_waypoint_error = waypoint_err;
    r.velocity_ok = r.max_speed <= limits.v_max + tol;
    r.acceleration_ok = r.max_acceleration <= limits.a_max + tol;
    r.jerk_ok = r.max_jerk <= limits.j_max + tol;
    r.gimbal_ok = r.max_pitch_rate <= limits.omega_max + tol && r.max_yaw_rate <= limits.omega_max + tol;
    r.corridor_ok = r.corridor_violations == 0;
    r.continuity_ok = r.max_continuity_residual <= tol && r.max_yaw_step <= std::f64::consts::PI;
    r.waypoints_ok = r.max_waypoint_error <= tol;
    r.pass = r.velocity_ok && r.acceleration_ok && r.jerk_ok && r.gimbal_ok && r.corridor_ok && r.continuity_ok && r.waypoints_ok;
    r
}

impl FeasibilityReport {
    pub fn write_json<W: Write>(&self, w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(std::io::Error::other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, FlightSpace, OccupancyGrid, PointCloud};
    use std::f64::consts::FRAC_PI_2;

    fn knot(x: f64, y: f64, z: f64, yaw: f64) -> Knot {
        Knot { position: Vec3::new(x, y, z), pitch: 0.0, yaw, pose: None }
    }

    fn open_corridor(knots: Vec<Knot>) -> Corridor {
        let m = knots.len() - 1;
        Corridor { knots, boxes: vec![Aabb::new(Vec3::repeat(-50.0), Vec3::repeat(50.0))], piece_box: vec![0; m] }
    }

    #[test]
    fn quintic_meets_boundary_states() {
        let c = quintic(1.0, 0.5, -0.2, 3.0, -0.1, 0.3, 2.5);
        let s = poly_eval(&c, 0.0);
        let e = poly_eval(&c, 2.5);
        for (got, want) in [(s[0], 1.0), (s[1], 0.5), (s[2], -0.2), (e[0], 3.0), (e[1], -0.1), (e[2], 0.3)] {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn poly_derivatives_match_finite_differences() {
        let c = [0.3, -1.0, 0.5, 0.25, -0.1, 0.02];
        let h = 1e-5;
        for d in 0..3 {
            let num = (poly_eval(&c, 1.3 + h)[d] - poly_eval(&c, 1.3 - h)[d]) / (2.0 * h);
            assert!((num - poly_eval(&c, 1.3)[d + 1]).abs() < 1e-6);
        }
    }

    #[test]
    fn trapezoid_cases() {
        assert!((trapezoid_time(1.0, 2.0, 1.0) - 2.0).abs() < 1e-12);
        assert!((trapezoid_time(10.0, 2.0, 1.0) - 7.0).abs() < 1e-12);
    }

    #[test]
    fn rest_to_rest_meter_respects_jerk() {
        let c = open_corridor(vec![knot(0.0, 0.0, 0.0, 0.0), knot(1.0, 0.0, 0.0, 0.0)]);
        let lim = DynamicLimits::default();
        let t = generate_trajectory(&c, &lim, &TrajectoryParams::default()).unwrap();
        // A rest-to-rest quintic peaks at jerk 60 L / T^3.
        assert!(t.total_time >= (60.0 / lim.j_max).cbrt());
        assert!(validate_trajectory(&t, &c, &lim, 1000.0, 1e-6).pass);
    }

    #[test]
    fn pure_yaw_turn_is_rate_limited() {
        let c = open_corridor(vec![knot(0.0, 0.0, 0.0, 0.0), knot(0.0, 0.0, 0.0, FRAC_PI_2)]);
        let lim = DynamicLimits::default();
        let t = generate_trajectory(&c, &lim, &TrajectoryParams::default()).unwrap();
        assert!(t.total_time >= FRAC_PI_2);
        let r = validate_trajectory(&t, &c, &lim, 1000.0, 1e-6);
        assert!(r.pass && r.max_yaw_rate <= 1.0 + 1e-6);
    }

    #[test]
    fn halving_durations_is_flagged() {
        let c = open_corridor(vec![knot(0.0, 0.0, 0.0, 0.0), knot(3.0, 1.0, 0.0, 0.5), knot(6.0, 0.0, 1.0, 1.0), knot(8.0, 2.0, 1.0, 0.0)]);
        let lim = DynamicLimits::default();
        let t = generate_trajectory(&c, &lim, &TrajectoryParams::default()).unwrap();
        let ok = validate_trajectory(&t, &c, &lim, 1000.0, 1e-6);
        assert!(ok.pass, "{ok:?}");
        assert!(ok.max_continuity_residual < 1e-9);
        let fast = validate_trajectory(&t.time_scaled(0.5), &c, &lim, 1000.0, 1e-6);
        assert!(!fast.velocity_ok || !fast.acceleration_ok || !fast.jerk_ok);
        assert!(!fast.pass);
    }

    #[test]
    fn moved_piece_leaves_its_box() {
        let knots = vec![knot(0.0, 0.0, 0.0, 0.0), knot(1.0, 0.0, 0.0, 0.0)];
        let c = Corridor { knots, boxes: vec![Aabb::new(Vec3::new(-0.5, -0.5, -0.5), Vec3::new(1.5, 0.5, 0.5))], piece_box: vec![0] };
        let lim = DynamicLimits::default();
        let mut t = generate_trajectory(&c, &lim, &TrajectoryParams::default()).unwrap();
        assert!(validate_trajectory(&t, &c, &lim, 1000.0, 1e-6).corridor_ok);
        t.pieces[0].coefficients[1][0] += 2.0;
        let r = validate_trajectory(&t, &c, &lim, 1000.0, 1e-6);
        assert!(!r.corridor_ok && r.corridor_violations > 0);
    }

    #[test]
    fn relaxing_speed_never_slows_down() {
        let c = open_corridor(vec![knot(0.0, 0.0, 0.0, 0.0), knot(6.0, 0.0, 0.0, 0.0), knot(12.0, 3.0, 0.0, 0.0)]);
        let slow = DynamicLimits { v_max: 1.0, a_max: 2.0, j_max: 4.0, omega_max: 1.0 };
        let fast = DynamicLimits { v_max: 2.0, ..slow };
        let p = TrajectoryParams::default();
        let ts = generate_trajectory(&c, &slow, &p).unwrap().total_time;
        let tf = generate_trajectory(&c, &fast, &p).unwrap().total_time;
        assert!(tf <= ts + 1e-9, "{tf} > {ts}");
    }

    #[test]
    fn tight_corridor_trajectory_stays_inside() {
        let mut pts = Vec::new();
        for i in 0..=60 {
            for j in 0..=20 {
                let (x, z) = (i as f64 * 0.1, j as f64 * 0.1);
                pts.push(Vec3::new(x, 0.0, z));
                pts.push(Vec3::new(x, 1.6, z));
            }
        }
        let grid = OccupancyGrid::build(&PointCloud::new(pts), 0.1, 3).unwrap();
        let flight = FlightSpace::new(&grid, 0.3);
        let knots = vec![knot(0.5, 0.8, 1.0, 0.0), knot(2.0, 1.0, 1.0, 0.0), knot(4.0, 0.6, 1.2, 0.0), knot(5.5, 0.8, 1.0, 0.0)];
        let c = build_corridors(&knots, &flight, 3.0).unwrap();
        let lim = DynamicLimits::default();
        let t = generate_trajectory(&c, &lim, &TrajectoryParams::default()).unwrap();
        let r = validate_trajectory(&t, &c, &lim, 1000.0, 1e-6);
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn csv_and_json_exports() {
        let c = open_corridor(vec![knot(0.0, 0.0, 0.0, 0.0), knot(1.0, 0.0, 0.0, 0.0)]);
        let t = generate_trajectory(&c, &DynamicLimits::default(), &TrajectoryParams::default()).unwrap();
        let mut csv = Vec::new();
        t.write_csv(&mut csv, 10.0).unwrap();
        let text = String::from_utf8(csv).unwrap();
        assert_eq!(text.lines().next(), Some("t,x,y,z,pitch,yaw,vx,vy,vz"));
        let last: Vec<f64> = text.lines().last().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
        assert!((last[1] - 1.0).abs() < 1e-6);
        let mut js = Vec::new();
        t.write_json(&mut js).unwrap();
        let back: Trajectory = serde_json::from_slice(&js).unwrap();
        assert_eq!(back.pieces.len(), 1);
    }
}
