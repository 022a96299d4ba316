//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails. Expected values come from oracles written here.

use nalgebra::Rotation3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelcover::config::PipelineConfig;
use skelcover::decomposition::{decompose, Branch};
use skelcover::geometry::{
    birc_visible_counted, raycast, unidirectional_visible_counted, Aabb, FlightSpace, OccupancyGrid, PointCloud, Vec3, VoxelState,
};
use skelcover::pipeline::{compute_coverage_rate, plan_prepared, prepare, run_ablation, run_pipeline};
use skelcover::planner::{refine_path, CoveragePath, DynamicLimits, PathCache, PlanMode, Pose, RefineParams};
use skelcover::scenes::{synth_scene, SceneKind, SceneParams};
use skelcover::skeleton::{extract_skeleton, SkeletonParams};
use skelcover::trajectory::{generate_trajectory, Corridor, Knot, Trajectory, TrajectoryParams};
use skelcover::tsp::{solve, CostMatrix, TourKind};
use skelcover::viewpoints::CoverageContext;
use std::collections::HashSet;
use std::f64::consts::TAU;
use std::panic::AssertUnwindSafe;
use std::time::Instant;

type Verdict = (bool, String);
type Criterion = (&'static str, fn() -> Verdict);

fn cloud_of(kind: SceneKind, noise: f64, seed: u64) -> PointCloud {
    synth_scene(kind, &SceneParams { n_points: 20_000, noise }, seed).unwrap().0
}

// 1. Bidirectional visibility against the unidirectional walk.

fn random_grid(rng: &mut ChaCha8Rng, density: f64) -> OccupancyGrid {
    let mut g = OccupancyGrid::new(Vec3::zeros(), 1.0, [64, 64, 64]).unwrap();
    for i in 0..64 {
        for j in 0..64 {
            for k in 0..64 {
                if rng.gen_bool(density) {
                    g.set_occupied([i, j, k]);
                }
            }
        }
    }
    g
}

fn criterion_visibility() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut total, mut agree) = (0, 0);
    let (mut far_rays, mut far_birc, mut far_uni, mut worst) = (0usize, 0usize, 0usize, 0.0f64);
    for gi in 0..50 {
        let g = random_grid(&mut rng, 0.002 + 0.0006 * gi as f64);
        for _ in 0..200 {
            let a = Vec3::new(rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0));
            let b = Vec3::new(rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0));
            let (bv, bn) = birc_visible_counted(&g, &a, &b).unwrap();
            let (uv, un) = unidirectional_visible_counted(&g, &a, &b).unwrap();
            total += 1;
            agree += usize::from(bv == uv);
            // Blocked only within the last tenth, seen from `a`.
            let walk = raycast(&g, &a, &b).unwrap().traversed;
            let n = walk.len();
            if n < 12 {
                continue;
            }
            let blocked: Vec<usize> = (1..n - 1).filter(|&i| g.state(walk[i]) == VoxelState::Occupied).collect();
            if blocked.first().is_some_and(|&i| i as f64 >= 0.9 * (n - 1) as f64) {
                far_rays += 1;
                far_birc += bn;
                far_uni += un;
                worst = worst.max(bn as f64 / un as f64);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let ratio = far_birc as f64 / far_uni.max(1) as f64;
    let pass = total == 10_000 && agree == total && far_rays > 0 && worst <= 0.55 && secs < 10.0;
    (pass, format!("{agree}/{total} agree; {far_rays} far-blocked rays, visit ratio total {ratio:.3} worst {worst:.3}; {secs:.2} s"))
}

// 2. Skeleton accuracy.

fn criterion_skeleton() -> Verdict {
    let params = SkeletonParams::default();
    let mut notes = Vec::new();
    let mut pass = true;

    let t = Instant::now();
    let sk = extract_skeleton(&cloud_of(SceneKind::Cylinder, 0.01, 7), &params).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let axis_dist = |p: &Vec3| {
        let z = p.z.clamp(0.0, 10.0);
        (Vec3::new(0.0, 0.0, z) - p).norm()
    };
    let v = &sk.graph.vertices;
    let near = v.iter().filter(|p| axis_dist(p) <= 0.15).count() as f64 / v.len().max(1) as f64;
    pass &= near >= 0.95 && secs < 10.0;
    notes.push(format!("cylinder {:.1}% near axis ({:.1} s)", 100.0 * near, secs));

    let t = Instant::now();
    let sk = extract_skeleton(&cloud_of(SceneKind::YTube, 0.01, 7), &params).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let deg3 = sk.graph.degrees().iter().filter(|&&d| d == 3).count();
    pass &= deg3 == 1 && secs < 10.0;
    notes.push(format!("y_tube {deg3} degree-3 ({secs:.1} s)"));

    let t = Instant::now();
    let sk = extract_skeleton(&cloud_of(SceneKind::Torus, 0.01, 7), &params).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let g = &sk.graph;
    // independent cycles of a graph: E - V + C
    let cycles = g.edges.len() as i64 - g.vertices.len() as i64 + g.component_count() as i64;
    pass &= cycles == 1 && g.component_count() == 1 && secs < 10.0;
    notes.push(format!("torus {cycles} cycle(s), {} component(s) ({secs:.1} s)", g.component_count()));
    (pass, notes.join("; "))
}

// 3. Decomposition.

/// Surface samples of two tubes meeting at a right angle.
fn l_bend_cloud(n: usize, seed: u64) -> PointCloud {
    let r = 0.5;
    let tubes = [(Vec3::new(-4.0, 0.0, 0.0), Vec3::new(0.5 * r, 0.0, 0.0)), (Vec3::new(0.0, -0.5 * r, 0.0), Vec3::new(0.0, 4.0, 0.0))];
    let inside = |p: &Vec3, (a, b): &(Vec3, Vec3)| {
        let d = (b - a).normalize();
        let s = (p - a).dot(&d);
        s > 0.0 && s < (b - a).norm() && (p - a - d * s).norm() < r - 1e-9
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lengths: Vec<f64> = tubes.iter().map(|(a, b)| (b - a).norm()).collect();
    let mut pts = Vec::with_capacity(n);
    while pts.len() < n {
        let k = usize::from(rng.gen_range(0.0..lengths[0] + lengths[1]) >= lengths[0]);
        let (a, b) = tubes[k];
        let d = (b - a).normalize();
        let u = d.cross(&Vec3::z()).try_normalize(1e-9).unwrap_or_else(|| d.cross(&Vec3::x()).normalize());
        let w = d.cross(&u);
        let th: f64 = rng.gen_range(0.0..TAU);
        let p = a + d * rng.gen_range(0.0..lengths[k]) + (u * th.cos() + w * th.sin()) * r;
        if !inside(&p, &tubes[1 - k]) {
            pts.push(p);
        }
    }
    PointCloud::new(pts)
}

fn criterion_decomposition() -> Verdict {
    let cfg = PipelineConfig::default();
    let mut pass = true;
    let mut notes = Vec::new();
    for (name, cloud, expect) in [("y_tube", cloud_of(SceneKind::YTube, 0.0, 3), 3), ("l_bend", l_bend_cloud(20_000, 3), 2)] {
        let sk = extract_skeleton(&cloud, &cfg.skeleton).unwrap();
        let d = decompose(&cloud, &sk.graph, &cfg.decomposition).unwrap();
        let mut seen = vec![0usize; cloud.len()];
        for s in &d.subspaces {
            for &p in &s.allocated_points {
                seen[p] += 1;
            }
        }
        let partition_ok = seen.iter().all(|&c| c == 1)
            && d.labels.len() == cloud.len()
            && d.subspaces.iter().all(|s| s.allocated_points.iter().all(|&p| d.labels[p] == s.id));
        let sum: usize = d.subspaces.iter().map(|s| s.allocated_points.len()).sum();
        pass &= d.branches.len() == expect && partition_ok && sum == cloud.len();
        notes.push(format!("{name} {} branches (want {expect}), partition {}", d.branches.len(), if partition_ok { "exact" } else { "broken" }));
    }
    (pass, notes.join("; "))
}

// 4. Viewpoint coverage.

/// FoV test in the camera frame: x forward, y left, z up.
fn sees_in_fov(p: &Vec3, pitch: f64, yaw: f64, target: &Vec3, fov_h: f64, fov_w: f64) -> bool {
    let cam = Rotation3::from_axis_angle(&Vec3::z_axis(), yaw) * Rotation3::from_axis_angle(&Vec3::y_axis(), -pitch);
    let c = cam.inverse() * (target - p);
    c.x > 0.0 && c.y.atan2(c.x).abs() <= fov_h / 2.0 + 1e-9 && c.z.atan2(c.x).abs() <= fov_w / 2.0 + 1e-9
}

fn criterion_coverage() -> Verdict {
    let cfg = PipelineConfig::default();
    let sensor = cfg.viewpoints.sensor();
    let mut pass = true;
    let mut notes = Vec::new();
    for kind in [SceneKind::Cylinder, SceneKind::YTube, SceneKind::Tower] {
        let cloud = cloud_of(kind, 0.0, 5);
        let prep = prepare(&cfg, &cloud).unwrap();
        let grid = &prep.grid;
        let flight = FlightSpace::new(grid, cfg.grid.clearance);
        let ctx = CoverageContext::new(&flight, sensor);
        let coverable = ctx.coverable(cfg.viewpoints.distance());
        let vps = &prep.viewpoints.viewpoints;
        let mut seen = HashSet::new();
        for &l in coverable.keys() {
            let c = grid.center(grid.unlinear(l));
            let hit = vps.iter().any(|v| {
                (c - v.position).norm() <= sensor.d_v
                    && sees_in_fov(&v.position, v.pitch, v.yaw, &c, sensor.fov_h, sensor.fov_w)
                    && unidirectional_visible_counted(grid, &v.position, &c).unwrap().0
            });
            if hit {
                seen.insert(l);
            }
        }
        let rate = 100.0 * seen.len() as f64 / coverable.len() as f64;
        let reported = compute_coverage_rate(vps, &ctx, cfg.viewpoints.distance());
        let ratio = vps.len() as f64 / prep.viewpoints.initial.len() as f64;
        pass &= rate >= 95.0 && ratio <= 0.5 && (rate - reported).abs() < 0.5;
        notes.push(format!("{kind} {rate:.1}% (library {reported:.1}%), {} of {} viewpoints kept", vps.len(), prep.viewpoints.initial.len()));
    }
    (pass, notes.join("; "))
}

// 5. Tour quality.

/// Exhaustive search over all orders with 0 first (and n - 1 last for paths).
fn oracle_tour(m: &CostMatrix) -> f64 {
    fn rec(m: &CostMatrix, order: &mut Vec<usize>, used: &mut [bool], cost: f64, best: &mut f64) {
        let n = m.n();
        let open = m.kind == TourKind::OpenPath;
        let inner = if open { n - 1 } else { n };
        if order.len() == inner {
            let last = *order.last().unwrap();
            let c = cost + if open { m.get(last, n - 1) } else { m.get(last, 0) };
            *best = best.min(c);
            return;
        }
        for k in 1..inner {
            if !used[k] {
                let c = cost + m.get(*order.last().unwrap(), k);
                if c < *best {
                    used[k] = true;
                    order.push(k);
                    rec(m, order, used, c, best);
                    order.pop();
                    used[k] = false;
                }
            }
        }
    }
    let mut best = f64::INFINITY;
    rec(m, &mut vec![0], &mut vec![false; m.n()], 0.0, &mut best);
    best
}

fn criterion_tsp() -> Verdict {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    let (mut instances, mut optimal, mut within, mut forbidden_used, mut worst) = (0, 0, 0, 0, 1.0f64);
    for n in 4..=9 {
        for kind in [TourKind::ClosedAtsp, TourKind::OpenPath] {
            let mut made = 0;
            while made < 100 {
                let m = CostMatrix::from_fn(n, kind, |_, _| if rng.gen_bool(0.1) { f64::INFINITY } else { rng.gen_range(1.0..100.0) }).unwrap();
                let best = oracle_tour(&m);
                if !best.is_finite() {
                    continue;
                }
                made += 1;
                instances += 1;
                let tour = solve(&m, instances as u64).unwrap();
                let arcs_ok = tour.order.windows(2).all(|w| m.get(w[0], w[1]).is_finite())
                    && (kind == TourKind::OpenPath || m.get(*tour.order.last().unwrap(), tour.order[0]).is_finite());
                let valid = tour.order[0] == 0
                    && (kind == TourKind::ClosedAtsp || *tour.order.last().unwrap() == n - 1)
                    && tour.order.iter().copied().collect::<HashSet<_>>().len() == n
                    && tour.order.len() == n;
                if !arcs_ok || !valid {
                    forbidden_used += 1;
                }
                let cost = m.tour_cost(&tour.order);
                worst = worst.max(cost / best);
                optimal += usize::from(cost <= best + 1e-9);
                within += usize::from(cost <= 1.05 * best + 1e-9);
            }
        }
    }
    let secs = t.elapsed().as_secs_f64();
    let pass = within == instances && optimal as f64 >= 0.9 * instances as f64 && forbidden_used == 0 && secs < 30.0;
    (
        pass,
        format!("{instances} instances: {optimal} optimal, {within} within 1.05x (worst {worst:.4}), {forbidden_used} invalid; {secs:.2} s"),
    )
}

// 6. Refinement never increases cost.

fn crossing_case() -> (f64, f64) {
    let cloud = PointCloud::new(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(12.0, 12.0, 4.0)]);
    let grid = OccupancyGrid::build(&cloud, 0.25, 4).unwrap();
    let flight = FlightSpace::new(&grid, 0.3);
    let vps: Vec<_> = [(4.0, 5.0), (6.0, 5.0), (5.0, 4.0), (5.0, 6.0), (5.0, 8.0)]
        .iter()
        .map(|&(x, y)| skelcover::viewpoints::Viewpoint::new(Vec3::new(x, y, 2.0), 0.0, 0.0, 0))
        .collect();
    // two branches meeting at (5, 5, 2); the visiting order crosses it twice
    let branches = vec![
        Branch { id: 0, edges: vec![(0, 1)], reference: Vec3::x() },
        Branch { id: 1, edges: vec![(1, 2)], reference: Vec3::y() },
    ];
    let verts = vec![Vec3::new(0.0, 5.0, 2.0), Vec3::new(5.0, 5.0, 2.0), Vec3::new(5.0, 10.0, 2.0)];
    let mut nodes: Vec<Pose> = vps.iter().map(Pose::from).collect();
    nodes.push(Pose::at(Vec3::new(2.0, 5.0, 2.0)));
    let mut cache = PathCache::new(&flight, nodes);
    let lim = DynamicLimits::default();
    let before = CoveragePath::from_sequence(&mut cache, &vps, &[5, 0, 1, 2, 3, 4], &lim).unwrap();
    let params = RefineParams { r_jc: 2.0, iterations: 500, seed: 1 };
    let (after, _) = refine_path(&before, &mut cache, &vps, 5, &branches, &verts, &params, &lim).unwrap();
    (before.total_cost, after.total_cost)
}

fn criterion_refine() -> Verdict {
    let mut runs = 0;
    let mut monotone = 0;
    let mut gains = Vec::new();
    'outer: for seed in 1..=9u64 {
        for kind in SceneKind::ALL {
            if runs == 50 {
                break 'outer;
            }
            let cfg = PipelineConfig { seed, ..PipelineConfig::default() };
            let cloud = cloud_of(kind, 0.005, seed);
            let prep = prepare(&cfg, &cloud).unwrap();
            let (full, diag, _) = plan_prepared(&cfg, &prep, PlanMode::Full, None).unwrap();
            let (nr, _, _) = plan_prepared(&cfg, &prep, PlanMode::Nr, None).unwrap();
            runs += 1;
            let ok = full.total_cost <= nr.total_cost + 1e-9 && diag.cost_after_refine <= diag.cost_before_refine + 1e-9;
            monotone += usize::from(ok);
            gains.push(100.0 * (nr.total_cost - full.total_cost) / nr.total_cost);
        }
    }
    let (before, after) = crossing_case();
    let mean_gain = gains.iter().sum::<f64>() / gains.len() as f64;
    let pass = runs == 50 && monotone == runs && after < before;
    (pass, format!("{monotone}/{runs} runs monotone (mean gain {mean_gain:.2}%); crossing case {before:.3} -> {after:.3} s"))
}

// 7. Hierarchical planning against one global tour.

fn criterion_ablation() -> Verdict {
    let mut cfg = PipelineConfig::default();
    cfg.viewpoints.d_v = 2.5;
    let cloud = cloud_of(SceneKind::PipeNetwork, 0.0, 42);
    let prep = prepare(&cfg, &cloud).unwrap();
    let vps = prep.viewpoints.viewpoints.len();
    let subspaces = prep.viewpoints.per_subspace.values().filter(|v| !v.is_empty()).count();
    let (mut full_ms, mut go_ms) = (f64::INFINITY, f64::INFINITY);
    let (mut full_cost, mut go_cost) = (0.0, 0.0);
    for _ in 0..3 {
        let rows = run_ablation(&cfg, &prep, &[PlanMode::Full, PlanMode::Go]).unwrap();
        full_ms = full_ms.min(rows[0].plan_ms);
        go_ms = go_ms.min(rows[1].plan_ms);
        full_cost = rows[0].path_cost_s;
        go_cost = rows[1].path_cost_s;
    }
    let pass = vps >= 60 && subspaces >= 4 && full_ms < go_ms && full_cost <= 1.3 * go_cost;
    (
        pass,
        format!(
            "{vps} viewpoints in {subspaces} subspaces; full {full_ms:.1} ms / cost {full_cost:.2}, go {go_ms:.1} ms / cost {go_cost:.2} (ratio {:.3})",
            full_cost / go_cost
        ),
    )
}

// 8. Worker count does not change outputs.

fn criterion_determinism() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let cloud = cloud_of(SceneKind::PipeNetwork, 0.005, 8);
    let files = ["skeleton.txt", "labels.txt", "viewpoints.csv", "path.csv", "path.obj", "trajectory.csv", "trajectory.json"];
    let mut outputs: Vec<Vec<Vec<u8>>> = Vec::new();
    let mut paths = Vec::new();
    for workers in [1, 4, 8] {
        let cfg = PipelineConfig { workers, seed: 8, ..PipelineConfig::default() };
        let out = dir.path().join(format!("w{workers}"));
        let (art, _) = run_pipeline(&cfg, &cloud, PlanMode::Full, Some(&out)).unwrap();
        outputs.push(files.iter().map(|f| std::fs::read(out.join(f)).unwrap()).collect());
        paths.push(art.path);
    }
    let same_files = outputs.windows(2).all(|w| w[0] == w[1]);
    let same_paths = paths.windows(2).all(|w| w[0] == w[1]);
    (same_files && same_paths, format!("{} export files and plan compared across workers 1, 4, 8", files.len()))
}

// 9. Trajectory feasibility.

/// Shortest rest-to-rest time over `dist` under speed, acceleration and jerk
/// bounds. The fastest profile is symmetric about its midpoint, so the first
/// half pushes jerk as hard as the bounds allow while still reaching zero
/// acceleration at the midpoint; bisection on the duration.
fn jerk_limited_time(dist: f64, v: f64, a: f64, j: f64) -> f64 {
    let reach = |total: f64| {
        let half = total / 2.0;
        let steps = 20_000;
        let dt = half / steps as f64;
        let (mut x, mut vel, mut acc) = (0.0f64, 0.0f64, 0.0f64);
        for s in 0..steps {
            let left = half - s as f64 * dt;
            let must_release = acc > 0.0 && (acc / j >= left - 1e-12 || vel + acc * acc / (2.0 * j) >= v);
            let jerk = if must_release {
                -j.min(acc / dt)
            } else if acc < a {
                j.min((a - acc) / dt)
            } else {
                0.0
            };
            x += vel * dt + acc * dt * dt / 2.0 + jerk * dt * dt * dt / 6.0;
            vel += acc * dt + jerk * dt * dt / 2.0;
            acc += jerk * dt;
        }
        2.0 * x
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while reach(hi) < dist {
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if reach(mid) >= dist {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Maxima of a trajectory sampled on a global 1 kHz clock.
struct Sampled {
    speed: f64,
    accel: f64,
    jerk: f64,
    gimbal: f64,
    excess: f64,
    knot_error: f64,
    fd_error: f64,
}

fn box_excess(b: &Aabb, p: &Vec3) -> f64 {
    (0..3).map(|k| (b.min[k] - p[k]).max(p[k] - b.max[k]).max(0.0)).fold(0.0, f64::max)
}

fn sample_trajectory(traj: &Trajectory, corridor: &Corridor) -> Sampled {
    let mut s = Sampled { speed: 0.0, accel: 0.0, jerk: 0.0, gimbal: 0.0, excess: 0.0, knot_error: 0.0, fd_error: 0.0 };
    let mut starts = vec![0.0];
    for p in &traj.pieces {
        starts.push(starts.last().unwrap() + p.duration);
    }
    let n = (traj.total_time * 1000.0).ceil() as usize;
    let h = 1e-4;
    for k in 0..=n {
        let t = (k as f64 / 1000.0).min(traj.total_time);
        let piece = starts.partition_point(|&s0| s0 <= t).saturating_sub(1).min(traj.pieces.len() - 1);
        let p = &traj.pieces[piece];
        let tau = (t - starts[piece]).clamp(0.0, p.duration);
        let x = p.sample(tau);
        s.speed = s.speed.max(x.velocity.norm());
        s.accel = s.accel.max(x.acceleration.norm());
        s.jerk = s.jerk.max(x.jerk.norm());
        s.gimbal = s.gimbal.max(x.pitch_rate.abs()).max(x.yaw_rate.abs());
        s.excess = s.excess.max(box_excess(&corridor.boxes[corridor.piece_box[piece]], &x.position));
        if tau > h && tau + h < p.duration {
            let fd = (p.sample(tau + h).position - p.sample(tau - h).position) / (2.0 * h);
            s.fd_error = s.fd_error.max((fd - x.velocity).norm());
        }
    }
    for (i, p) in traj.pieces.iter().enumerate() {
        for (x, knot) in [(p.sample(0.0), &corridor.knots[i]), (p.sample(p.duration), &corridor.knots[i + 1])] {
            s.knot_error = s.knot_error.max((x.position - knot.position).norm()).max((x.pitch - knot.pitch).abs()).max((x.yaw - knot.yaw).abs());
        }
    }
    s
}

fn criterion_trajectory() -> Verdict {
    let tol = 1e-6;
    let lim = DynamicLimits::default();
    let mut pass = true;
    let mut worst = Sampled { speed: 0.0, accel: 0.0, jerk: 0.0, gimbal: 0.0, excess: 0.0, knot_error: 0.0, fd_error: 0.0 };
    let mut checked = 0;
    for kind in SceneKind::ALL {
        let cfg = PipelineConfig::default();
        let (art, _) = run_pipeline(&cfg, &cloud_of(kind, 0.0, 42), PlanMode::Full, None).unwrap();
        let s = sample_trajectory(&art.trajectory, &art.corridor);
        pass &= art.corridor.knots.len() == art.trajectory.pieces.len() + 1;
        worst = Sampled {
            speed: worst.speed.max(s.speed),
            accel: worst.accel.max(s.accel),
            jerk: worst.jerk.max(s.jerk),
            gimbal: worst.gimbal.max(s.gimbal),
            excess: worst.excess.max(s.excess),
            knot_error: worst.knot_error.max(s.knot_error),
            fd_error: worst.fd_error.max(s.fd_error),
        };
        checked += 1;
    }
    pass &= worst.speed <= lim.v_max + tol
        && worst.accel <= lim.a_max + tol
        && worst.jerk <= lim.j_max + tol
        && worst.gimbal <= lim.omega_max + tol
        && worst.excess <= tol
        && worst.knot_error <= tol
        && worst.fd_error <= 1e-4;

    let knot = |x: f64| Knot { position: Vec3::new(x, 0.0, 0.0), pitch: 0.0, yaw: 0.0, pose: None };
    let corridor = Corridor {
        knots: vec![knot(0.0), knot(1.0)],
        boxes: vec![Aabb::new(Vec3::repeat(-10.0), Vec3::repeat(10.0))],
        piece_box: vec![0],
    };
    let one = generate_trajectory(&corridor, &lim, &TrajectoryParams::default()).unwrap();
    let bound = jerk_limited_time(1.0, lim.v_max, lim.a_max, lim.j_max);
    let rest = sample_trajectory(&one, &corridor);
    let rest_ok = one.total_time >= bound && rest.jerk <= lim.j_max + tol && rest.accel <= lim.a_max + tol && rest.speed <= lim.v_max + tol;
    pass &= rest_ok;
    (
        pass,
        format!(
            "{checked} scene trajectories: max |v| {:.4}, |a| {:.4}, |j| {:.4}, gimbal {:.4}, box excess {:.1e}, knot error {:.1e}; 1 m rest-to-rest {:.3} s vs bound {bound:.3} s",
            worst.speed, worst.accel, worst.jerk, worst.gimbal, worst.excess, worst.knot_error, one.total_time
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("bidirectional visibility", criterion_visibility),
        ("skeleton accuracy", criterion_skeleton),
        ("decomposition", criterion_decomposition),
        ("viewpoint coverage", criterion_coverage),
        ("tour quality", criterion_tsp),
        ("refinement monotonicity", criterion_refine),
        ("hierarchical vs global", criterion_ablation),
        ("parallel determinism", criterion_determinism),
        ("trajectory feasibility", criterion_trajectory),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|k| name.contains(k.as_str())) {
            continue;
        }
        let (pass, detail) = match std::panic::catch_unwind(AssertUnwindSafe(f)) {
            Ok(v) => v,
            Err(e) => (false, format!("panicked: {}", e.downcast_ref::<String>().cloned().unwrap_or_default())),
        };
        failed += usize::from(!pass);
        println!("{} criterion {}: {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
