//! Internal-space labeling, skeleton-guided viewpoint sampling and the
//! gravitation-like viewpoint reduction.

mod coverage;

pub use coverage::{assign_voxels, icosphere, look_angles, view_direction, CoverageContext};

use crate::decomposition::Subspace;
use crate::error::{Error, Result};
use crate::geometry::{raycast, signed_angle_diff, wrap_angle, FlightSpace, KdTree, OccupancyGrid, PointCloud, Vec3};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViewpointState {
    Active,
    Dormant,
}

/// 5-DoF sensor pose: position, pitch (positive up), yaw, owning subspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Viewpoint {
    pub position: Vec3,
    pub pitch: f64,
    pub yaw: f64,
    pub subspace: usize,
    /// Linear indices of covered Occupied voxels, ascending.
    pub covered: Vec<usize>,
    pub state: ViewpointState,
}

impl Viewpoint {
    pub fn new(position: Vec3, pitch: f64, yaw: f64, subspace: usize) -> Self {
        Self { position, pitch, yaw, subspace, covered: Vec::new(), state: ViewpointState::Active }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SamplingRay {
    pub start: Vec3,
    /// Linear index of the Occupied voxel the ray starts in.
    pub voxel: usize,
    pub direction: Vec3,
    pub subspace: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorModel {
    /// Horizontal field of view (radians).
    pub fov_h: f64,
    /// Vertical field of view (radians).
    pub fov_w: f64,
    pub d_v: f64,
    pub pitch_min: f64,
    pub pitch_max: f64,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            fov_h: 75f64.to_radians(),
            fov_w: 55f64.to_radians(),
            d_v: 3.0,
            pitch_min: -90f64.to_radians(),
            pitch_max: 70f64.to_radians(),
        }
    }
}

impl SensorModel {
    pub fn validate(&self) -> Result<()> {
        let pi = std::f64::consts::PI;
        if !(self.fov_h > 0.0 && self.fov_h < pi && self.fov_w > 0.0 && self.fov_w < pi) {
            return Err(Error::InvalidParameter("field of view angles must be in (0, 180) degrees".into()));
        }
        if !(self.d_v > 0.0) || !self.d_v.is_finite() {
            return Err(Error::InvalidParameter(format!("visible distance must be positive, got {}", self.d_v)));
        }
        if !(self.pitch_min < self.pitch_max) {
            return Err(Error::InvalidParameter("gimbal pitch range is empty".into()));
        }
        Ok(())
    }

    /// Neighborhood radius of the reduction step.
    pub fn query_radius(&self) -> f64 {
        self.d_v * (self.fov_h.min(self.fov_w) / 2.0).tan()
    }

    pub fn pitch_ok(&self, pitch: f64) -> bool {
        pitch >= self.pitch_min - 1e-12 && pitch <= self.pitch_max + 1e-12
    }

    /// Inside the rectangular FoV pyramid of a pose (range not checked).
    pub fn in_fov(&self, p: &Vec3, pitch: f64, yaw: f64, target: &Vec3) -> bool {
        let w = target - p;
        let f = view_direction(pitch, yaw);
        let right = Vec3::new(-yaw.sin(), yaw.cos(), 0.0);
        let up = f.cross(&right);
        let z = w.dot(&f);
        if z <= 0.0 {
            return w.norm() == 0.0;
        }
        let h = w.dot(&right).atan2(z).abs();
        let v = w.dot(&up).atan2(z).abs();
        h <= self.fov_h / 2.0 + 1e-12 && v <= self.fov_w / 2.0 + 1e-12
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ViewpointParams {
    pub fov_deg: [f64; 2],
    pub d_v: f64,
    pub pitch_range_deg: [f64; 2],
    /// Sampling distance; defaults to 0.8 * d_v.
    pub sample_distance: Option<f64>,
    pub max_rounds: usize,
}

impl Default for ViewpointParams {
    fn default() -> Self {
        Self { fov_deg: [75.0, 55.0], d_v: 3.0, pitch_range_deg: [-90.0, 70.0], sample_distance: None, max_rounds: 5 }
    }
}

impl ViewpointParams {
    pub fn sensor(&self) -> SensorModel {
        SensorModel {
            fov_h: self.fov_deg[0].to_radians(),
            fov_w: self.fov_deg[1].to_radians(),
            d_v: self.d_v,
            pitch_min: self.pitch_range_deg[0].to_radians(),
            pitch_max: self.pitch_range_deg[1].to_radians(),
        }
    }

    pub fn distance(&self) -> f64 {
        self.sample_distance.unwrap_or(0.8 * self.d_v)
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor().validate()?;
        let d = self.distance();
        if !(d > 0.0) || d > self.d_v {
            return Err(Error::InvalidParameter(format!("sample distance must be in (0, d_v], got {d}")));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RayLabeling {
    pub rays: Vec<SamplingRay>,
    /// Casts that never met an Occupied voxel.
    pub missed: usize,
    pub internal_marked: usize,
}

/// Casts from every oriented point to its allocated points, marking the free
/// voxels before the surface Internal and emitting one sampling ray per cast.
pub fn label_internal_and_rays(grid: &mut OccupancyGrid, cloud: &PointCloud, subspaces: &[Subspace]) -> RayLabeling {
    let mut out = RayLabeling::default();
    let planes: Vec<_> = subspaces.iter().flat_map(|s| s.planes.iter()).collect();
    if planes.is_empty() {
        return out;
    }
    let tree = KdTree::new(&planes.iter().map(|o| o.position).collect::<Vec<_>>());
    for s in subspaces {
        // each point is cast from the nearest oriented point of its own subspace
        let own: Vec<usize> = (0..planes.len()).filter(|&k| planes[k].branch == s.id).collect();
        if own.is_empty() {
            continue;
        }
        for &i in &s.allocated_points {
            let a = cloud.points[i];
            let o = tree
                .knn(&a, planes.len().min(32))
                .into_iter()
                .find(|k| planes[*k].branch == s.id)
                .unwrap_or_else(|| {
                    *own.iter().min_by(|&&x, &&y| (planes[x].position - a).norm_squared().total_cmp(&(planes[y].position - a).norm_squared())).unwrap()
                });
            let origin = planes[o].position;
            let Ok(hit) = raycast(grid, &origin, &a) else {
                out.missed += 1;
                continue;
            };
            let (Some(first), Some(t)) = (hit.first_occupied, hit.entry_t) else {
                out.missed += 1;
                continue;
            };
            for v in hit.traversed.iter().take_while(|v| **v != first) {
                if grid.mark_internal(*v) {
                    out.internal_marked += 1;
                }
            }
            let d = a - origin;
            if d.norm() == 0.0 {
                out.missed += 1;
                continue;
            }
            out.rays.push(SamplingRay { start: origin + d * t, voxel: grid.linear(first), direction: d.normalize(), subspace: s.id });
        }
    }
    out
}

/// Merges rays that cross the surface in the same voxel: the first ray's
/// start and subspace, the mean direction.
pub fn dedup_rays(rays: &[SamplingRay]) -> Vec<SamplingRay> {
    let mut groups: BTreeMap<usize, (SamplingRay, Vec3)> = BTreeMap::new();
    let mut order = Vec::new();
    for r in rays {
        let key = r.voxel;
        groups
            .entry(key)
            .and_modify(|g| g.1 += r.direction)
            .or_insert_with(|| {
                order.push(key);
                (*r, r.direction)
            });
    }
    order
        .into_iter()
        .filter_map(|k| {
            let (r, sum) = groups[&k];
            (sum.norm() > 1e-9).then(|| SamplingRay { direction: sum.normalize(), ..r })
        })
        .collect()
}

/// Places a pose at `start + dist * dir` looking back along `-dir`; invalid
/// positions are pulled toward `start` in half-voxel steps, at most `dist / 2`.
pub fn sample_viewpoint(ray: &SamplingRay, dist: f64, flight: &FlightSpace, sensor: &SensorModel) -> Option<Viewpoint> {
    let (pitch, yaw) = look_angles(&-ray.direction);
    if !sensor.pitch_ok(pitch) {
        return None;
    }
    let h = flight.grid().voxel_size() / 2.0;
    let mut travel = dist;
    while travel >= dist / 2.0 - 1e-12 {
        let p = ray.start + ray.direction * travel;
        if flight.is_free_point(&p) {
            return Some(Viewpoint::new(p, pitch, yaw, ray.subspace));
        }
        travel -= h;
    }
    None
}

/// Points the sensor at the centroid of `targets` (pitch clamped).
fn recenter(vp: &mut Viewpoint, targets: &[Vec3], sensor: &SensorModel) {
    if targets.is_empty() {
        return;
    }
    let c = targets.iter().sum::<Vec3>() / targets.len() as f64;
    let d = c - vp.position;
    if d.norm() < 1e-12 {
        return;
    }
    let (pitch, yaw) = look_angles(&d);
    vp.pitch = pitch.clamp(sensor.pitch_min, sensor.pitch_max);
    vp.yaw = yaw;
}

/// Gravitation-like pose update of `q` by lighter neighbors. Returns the
/// updated viewpoint and the neighbor indices it absorbed.
pub fn gravitate_update(q: &Viewpoint, neighbors: &[(usize, &Viewpoint)], ctx: &CoverageContext, dist: f64) -> (Viewpoint, Vec<usize>) {
    let cq = q.covered.len() as f64;
    let mut out = q.clone();
    let mut used = Vec::new();
    let (mut dp, mut dpitch, mut dyaw) = (Vec3::zeros(), 0.0, 0.0);
    for &(k, a) in neighbors {
        let ca = a.covered.len() as f64;
        if ca >= cq {
            continue;
        }
        let w = ca / cq;
        dp += (a.position - q.position) * w;
        dpitch += w * (a.pitch - q.pitch);
        dyaw += w * signed_angle_diff(q.yaw, a.yaw);
        used.push(k);
    }
    out.pitch = (q.pitch + dpitch).clamp(ctx.sensor.pitch_min, ctx.sensor.pitch_max);
    out.yaw = wrap_angle(q.yaw + dyaw);
    let target = q.position + dp;
    out.position = q.position;
    if !used.is_empty() {
        // walk back toward the previous position until flyable
        let h = ctx.grid.voxel_size() / 2.0;
        let back = q.position - target;
        let len = back.norm();
        let mut s = 0.0;
        while s <= (dist / 2.0).min(len) + 1e-12 {
            let p = if len > 0.0 { target + back / len * s } else { target };
            if ctx.flight.is_free_point(&p) {
                out.position = p;
                break;
            }
            s += h;
        }
    }
    let targets: Vec<Vec3> = q.covered.iter().map(|&l| ctx.center_of(l)).collect();
    recenter(&mut out, &targets, &ctx.sensor);
    (out, used)
}

/// Descending-coverage sweep; absorbed neighbors become Dormant.
fn gravitation_sweep(vps: &mut [Viewpoint], ctx: &CoverageContext, dist: f64) {
    if vps.is_empty() {
        return;
    }
    let positions: Vec<Vec3> = vps.iter().map(|v| v.position).collect();
    let tree = KdTree::new(&positions);
    let r_q = ctx.sensor.query_radius();
    let mut order: Vec<usize> = (0..vps.len()).collect();
    order.sort_by(|&a, &b| vps[b].covered.len().cmp(&vps[a].covered.len()).then(a.cmp(&b)));
    for q in order {
        if vps[q].state != ViewpointState::Active {
            continue;
        }
        let hood: Vec<usize> = tree
            .radius(&positions[q], r_q)
            .into_iter()
            .filter(|&k| k != q && vps[k].state == ViewpointState::Active)
            .collect();
        let neighbors: Vec<(usize, &Viewpoint)> = hood.iter().map(|&k| (k, &vps[k])).collect();
        let (updated, used) = gravitate_update(&vps[q], &neighbors, ctx, dist);
        vps[q] = updated;
        for k in used {
            vps[k].state = ViewpointState::Dormant;
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ViewpointStats {
    pub rays: usize,
    pub rays_missed: usize,
    pub rays_merged: usize,
    pub initial: usize,
    pub discarded: usize,
    pub rounds: usize,
    pub coverable: usize,
    pub covered: usize,
    pub residual_uncovered: usize,
    pub final_count: usize,
}

impl ViewpointStats {
    pub fn coverage_rate(&self) -> f64 {
        if self.coverable == 0 {
            1.0
        } else {
            self.covered as f64 / self.coverable as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewpointSet {
    /// Final viewpoints ordered by subspace, then creation order.
    pub viewpoints: Vec<Viewpoint>,
    /// Indices into `viewpoints` per subspace id.
    pub per_subspace: BTreeMap<usize, Vec<usize>>,
    pub initial: Vec<Viewpoint>,
    pub stats: ViewpointStats,
}

/// Union of coverage sets.
pub fn covered_union(vps: &[Viewpoint]) -> HashSet<usize> {
    vps.iter().flat_map(|v| v.covered.iter().copied()).collect()
}

/// Samples, reduces and completes the viewpoint set for a labeled grid.
pub fn generate_viewpoints(ctx: &CoverageContext, rays: &[SamplingRay], params: &ViewpointParams) -> Result<ViewpointSet> {
    params.validate()?;
    let dist = params.distance();
    let mut stats = ViewpointStats { rays: rays.len(), ..Default::default() };
    let merged = dedup_rays(rays);
    stats.rays_merged = rays.len() - merged.len();
    let initial: Vec<Viewpoint> = merged.iter().filter_map(|r| sample_viewpoint(r, dist, ctx.flight, &ctx.sensor)).collect();
    stats.discarded = merged.len() - initial.len();
    stats.initial = initial.len();

    let coverable = ctx.coverable(dist);
    stats.coverable = coverable.len();
    let ray_tree = KdTree::new(&merged.iter().map(|r| r.start).collect::<Vec<_>>());

    let mut kept: Vec<Viewpoint> = Vec::new();
    let mut batch = initial.clone();
    let mut target: Option<HashSet<usize>> = None;
    let mut uncovered: Vec<usize> = Vec::new();
    for round in 0..params.max_rounds {
        stats.rounds = round + 1;
        ctx.cover_all(&mut batch);
        let covered: Vec<Vec<usize>> = batch.iter().map(|v| v.covered.clone()).collect();
        let owned = assign_voxels(&covered, target.as_ref());
        let mut survivors: Vec<Viewpoint> = batch.into_iter().zip(&owned).filter(|(_, o)| !o.is_empty()).map(|(v, _)| v).collect();
        gravitation_sweep(&mut survivors, ctx, dist);
        kept.extend(survivors.into_iter().filter(|v| v.state == ViewpointState::Active));
        ctx.cover_all(&mut kept);
        let seen = covered_union(&kept);
        uncovered = coverable.keys().copied().filter(|l| !seen.contains(l)).collect();
        if uncovered.is_empty() || round + 1 == params.max_rounds {
            break;
        }
        batch = uncovered
            .iter()
            .filter_map(|&l| resample(ctx, &merged, &ray_tree, l, &coverable[&l], dist))
            .collect();
        target = Some(uncovered.iter().copied().collect());
    }
    // drop viewpoints that ended up seeing nothing
    kept.retain(|v| !v.covered.is_empty());

    let ini_tree = KdTree::new(&initial.iter().map(|v| v.position).collect::<Vec<_>>());
    for v in &mut kept {
        if let Some((k, _)) = ini_tree.nearest(&v.position) {
            v.subspace = initial[k].subspace;
        }
    }
    let mut order: Vec<usize> = (0..kept.len()).collect();
    order.sort_by_key(|&i| (kept[i].subspace, i));
    let viewpoints: Vec<Viewpoint> = order.into_iter().map(|i| kept[i].clone()).collect();
    let mut per_subspace: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, v) in viewpoints.iter().enumerate() {
        per_subspace.entry(v.subspace).or_default().push(i);
    }
    let seen = covered_union(&viewpoints);
    stats.covered = coverable.keys().filter(|l| seen.contains(l)).count();
    stats.residual_uncovered = uncovered.len().min(stats.coverable - stats.covered);
    stats.final_count = viewpoints.len();
    Ok(ViewpointSet { viewpoints, per_subspace, initial, stats })
}

/// New viewpoint for an uncovered voxel along the nearest sampling ray's
/// direction, or along the voxel's coverability witness.
fn resample(ctx: &CoverageContext, rays: &[SamplingRay], tree: &KdTree, l: usize, witness: &Vec3, dist: f64) -> Option<Viewpoint> {
    let c = ctx.center_of(l);
    let subspace_hint = tree.nearest(&c).map(|(k, _)| rays[k].subspace).unwrap_or(0);
    if let Some((k, _)) = tree.nearest(&c) {
        if let Some((p, pitch, yaw)) = ctx.witness_pose(&c, &rays[k].direction, dist) {
            return Some(Viewpoint::new(p, pitch, yaw, subspace_hint));
        }
    }
    ctx.witness_pose(&c, witness, dist).map(|(p, pitch, yaw)| Viewpoint::new(p, pitch, yaw, subspace_hint))
}

/// CSV: id, x, y, z, pitch_rad, yaw_rad, subspace, covered_count.
pub fn write_viewpoints_csv<W: Write>(vps: &[Viewpoint], mut w: W) -> std::io::Result<()> {
    writeln!(w, "id,x,y,z,pitch_rad,yaw_rad,subspace,covered_count")?;
    for (i, v) in vps.iter().enumerate() {
        let p = v.position;
        writeln!(w, "{i},{:.6},{:.6},{:.6},{:.6},{:.6},{},{}", p.x, p.y, p.z, v.pitch, v.yaw, v.subspace, v.covered.len())?;
    }
    Ok(())
}
