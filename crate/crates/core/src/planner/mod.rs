//! Hierarchical coverage planning: global subspace order, boundary viewpoints,
//! parallel local tours, assembly and junction refinement.

mod refine;

pub use refine::{junction_vertices, refine_path, RefineParams, RefineStats};

use crate::decomposition::Branch;
use crate::error::{Error, Result};
use crate::geometry::{ang, FlightSpace, SafePathResult, Vec3};
use crate::tsp::{self, CostMatrix, TourKind};
use crate::viewpoints::{Viewpoint, ViewpointSet};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DynamicLimits {
    pub v_max: f64,
    pub omega_max: f64,
    pub a_max: f64,
    pub j_max: f64,
}

impl Default for DynamicLimits {
    fn default() -> Self {
        Self { v_max: 2.0, omega_max: 1.0, a_max: 1.0, j_max: 0.5 }
    }
}

impl DynamicLimits {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("v_max", self.v_max), ("omega_max", self.omega_max), ("a_max", self.a_max), ("j_max", self.j_max)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Position plus gimbal angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Pose {
    pub position: Vec3,
    pub pitch: f64,
    pub yaw: f64,
}

impl Pose {
    pub fn at(position: Vec3) -> Self {
        Self { position, pitch: 0.0, yaw: 0.0 }
    }
}

impl From<&Viewpoint> for Pose {
    fn from(v: &Viewpoint) -> Self {
        Self { position: v.position, pitch: v.pitch, yaw: v.yaw }
    }
}

/// Travel time between two poses: the slowest of translation, pitch and yaw.
pub fn edge_cost(length: f64, a: &Pose, b: &Pose, limits: &DynamicLimits) -> f64 {
    (length / limits.v_max)
        .max(ang(a.pitch, b.pitch) / limits.omega_max)
        .max(ang(a.yaw, b.yaw) / limits.omega_max)
}

/// Memoized safe paths between planning nodes. Paths are always searched
/// from the lower to the higher node id, so `L(a, b) == L(b, a)` exactly.
pub struct PathCache<'a> {
    flight: &'a FlightSpace<'a>,
    nodes: Vec<Pose>,
    paths: HashMap<(usize, usize), SafePathResult>,
    searches: usize,
}

impl<'a> PathCache<'a> {
    pub fn new(flight: &'a FlightSpace<'a>, nodes: Vec<Pose>) -> Self {
        Self { flight, nodes, paths: HashMap::new(), searches: 0 }
    }

    pub fn node(&self, i: usize) -> &Pose {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of path searches run so far.
    pub fn searches(&self) -> usize {
        self.searches
    }

    fn search(&self, lo: usize, hi: usize) -> Result<SafePathResult> {
        self.flight
            .path(&self.nodes[lo].position, &self.nodes[hi].position, true)
            .map_err(|_| Error::UnreachableViewpoint(lo, hi))
    }

    /// Searches every missing pair in parallel.
    pub fn prefetch(&mut self, pairs: impl IntoIterator<Item = (usize, usize)>) -> Result<()> {
        let mut todo: Vec<(usize, usize)> = pairs
            .into_iter()
            .filter(|(a, b)| a != b)
            .map(|(a, b)| (a.min(b), a.max(b)))
            .filter(|k| !self.paths.contains_key(k))
            .collect();
        todo.sort_unstable();
        todo.dedup();
        let this = &*self;
        let found: Vec<Result<SafePathResult>> = todo.par_iter().map(|&(a, b)| this.search(a, b)).collect();
        self.searches += todo.len();
        for (k, r) in todo.into_iter().zip(found) {
            self.paths.insert(k, r?);
        }
        Ok(())
    }

    /// Cached length, if the pair was already searched.
    pub fn cached_length(&self, a: usize, b: usize) -> Option<f64> {
        if a == b {
            return Some(0.0);
        }
        self.paths.get(&(a.min(b), a.max(b))).map(|p| p.length)
    }

    pub fn path(&mut self, a: usize, b: usize) -> Result<SafePathResult> {
        if a == b {
            return Ok(SafePathResult { waypoints: vec![self.nodes[a].position], length: 0.0 });
        }
        let k = (a.min(b), a.max(b));
        if !self.paths.contains_key(&k) {
            let p = self.search(k.0, k.1)?;
            self.searches += 1;
            self.paths.insert(k, p);
        }
        let p = &self.paths[&k];
        Ok(if a < b { p.clone() } else { p.reversed() })
    }

    pub fn length(&mut self, a: usize, b: usize) -> Result<f64> {
        match self.cached_length(a, b) {
            Some(l) => Ok(l),
            None => self.path(a, b).map(|p| p.length),
        }
    }

    pub fn cost(&mut self, a: usize, b: usize, limits: &DynamicLimits) -> Result<f64> {
        let l = self.length(a, b)?;
        Ok(edge_cost(l, &self.nodes[a], &self.nodes[b], limits))
    }
}

/// Visiting order of subspace centroids from the current position. Arcs back
/// to the start cost nothing, so the closed tour is an open path from it.
pub fn global_sequence(centroids: &[Vec3], start: &Vec3, seed: u64) -> Result<Vec<usize>> {
    if centroids.is_empty() {
        return Err(Error::EmptyInput);
    }
    let pts: Vec<Vec3> = std::iter::once(*start).chain(centroids.iter().copied()).collect();
    let m = CostMatrix::from_fn(pts.len(), TourKind::ClosedAtsp, |i, j| if j == 0 { 0.0 } else { (pts[i] - pts[j]).norm() })?;
    let tour = tsp::solve(&m, seed)?;
    Ok(tour.order[1..].iter().map(|&k| k - 1).collect())
}

fn argmin_by(n: usize, skip: Option<usize>, f: impl Fn(usize) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in (0..n).filter(|&i| Some(i) != skip) {
        let v = f(i);
        if best.is_none_or(|(_, b)| v < b) {
            best = Some((i, v));
        }
    }
    best.map(|(i, _)| i)
}

/// Start and end viewpoint of every visited subspace. `keys[0]` is the
/// current position and `keys[i]` the centroid of the i-th visited subspace;
/// `groups[i - 1]` holds that subspace's viewpoint positions. Indices refer
/// to positions within each group; the last subspace has no end.
pub fn select_boundaries(keys: &[Vec3], groups: &[Vec<Vec3>]) -> Vec<(usize, Option<usize>)> {
    let n = groups.len();
    debug_assert_eq!(keys.len(), n + 1);
    groups
        .iter()
        .enumerate()
        .map(|(g, pts)| {
            let i = g + 1;
            let score = |a: Vec3, b: Vec3| move |k: usize| (pts[k] - a).norm_squared() + (pts[k] - b).norm_squared();
            let start = argmin_by(pts.len(), None, score(keys[i - 1], keys[i])).unwrap_or(0);
            let end = (i < n).then(|| {
                let skip = (pts.len() >= 2).then_some(start);
                let first = argmin_by(pts.len(), None, score(keys[i], keys[i + 1])).unwrap_or(0);
                if first == start {
                    argmin_by(pts.len(), skip, score(keys[i], keys[i + 1])).unwrap_or(start)
                } else {
                    first
                }
            });
            (start, end)
        })
        .collect()
}

/// Local tour matrix over poses ordered start first and, when `has_end`,
/// end last. Arcs into the start are free; with an end, the end may only
/// lead back to the start.
pub fn local_cost_matrix(poses: &[Pose], has_end: bool, limits: &DynamicLimits, length: impl Fn(usize, usize) -> f64) -> Result<CostMatrix> {
    let r = poses.len();
    CostMatrix::from_fn(r, TourKind::OpenPath, |i, j| {
        if i == j || j == 0 {
            0.0
        } else if has_end && i == r - 1 && j < r - 1 {
            f64::INFINITY
        } else {
            edge_cost(length(i, j), &poses[i], &poses[j], limits)
        }
    })
}

/// Appends a terminal node reachable from everywhere at zero cost, turning a
/// fixed-end open path into a free-end one.
pub(crate) fn with_free_end(m: &CostMatrix) -> Result<CostMatrix> {
    let n = m.n();
    CostMatrix::from_fn(n + 1, m.kind, |i, j| if i == n || j == n { 0.0 } else { m.get(i, j) })
}

fn mix_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Visiting order of one subspace's viewpoints (node ids), starting at
/// `start` and ending at `end` when given. Lengths must be cached.
pub fn local_order(cache: &PathCache, ids: &[usize], start: usize, end: Option<usize>, limits: &DynamicLimits, seed: u64) -> Result<Vec<usize>> {
    let mut nodes = vec![start];
    nodes.extend(ids.iter().copied().filter(|&k| k != start && Some(k) != end));
    if let Some(e) = end.filter(|&e| e != start) {
        nodes.push(e);
    }
    if nodes.len() <= 2 {
        return Ok(nodes);
    }
    let has_end = end.is_some_and(|e| e != start);
    let poses: Vec<Pose> = nodes.iter().map(|&k| *cache.node(k)).collect();
    let m = local_cost_matrix(&poses, has_end, limits, |i, j| {
        cache.cached_length(nodes[i], nodes[j]).expect("local path lengths are prefetched")
    })?;
    let tour = if has_end { tsp::solve(&m, seed)? } else { tsp::solve(&with_free_end(&m)?, seed)? };
    Ok(tour.order.iter().filter(|&&k| k < nodes.len()).map(|&k| nodes[k]).collect())
}

/// Local tours of every subspace, computed concurrently. `groups` lists the
/// node ids of each subspace in visiting order; `bounds` holds start and
/// end node ids.
pub fn plan_local_paths(
    cache: &mut PathCache,
    groups: &[Vec<usize>],
    bounds: &[(usize, Option<usize>)],
    limits: &DynamicLimits,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    let pairs: Vec<(usize, usize)> = groups
        .iter()
        .flat_map(|g| g.iter().enumerate().flat_map(move |(x, &a)| g[x + 1..].iter().map(move |&b| (a, b))))
        .collect();
    cache.prefetch(pairs)?;
    let cache = &*cache;
    groups
        .par_iter()
        .zip(bounds.par_iter())
        .enumerate()
        .map(|(k, (g, &(s, e)))| local_order(cache, g, s, e, limits, mix_seed(seed, k)))
        .collect()
}

/// Ordered viewpoints with the safe paths joining them. `segments[k]` leads
/// from the previous element (the start pose for k = 0) to `order[k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveragePath {
    pub start: Pose,
    /// Indices into the planned viewpoint set.
    pub order: Vec<usize>,
    pub viewpoints: Vec<Viewpoint>,
    pub segments: Vec<SafePathResult>,
    pub total_length: f64,
    /// Summed travel-time metric, seconds.
    pub total_cost: f64,
}

impl CoveragePath {
    /// Builds the path for a node sequence beginning at the start node.
    pub fn from_sequence(cache: &mut PathCache, viewpoints: &[Viewpoint], seq: &[usize], limits: &DynamicLimits) -> Result<Self> {
        let mut segments = Vec::with_capacity(seq.len().saturating_sub(1));
        let mut total_cost = 0.0;
        for w in seq.windows(2) {
            let p = cache.path(w[0], w[1])?;
            total_cost += edge_cost(p.length, cache.node(w[0]), cache.node(w[1]), limits);
            segments.push(p);
        }
        let order = seq[1..].to_vec();
        Ok(Self {
            start: *cache.node(seq[0]),
            viewpoints: order.iter().map(|&k| viewpoints[k].clone()).collect(),
            total_length: segments.iter().map(|s| s.length).sum(),
            order,
            segments,
            total_cost,
        })
    }

    /// Node sequence: the start node followed by the visiting order.
    pub fn sequence(&self, start_node: usize) -> Vec<usize> {
        std::iter::once(start_node).chain(self.order.iter().copied()).collect()
    }

    /// Every pose in order, starting with the start pose.
    pub fn poses(&self) -> Vec<Pose> {
        std::iter::once(self.start).chain(self.viewpoints.iter().map(Pose::from)).collect()
    }

    /// Full waypoint chain with duplicates at segment joints removed.
    pub fn polyline(&self) -> Vec<Vec3> {
        let mut out = vec![self.start.position];
        for s in &self.segments {
            out.extend(s.waypoints.iter().skip(1));
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "index,x,y,z,pitch,yaw,subspace")?;
        for (i, v) in self.viewpoints.iter().enumerate() {
            let p = v.position;
            writeln!(w, "{i},{:.6},{:.6},{:.6},{:.6},{:.6},{}", p.x, p.y, p.z, v.pitch, v.yaw, v.subspace)?;
        }
        Ok(())
    }

    /// Waypoint chain as an OBJ polyline.
    pub fn write_polyline_obj<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let pts = self.polyline();
        for p in &pts {
            writeln!(w, "v {:.6} {:.6} {:.6}", p.x, p.y, p.z)?;
        }
        if pts.len() >= 2 {
            write!(w, "l")?;
            for i in 1..=pts.len() {
                write!(w, " {i}")?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// Concatenates local tours in visiting order after the start node.
pub fn assemble(cache: &mut PathCache, viewpoints: &[Viewpoint], start_node: usize, locals: &[Vec<usize>], limits: &DynamicLimits) -> Result<CoveragePath> {
    let seq: Vec<usize> = std::iter::once(start_node).chain(locals.iter().flatten().copied()).collect();
    CoveragePath::from_sequence(cache, viewpoints, &seq, limits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanMode {
    /// Hierarchical planning with junction refinement.
    Full,
    /// Hierarchical planning without refinement.
    Nr,
    /// One open tour over all viewpoints.
    Go,
}

impl std::str::FromStr for PlanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "full" => Ok(Self::Full),
            "nr" => Ok(Self::Nr),
            "go" => Ok(Self::Go),
            _ => Err(Error::InvalidParameter(format!("unknown plan mode '{s}' (expected full, nr or go)"))),
        }
    }
}

impl std::fmt::Display for PlanMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Full => "full",
            Self::Nr => "nr",
            Self::Go => "go",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerParams {
    pub limits: DynamicLimits,
    pub refine_iterations: usize,
    /// Junction radius; defaults to twice the sensor query radius.
    pub r_jc: Option<f64>,
}

impl Default for PlannerParams {
    fn default() -> Self {
        Self { limits: DynamicLimits::default(), refine_iterations: 10_000, r_jc: None }
    }
}

impl PlannerParams {
    pub fn validate(&self) -> Result<()> {
        self.limits.validate()?;
        if let Some(r) = self.r_jc {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::InvalidParameter(format!("r_jc must be positive, got {r}")));
            }
        }
        Ok(())
    }
}

pub struct PlanInput<'a> {
    pub flight: &'a FlightSpace<'a>,
    pub viewpoints: &'a ViewpointSet,
    pub branches: &'a [Branch],
    pub skeleton_vertices: &'a [Vec3],
    pub start: Pose,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlanDiagnostics {
    pub mode: PlanMode,
    /// Wall time per stage, milliseconds.
    pub stage_ms: BTreeMap<String, f64>,
    pub total_ms: f64,
    pub subspace_sequence: Vec<usize>,
    pub viewpoints_per_subspace: BTreeMap<usize, usize>,
    pub cost_before_refine: f64,
    pub cost_after_refine: f64,
    pub length_before_refine: f64,
    pub length_after_refine: f64,
    pub path_searches: usize,
    pub refine: Option<RefineStats>,
}

impl PlanDiagnostics {
    pub fn write_json<W: Write>(&self, w: W) -> std::io::Result<()> {
        serde_json::to_writer_pretty(w, self).map_err(std::io::Error::other)
    }
}

fn ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

/// Plans a coverage path through every viewpoint in the set.
pub fn plan(input: &PlanInput, params: &PlannerParams, r_jc: f64, mode: PlanMode, seed: u64) -> Result<(CoveragePath, PlanDiagnostics)> {
    params.validate()?;
    let vps = &input.viewpoints.viewpoints;
    if vps.is_empty() {
        return Err(Error::EmptyInput);
    }
    let limits = &params.limits;
    let t_all = Instant::now();
    let start_node = vps.len();
    let nodes: Vec<Pose> = vps.iter().map(Pose::from).chain(std::iter::once(input.start)).collect();
    let mut cache = PathCache::new(input.flight, nodes);
    let mut stage_ms = BTreeMap::new();
    let per_subspace = &input.viewpoints.per_subspace;

    let (path, sequence) = if mode == PlanMode::Go {
        let t = Instant::now();
        let all: Vec<usize> = std::iter::once(start_node).chain(0..vps.len()).collect();
        cache.prefetch(all.iter().enumerate().flat_map(|(x, &a)| all[x + 1..].iter().map(move |&b| (a, b))))?;
        stage_ms.insert("path_matrix".into(), ms(t));
        let t = Instant::now();
        let c = &cache;
        let m = CostMatrix::from_fn(all.len() + 1, TourKind::OpenPath, |i, j| {
            if i == all.len() || j == all.len() || i == j {
                0.0
            } else {
                edge_cost(c.cached_length(all[i], all[j]).unwrap(), c.node(all[i]), c.node(all[j]), limits)
            }
        })?;
        let tour = tsp::solve(&m, seed)?;
        let seq: Vec<usize> = tour.order.iter().filter(|&&k| k < all.len()).map(|&k| all[k]).collect();
        stage_ms.insert("global_tour".into(), ms(t));
        let t = Instant::now();
        let path = CoveragePath::from_sequence(&mut cache, vps, &seq, limits)?;
        stage_ms.insert("assemble".into(), ms(t));
        (path, Vec::new())
    } else {
        let t = Instant::now();
        let subspaces: Vec<usize> = per_subspace.keys().copied().collect();
        let centroids: Vec<Vec3> = per_subspace
            .values()
            .map(|ids| ids.iter().map(|&k| vps[k].position).sum::<Vec3>() / ids.len() as f64)
            .collect();
        let visit = global_sequence(&centroids, &input.start.position, seed)?;
        let keys: Vec<Vec3> = std::iter::once(input.start.position).chain(visit.iter().map(|&g| centroids[g])).collect();
        let groups: Vec<Vec<usize>> = visit.iter().map(|&g| per_subspace[&subspaces[g]].clone()).collect();
        let positions: Vec<Vec<Vec3>> = groups.iter().map(|g| g.iter().map(|&k| vps[k].position).collect()).collect();
        let bounds: Vec<(usize, Option<usize>)> = select_boundaries(&keys, &positions)
            .into_iter()
            .zip(&groups)
            .map(|((s, e), g)| (g[s], e.map(|e| g[e])))
            .collect();
        stage_ms.insert("global_sequence".into(), ms(t));
        let t = Instant::now();
        let locals = plan_local_paths(&mut cache, &groups, &bounds, limits, seed)?;
        stage_ms.insert("local_paths".into(), ms(t));
        let t = Instant::now();
        let path = assemble(&mut cache, vps, start_node, &locals, limits)?;
        stage_ms.insert("assemble".into(), ms(t));
        (path, visit.iter().map(|&g| subspaces[g]).collect())
    };

    let (cost_before, length_before) = (path.total_cost, path.total_length);
    let (path, refine) = if mode == PlanMode::Full {
        let t = Instant::now();
        let rp = RefineParams { r_jc, iterations: params.refine_iterations, seed };
        let (refined, stats) = refine_path(&path, &mut cache, vps, start_node, input.branches, input.skeleton_vertices, &rp, limits)?;
        stage_ms.insert("refine".into(), ms(t));
        (refined, Some(stats))
    } else {
        (path, None)
    };
    let diag = PlanDiagnostics {
        mode,
        stage_ms,
        total_ms: ms(t_all),
        subspace_sequence: sequence,
        viewpoints_per_subspace: per_subspace.iter().map(|(&s, ids)| (s, ids.len())).collect(),
        cost_before_refine: cost_before,
        cost_after_refine: path.total_cost,
        length_before_refine: length_before,
        length_after_refine: path.total_length,
        path_searches: cache.searches(),
        refine,
    };
    Ok((path, diag))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{OccupancyGrid, PointCloud};
    use std::f64::consts::FRAC_PI_2;

    fn empty_grid() -> OccupancyGrid {
        let cloud = PointCloud::new(vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(10.0, 4.0, 4.0)]);
        OccupancyGrid::build(&cloud, 0.25, 4).unwrap()
    }

    fn vp(x: f64, y: f64, z: f64, subspace: usize) -> Viewpoint {
        Viewpoint::new(Vec3::new(x, y, z), 0.0, 0.0, subspace)
    }

    #[test]
    fn edge_cost_takes_the_slowest_axis() {
        let lim = DynamicLimits::default();
        let a = Pose::at(Vec3::zeros());
        let b = Pose { yaw: FRAC_PI_2, ..a };
        assert!((edge_cost(0.0, &a, &b, &lim) - FRAC_PI_2).abs() < 1e-12);
        assert!((edge_cost(4.0, &a, &a, &lim) - 2.0).abs() < 1e-12);
        let c = Pose { yaw: 0.1, ..a };
        let d = Pose { yaw: std::f64::consts::TAU - 0.1, ..a };
        assert!((edge_cost(0.0, &c, &d, &lim) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn global_sequence_visits_near_first() {
        assert_eq!(global_sequence(&[Vec3::new(3.0, 0.0, 0.0)], &Vec3::zeros(), 1).unwrap(), vec![0]);
        let c = [Vec3::new(20.0, 0.0, 0.0), Vec3::new(10.0, 0.0, 0.0)];
        assert_eq!(global_sequence(&c, &Vec3::zeros(), 1).unwrap(), vec![1, 0]);
    }

    #[test]
    fn global_sequence_matches_open_tour_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let c: Vec<Vec3> = (0..6).map(|_| Vec3::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0), rng.gen_range(0.0..5.0))).collect();
            let seq = global_sequence(&c, &Vec3::zeros(), 3).unwrap();
            let cost = |order: &[usize]| {
                let mut prev = Vec3::zeros();
                order.iter().map(|&k| {
                    let d = (c[k] - prev).norm();
                    prev = c[k];
                    d
                }).sum::<f64>()
            };
            let mut best = f64::INFINITY;
            let mut perm: Vec<usize> = (0..6).collect();
            permute(&mut perm, 0, &mut |p| best = best.min(cost(p)));
            assert!(cost(&seq) <= 1.05 * best + 1e-9);
        }
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn boundaries_follow_the_sum_of_squares_rule() {
        let keys = [Vec3::zeros(), Vec3::new(10.0, 0.0, 0.0), Vec3::new(20.0, 0.0, 0.0)];
        let groups = vec![vec![Vec3::new(2.0, 0.0, 0.0), Vec3::new(9.0, 0.0, 0.0)], vec![Vec3::new(19.0, 0.0, 0.0)]];
        let b = select_boundaries(&keys, &groups);
        assert_eq!(b, vec![(0, Some(1)), (0, None)]);
    }

    #[test]
    fn boundary_collision_takes_second_best_end() {
        let keys = [Vec3::zeros(), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.0, 0.0, 0.0)];
        let groups = vec![vec![Vec3::new(1.0, 0.0, 0.0), Vec3::new(5.0, 0.0, 0.0), Vec3::new(-3.0, 0.0, 0.0)], vec![Vec3::new(2.0, 0.0, 0.0)]];
        assert_eq!(select_boundaries(&keys, &groups)[0], (0, Some(1)));
        let single = vec![vec![Vec3::new(1.0, 0.0, 0.0)], vec![Vec3::new(2.0, 0.0, 0.0)]];
        assert_eq!(select_boundaries(&keys, &single)[0], (0, Some(0)));
    }

    #[test]
    fn local_matrix_structure() {
        let lim = DynamicLimits::default();
        let poses: Vec<Pose> = (0..4).map(|i| Pose::at(Vec3::new(i as f64, 0.0, 0.0))).collect();
        let len = |i: usize, j: usize| (poses[i].position - poses[j].position).norm();
        let m = local_cost_matrix(&poses, true, &lim, len).unwrap();
        for i in 0..4 {
            assert_eq!(m.get(i, 0), 0.0);
            assert_eq!(m.get(i, i), 0.0);
        }
        assert!(m.get(3, 1).is_infinite() && m.get(3, 2).is_infinite());
        assert!((m.get(0, 3) - 1.5).abs() < 1e-12);
        let last = local_cost_matrix(&poses, false, &lim, len).unwrap();
        assert!((last.get(3, 1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn local_order_on_a_line_is_a_sweep() {
        let grid = empty_grid();
        let flight = FlightSpace::new(&grid, 0.3);
        let vps: Vec<Viewpoint> = [0.0, 3.0, 1.0, 4.0, 2.0].iter().map(|&x| vp(2.0 + x, 2.0, 2.0, 0)).collect();
        let mut cache = PathCache::new(&flight, vps.iter().map(Pose::from).collect());
        let groups = vec![vec![0, 1, 2, 3, 4]];
        let out = plan_local_paths(&mut cache, &groups, &[(0, Some(3))], &DynamicLimits::default(), 1).unwrap();
        assert_eq!(out, vec![vec![0, 2, 4, 1, 3]]);
        let two = plan_local_paths(&mut cache, &[vec![1, 3]], &[(3, Some(1))], &DynamicLimits::default(), 1).unwrap();
        assert_eq!(two, vec![vec![3, 1]]);
        let free = plan_local_paths(&mut cache, &groups, &[(0, None)], &DynamicLimits::default(), 1).unwrap();
        assert_eq!(free, vec![vec![0, 2, 4, 1, 3]]);
    }

    #[test]
    fn assembled_path_lengths_recompute() {
        let grid = empty_grid();
        let flight = FlightSpace::new(&grid, 0.3);
        let mut vps = vec![vp(2.0, 1.0, 1.0, 0), vp(3.0, 1.0, 1.0, 0), vp(6.0, 1.0, 2.0, 1), vp(7.0, 2.0, 2.0, 1)];
        vps[3].yaw = 1.0;
        let mut nodes: Vec<Pose> = vps.iter().map(Pose::from).collect();
        nodes.push(Pose::at(Vec3::new(0.5, 0.5, 0.5)));
        let mut cache = PathCache::new(&flight, nodes);
        let lim = DynamicLimits::default();
        let path = assemble(&mut cache, &vps, 4, &[vec![0, 1], vec![2, 3]], &lim).unwrap();
        assert_eq!(path.order, vec![0, 1, 2, 3]);
        assert_eq!(path.segments.len(), 4);
        let recomputed: f64 = path.segments.iter().map(|s| s.waypoints.windows(2).map(|w| (w[1] - w[0]).norm()).sum::<f64>()).sum();
        assert!((recomputed - path.total_length).abs() < 1e-9);
        assert_eq!(path.segments[2].waypoints[0], vps[1].position);
        assert_eq!(*path.segments[2].waypoints.last().unwrap(), vps[2].position);
        assert!(path.segments.iter().all(|s| s.waypoints.iter().all(|p| flight.is_free_point(p))));
    }

    #[test]
    fn cache_is_symmetric() {
        let grid = empty_grid();
        let flight = FlightSpace::new(&grid, 0.3);
        let mut cache = PathCache::new(&flight, vec![Pose::at(Vec3::new(1.0, 1.0, 1.0)), Pose::at(Vec3::new(8.0, 3.0, 3.0))]);
        let ab = cache.path(0, 1).unwrap();
        let ba = cache.path(1, 0).unwrap();
        assert_eq!(ab.length, ba.length);
        assert_eq!(ab.waypoints.first(), ba.waypoints.last());
        assert_eq!(cache.searches(), 1);
    }

    #[test]
    fn unreachable_pair_is_reported() {
        let grid = empty_grid();
        let flight = FlightSpace::new(&grid, 0.3);
        let mut cache = PathCache::new(&flight, vec![Pose::at(Vec3::new(1.0, 1.0, 1.0)), Pose::at(Vec3::new(100.0, 0.0, 0.0))]);
        assert!(matches!(cache.path(0, 1), Err(Error::UnreachableViewpoint(0, 1))));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in [PlanMode::Full, PlanMode::Nr, PlanMode::Go] {
            assert_eq!(m.to_string().parse::<PlanMode>().unwrap(), m);
        }
        assert!("xx".parse::<PlanMode>().is_err());
    }
}
