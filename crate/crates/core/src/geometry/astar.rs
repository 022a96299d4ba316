use super::raycast::VoxelWalk;
use super::{OccupancyGrid, Vec3, VoxelIndex};
use crate::error::{Error, Result};
use std::cell::RefCell;
use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

/// A collision-free polyline between two points.
#[derive(Debug, Clone, PartialEq)]
pub struct SafePathResult {
    pub waypoints: Vec<Vec3>,
    pub length: f64,
}

impl SafePathResult {
    pub fn from_waypoints(waypoints: Vec<Vec3>) -> Self {
        let length = polyline_length(&waypoints);
        Self { waypoints, length }
    }

    pub fn reversed(&self) -> Self {
        let mut w = self.waypoints.clone();
        w.reverse();
        Self { waypoints: w, length: self.length }
    }
}

pub(crate) fn polyline_length(w: &[Vec3]) -> f64 {
    w.windows(2).map(|p| (p[1] - p[0]).norm()).sum()
}

#[derive(Debug, Clone, Copy)]
pub struct AstarOptions {
    /// Minimum distance (meters) kept from Occupied voxel centers.
    pub clearance: f64,
    /// Merge consecutive waypoints while line of sight holds.
    pub shortcut: bool,
}

impl Default for AstarOptions {
    fn default() -> Self {
        Self { clearance: 0.6, shortcut: true }
    }
}

/// Flyable space of a grid: everything except Occupied/Internal voxels and
/// the clearance shell around Occupied voxels.
#[derive(Debug, Clone)]
pub struct FlightSpace<'g> {
    grid: &'g OccupancyGrid,
    blocked: Vec<bool>,
    clearance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Open {
    f: f64,
    node: u32,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        self.f.total_cmp(&other.f).then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Default)]
struct Scratch {
    g: Vec<f64>,
    parent: Vec<u32>,
    seen: Vec<u32>,
    closed: Vec<u32>,
    epoch: u32,
}

impl Scratch {
    fn prepare(&mut self, n: usize) {
        if self.g.len() != n {
            self.g = vec![0.0; n];
            self.parent = vec![0; n];
            self.seen = vec![0; n];
            self.closed = vec![0; n];
            self.epoch = 0;
        }
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            self.seen.iter_mut().for_each(|s| *s = 0);
            self.closed.iter_mut().for_each(|s| *s = 0);
            self.epoch = 1;
        }
    }
}

thread_local! {
    static SCRATCH: RefCell<Scratch> = RefCell::new(Scratch::default());
}

const NEIGHBORS: [(i64, i64, i64); 26] = {
    let mut out = [(0, 0, 0); 26];
    let mut n = 0;
    let mut dz = -1;
    while dz <= 1 {
        let mut dy = -1;
        while dy <= 1 {
            let mut dx = -1;
            while dx <= 1 {
                if !(dx == 0 && dy == 0 && dz == 0) {
                    out[n] = (dx, dy, dz);
                    n += 1;
                }
                dx += 1;
            }
            dy += 1;
        }
        dz += 1;
    }
    out
};

impl<'g> FlightSpace<'g> {
    pub fn new(grid: &'g OccupancyGrid, clearance: f64) -> Self {
        Self { grid, blocked: grid.blocked_mask(clearance), clearance }
    }

    pub fn grid(&self) -> &'g OccupancyGrid {
        self.grid
    }

    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    #[inline]
    pub fn is_blocked(&self, idx: VoxelIndex) -> bool {
        self.blocked[self.grid.linear(idx)]
    }

    /// True iff `p` lies in the grid, in a voxel that is free and outside the clearance shell.
    pub fn is_free_point(&self, p: &Vec3) -> bool {
        self.grid.index_of(p).is_some_and(|v| !self.is_blocked(v))
    }

    /// True iff every voxel in the box spanned by the two indices is free.
    fn box_free(&self, lo: VoxelIndex, hi: VoxelIndex) -> bool {
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    if self.is_blocked([x, y, z]) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Conservative line of sight: every window of four consecutive pierced
    /// voxels must have an all-free bounding box. This guarantees that any
    /// sub-segment shorter than one voxel fits in a free axis-aligned box.
    pub fn line_of_sight(&self, a: &Vec3, b: &Vec3) -> bool {
        let Ok((walk, _)) = VoxelWalk::canonical(self.grid, a, b) else {
            return false;
        };
        let mut cur = walk.start();
        if self.is_blocked(cur) {
            return false;
        }
        let mut window: [VoxelIndex; 4] = [cur; 4];
        for i in 0..walk.steps() {
            walk.step_forward(&mut cur);
            window[(i + 1) % 4] = cur;
            let filled = (i + 2).min(4);
            let mut lo = cur;
            let mut hi = cur;
            for w in &window[..filled] {
                for k in 0..3 {
                    lo[k] = lo[k].min(w[k]);
                    hi[k] = hi[k].max(w[k]);
                }
            }
            if !self.box_free(lo, hi) {
                return false;
            }
        }
        true
    }

    /// Shortest 26-connected grid path (diagonal moves may not clip blocked
    /// voxels), optionally shortcut.
    pub fn path(&self, start: &Vec3, goal: &Vec3, shortcut: bool) -> Result<SafePathResult> {
        let s = self.grid.index_of_checked(start)?;
        let t = self.grid.index_of_checked(goal)?;
        if self.is_blocked(s) || self.is_blocked(t) {
            return Err(Error::EndpointInCollision);
        }
        if start == goal {
            return Ok(SafePathResult { waypoints: vec![*start], length: 0.0 });
        }
        if shortcut && self.line_of_sight(start, goal) {
            return Ok(SafePathResult::from_waypoints(vec![*start, *goal]));
        }
        let cells = self.search(s, t)?;
        let mut waypoints = Vec::with_capacity(cells.len() + 1);
        waypoints.push(*start);
        for &c in &cells[1..cells.len().saturating_sub(1)] {
            waypoints.push(self.grid.center(c));
        }
        waypoints.push(*goal);
        if shortcut {
            waypoints = self.shortcut(&waypoints);
        }
        Ok(SafePathResult::from_waypoints(waypoints))
    }

    fn shortcut(&self, w: &[Vec3]) -> Vec<Vec3> {
        let mut out = vec![w[0]];
        let mut i = 0;
        while i + 1 < w.len() {
            let mut j = i + 1;
            while j + 1 < w.len() && self.line_of_sight(&w[i], &w[j + 1]) {
                j += 1;
            }
            out.push(w[j]);
            i = j;
        }
        out
    }

    fn search(&self, s: VoxelIndex, t: VoxelIndex) -> Result<Vec<VoxelIndex>> {
        let grid = self.grid;
        let vs = grid.voxel_size();
        let n = grid.len();
        let target = grid.center(t);
        let h = |v: VoxelIndex| (grid.center(v) - target).norm();
        SCRATCH.with(|cell| {
            let mut sc = cell.borrow_mut();
            sc.prepare(n);
            let epoch = sc.epoch;
            let sl = grid.linear(s);
            let tl = grid.linear(t);
            sc.g[sl] = 0.0;
            sc.seen[sl] = epoch;
            sc.parent[sl] = sl as u32;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse(Open { f: h(s), node: sl as u32 }));
            while let Some(Reverse(Open { node, .. })) = heap.pop() {
                let l = node as usize;
                if sc.closed[l] == epoch {
                    continue;
                }
                sc.closed[l] = epoch;
                if l == tl {
                    let mut cells = vec![t];
                    let mut cur = l;
                    while cur != sl {
                        cur = sc.parent[cur] as usize;
                        cells.push(grid.unlinear(cur));
                    }
                    cells.reverse();
                    return Ok(cells);
                }
                let v = grid.unlinear(l);
                let gv = sc.g[l];
                for &(dx, dy, dz) in NEIGHBORS.iter() {
                    let (nx, ny, nz) = (v[0] as i64 + dx, v[1] as i64 + dy, v[2] as i64 + dz);
                    if !grid.in_dims(nx, ny, nz) {
                        continue;
                    }
                    let nb = [nx as usize, ny as usize, nz as usize];
                    let nl = grid.linear(nb);
                    if sc.closed[nl] == epoch || self.blocked[nl] {
                        continue;
                    }
                    if dx.abs() + dy.abs() + dz.abs() > 1 {
                        let lo = [v[0].min(nb[0]), v[1].min(nb[1]), v[2].min(nb[2])];
                        let hi = [v[0].max(nb[0]), v[1].max(nb[1]), v[2].max(nb[2])];
                        if !self.box_free(lo, hi) {
                            continue;
                        }
                    }
                    let step = vs * ((dx * dx + dy * dy + dz * dz) as f64).sqrt();
                    let ng = gv + step;
                    if sc.seen[nl] != epoch || ng < sc.g[nl] {
                        sc.seen[nl] = epoch;
                        sc.g[nl] = ng;
                        sc.parent[nl] = l as u32;
                        heap.push(Reverse(Open { f: ng + h(nb), node: nl as u32 }));
                    }
                }
            }
            Err(Error::Unreachable)
        })
    }
}

/// Collision-free shortcut path between two points under the given clearance.
pub fn astar_path(grid: &OccupancyGrid, start: &Vec3, goal: &Vec3, clearance: f64) -> Result<SafePathResult> {
    FlightSpace::new(grid, clearance).path(start, goal, true)
}

/// Like [`astar_path`] with explicit options; `shortcut: false` returns the
/// raw voxel-center chain.
pub fn astar_path_raw(grid: &OccupancyGrid, start: &Vec3, goal: &Vec3, opts: AstarOptions) -> Result<SafePathResult> {
    FlightSpace::new(grid, opts.clearance).path(start, goal, opts.shortcut)
}
