//! Grid marching along a segment.
//!
//! Both traversal directions derive every boundary-crossing parameter from
//! the same origin endpoint and the same formula, so walking backward from
//! the far end visits exactly the reverse of the forward sequence. That is
//! what makes the bidirectional check agree bit-for-bit with the
//! unidirectional one, including rays through voxel edges and corners.

use super::{OccupancyGrid, Vec3, VoxelIndex, VoxelState};
use crate::error::Result;

/// Exact voxel sequence pierced by a segment, stepped from either end.
#[derive(Debug, Clone)]
pub struct VoxelWalk {
    start: VoxelIndex,
    end: VoxelIndex,
    origin: Vec3,
    delta: Vec3,
    step: [i64; 3],
    steps: usize,
}

impl VoxelWalk {
    /// Walk from `from` to `to`; both must lie inside the grid.
    pub fn new(grid: &OccupancyGrid, from: &Vec3, to: &Vec3) -> Result<Self> {
        let start = grid.index_of_checked(from)?;
        let end = grid.index_of_checked(to)?;
        let a = grid.to_voxel_coords(from);
        let b = grid.to_voxel_coords(to);
        Ok(Self::from_indices(start, end, a, b))
    }

    /// Walk with the endpoints in a fixed order, so the pierced voxels do
    /// not depend on argument order.
    /// The flag is true when the walk runs from `b` to `a`.
    pub fn canonical(grid: &OccupancyGrid, a: &Vec3, b: &Vec3) -> Result<(Self, bool)> {
        let swap = (0..3)
            .map(|k| a[k].total_cmp(&b[k]))
            .find(|o| o.is_ne())
            .is_some_and(|o| o.is_gt());
        if swap {
            Ok((Self::new(grid, b, a)?, true))
        } else {
            Ok((Self::new(grid, a, b)?, false))
        }
    }

    pub(crate) fn from_indices(start: VoxelIndex, end: VoxelIndex, a: Vec3, b: Vec3) -> Self {
        let mut step = [0i64; 3];
        let mut steps = 0usize;
        for k in 0..3 {
            let s = end[k] as i64 - start[k] as i64;
            step[k] = s.signum();
            steps += s.unsigned_abs() as usize;
        }
        VoxelWalk { start, end, origin: a, delta: b - a, step, steps }
    }

    pub fn start(&self) -> VoxelIndex {
        self.start
    }

    pub fn end(&self) -> VoxelIndex {
        self.end
    }

    /// Number of voxel-to-voxel steps; the sequence has `steps + 1` voxels.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Segment parameter at which the walk leaves voxel coordinate `i` along `axis`.
    #[inline]
    fn crossing(&self, axis: usize, i: usize) -> f64 {
        let boundary = if self.step[axis] > 0 { i as f64 + 1.0 } else { i as f64 };
        (boundary - self.origin[axis]) / self.delta[axis]
    }

    /// Advances `cur` one voxel toward the end; returns the entry parameter.
    #[inline]
    pub fn step_forward(&self, cur: &mut VoxelIndex) -> f64 {
        let mut best: Option<(f64, usize)> = None;
        for k in 0..3 {
            if cur[k] == self.end[k] {
                continue;
            }
            let t = self.crossing(k, cur[k]);
            match best {
                Some((bt, _)) if t >= bt => {}
                _ => best = Some((t, k)),
            }
        }
        let (t, k) = best.expect("step_forward past the end voxel");
        cur[k] = (cur[k] as i64 + self.step[k]) as usize;
        t
    }

    /// Moves `cur` one voxel back toward the start.
    #[inline]
    pub fn step_backward(&self, cur: &mut VoxelIndex) {
        let mut best: Option<(f64, usize)> = None;
        for k in 0..3 {
            if cur[k] == self.start[k] {
                continue;
            }
            let prev = (cur[k] as i64 - self.step[k]) as usize;
            let t = self.crossing(k, prev);
            match best {
                Some((bt, _)) if t < bt => {}
                _ => best = Some((t, k)),
            }
        }
        let (_, k) = best.expect("step_backward past the start voxel");
        cur[k] = (cur[k] as i64 - self.step[k]) as usize;
    }

    /// Full ordered voxel sequence with the entry parameter of each voxel
    /// (0 for the start voxel).
    pub fn sequence(&self) -> Vec<(VoxelIndex, f64)> {
        let mut out = Vec::with_capacity(self.steps + 1);
        let mut cur = self.start;
        out.push((cur, 0.0));
        for _ in 0..self.steps {
            let t = self.step_forward(&mut cur);
            out.push((cur, t.clamp(0.0, 1.0)));
        }
        out
    }

    /// Unidirectional scan of the voxels strictly between the endpoints.
    /// Returns the first blocked voxel (if any) and the number of voxels examined.
    /// With `from_end` the scan starts at the end voxel and walks backward.
    pub fn first_interior_blocked<F: FnMut(VoxelIndex) -> bool>(&self, from_end: bool, mut blocked: F) -> (Option<VoxelIndex>, usize) {
        let mut cur = if from_end { self.end } else { self.start };
        let mut visits = 0;
        for _ in 1..self.steps {
            if from_end {
                self.step_backward(&mut cur);
            } else {
                self.step_forward(&mut cur);
            }
            visits += 1;
            if blocked(cur) {
                return (Some(cur), visits);
            }
        }
        (None, visits)
    }

    /// Bidirectional scan of the interior voxels: alternates one step from
    /// each end and stops when a blocked voxel is found or the frontiers meet.
    /// Returns (clear, voxels examined).
    /// `end_first` makes the backward frontier move first.
    pub fn interior_clear_bidirectional<F: FnMut(VoxelIndex) -> bool>(&self, end_first: bool, mut blocked: F) -> (bool, usize) {
        let mut front = 0usize;
        let mut back = self.steps;
        let mut fcur = self.start;
        let mut bcur = self.end;
        let mut visits = 0;
        let mut forward = !end_first;
        loop {
            if front + 1 >= back {
                return (true, visits);
            }
            let v = if forward {
                self.step_forward(&mut fcur);
                front += 1;
                fcur
            } else {
                self.step_backward(&mut bcur);
                back -= 1;
                bcur
            };
            visits += 1;
            if blocked(v) {
                return (false, visits);
            }
            forward = !forward;
        }
    }
}

/// Result of a unidirectional cast.
#[derive(Debug, Clone, PartialEq)]
pub struct RayHit {
    /// First Occupied voxel met from `from` toward `to` (endpoints included).
    pub first_occupied: Option<VoxelIndex>,
    /// Segment parameter in `[0, 1]` where the walk entered `first_occupied`.
    pub entry_t: Option<f64>,
    /// Ordered voxels pierced by the whole segment.
    pub traversed: Vec<VoxelIndex>,
}

/// Casts a segment through the grid.
pub fn raycast(grid: &OccupancyGrid, from: &Vec3, to: &Vec3) -> Result<RayHit> {
    let (walk, swapped) = VoxelWalk::canonical(grid, from, to)?;
    let mut seq = walk.sequence();
    if swapped {
        // entry parameter seen from the other end is 1 - exit parameter
        let exits: Vec<f64> = seq.iter().skip(1).map(|s| s.1).chain(std::iter::once(1.0)).collect();
        seq = seq.iter().zip(exits).rev().map(|(s, e)| (s.0, 1.0 - e)).collect();
        seq[0].1 = 0.0;
    }
    let hit = seq.iter().find(|(v, _)| grid.state(*v) == VoxelState::Occupied);
    Ok(RayHit {
        first_occupied: hit.map(|(v, _)| *v),
        entry_t: hit.map(|(_, t)| *t),
        traversed: seq.into_iter().map(|(v, _)| v).collect(),
    })
}

/// Line of sight via bidirectional ray casting: true iff no Occupied voxel
/// lies strictly between the endpoint voxels.
pub fn birc_visible(grid: &OccupancyGrid, from: &Vec3, to: &Vec3) -> Result<bool> {
    birc_visible_counted(grid, from, to).map(|(v, _)| v)
}

/// [`birc_visible`] plus the number of voxels examined.
pub fn birc_visible_counted(grid: &OccupancyGrid, from: &Vec3, to: &Vec3) -> Result<(bool, usize)> {
    let (walk, swapped) = VoxelWalk::canonical(grid, from, to)?;
    Ok(walk.interior_clear_bidirectional(swapped, |v| grid.state(v) == VoxelState::Occupied))
}

/// Unidirectional reference for [`birc_visible_counted`].
pub fn unidirectional_visible_counted(grid: &OccupancyGrid, from: &Vec3, to: &Vec3) -> Result<(bool, usize)> {
    let (walk, swapped) = VoxelWalk::canonical(grid, from, to)?;
    let (hit, visits) = walk.first_interior_blocked(swapped, |v| grid.state(v) == VoxelState::Occupied);
    Ok((hit.is_none(), visits))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn empty(n: usize) -> OccupancyGrid {
        OccupancyGrid::new(Vec3::zeros(), 1.0, [n, n, n]).unwrap()
    }

    /// Dense-sampling oracle: sample the segment every `h` and dedupe.
    fn sampled_voxels(g: &OccupancyGrid, a: &Vec3, b: &Vec3, h: f64) -> Vec<VoxelIndex> {
        let len = (b - a).norm();
        let n = (len / h).ceil().max(1.0) as usize;
        let mut out: Vec<VoxelIndex> = Vec::new();
        for i in 0..=n {
            let p = a + (b - a) * (i as f64 / n as f64);
            let v = g.index_of(&p).unwrap();
            if out.last() != Some(&v) {
                out.push(v);
            }
        }
        out
    }

    #[test]
    fn degenerate_segment() {
        let g = empty(4);
        let p = Vec3::new(1.5, 1.5, 1.5);
        let hit = raycast(&g, &p, &p).unwrap();
        assert_eq!(hit.first_occupied, None);
        assert_eq!(hit.traversed, vec![[1, 1, 1]]);
    }

    #[test]
    fn free_grid_is_unobstructed() {
        let g = empty(8);
        let hit = raycast(&g, &Vec3::new(0.5, 0.5, 0.5), &Vec3::new(7.5, 6.2, 3.3)).unwrap();
        assert!(hit.first_occupied.is_none());
        assert!(birc_visible(&g, &Vec3::new(0.5, 0.5, 0.5), &Vec3::new(7.5, 6.2, 3.3)).unwrap());
    }

    #[test]
    fn midpoint_obstacle_matches_sampling_oracle() {
        let mut g = empty(10);
        let a = Vec3::new(0.3, 0.7, 0.45);
        let b = Vec3::new(9.6, 8.9, 7.35);
        let mid = (a + b) * 0.5;
        g.set_occupied(g.index_of(&mid).unwrap());
        let hit = raycast(&g, &a, &b).unwrap();
        assert_eq!(hit.first_occupied, g.index_of(&mid));
        assert_eq!(hit.traversed, sampled_voxels(&g, &a, &b, 0.1));
        let t = hit.entry_t.unwrap();
        let entry = a + (b - a) * t;
        let v = g.index_of(&mid).unwrap();
        let c = g.center(v);
        assert!((entry - c).abs().max() <= 0.5 + 1e-9);
    }

    #[test]
    fn out_of_bounds_rejected() {
        let g = empty(4);
        let e = raycast(&g, &Vec3::new(0.5, 0.5, 0.5), &Vec3::new(5.0, 0.5, 0.5)).unwrap_err();
        assert!(e.to_string().starts_with("out of bounds"));
    }

    #[test]
    fn obstruction_next_to_target_stops_early() {
        let mut g = empty(64);
        let a = Vec3::new(0.5, 0.5, 0.5);
        let b = Vec3::new(60.5, 0.5, 0.5);
        g.set_occupied([59, 0, 0]);
        let (vis_b, birc_visits) = birc_visible_counted(&g, &a, &b).unwrap();
        let (vis_u, uni_visits) = unidirectional_visible_counted(&g, &a, &b).unwrap();
        assert!(!vis_b && !vis_u);
        assert!(birc_visits * 2 <= uni_visits, "{birc_visits} vs {uni_visits}");
    }

    #[test]
    fn corner_ray_reverse_equals_forward() {
        let g = empty(6);
        let a = Vec3::new(0.5, 0.5, 0.5);
        let b = Vec3::new(5.5, 5.5, 5.5);
        let walk = VoxelWalk::new(&g, &a, &b).unwrap();
        let fwd: Vec<VoxelIndex> = walk.sequence().into_iter().map(|(v, _)| v).collect();
        let mut back = vec![walk.end()];
        let mut cur = walk.end();
        for _ in 0..walk.steps() {
            walk.step_backward(&mut cur);
            back.push(cur);
        }
        back.reverse();
        assert_eq!(fwd, back);
    }

    fn random_grid(rng: &mut ChaCha8Rng, n: usize, density: f64) -> OccupancyGrid {
        let mut g = empty(n);
        for l in 0..g.len() {
            if rng.gen_bool(density) {
                let idx = g.unlinear(l);
                g.set_occupied(idx);
            }
        }
        g
    }

    #[test]
    fn birc_agrees_with_unidirectional_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut agree = 0;
        for gi in 0..20 {
            let g = random_grid(&mut rng, 16, 0.02 + 0.01 * gi as f64);
            for _ in 0..500 {
                let mut pick = || {
                    // Half the samples sit on lattice planes to stress ties.
                    if rng.gen_bool(0.5) {
                        Vec3::new(rng.gen_range(0..16) as f64, rng.gen_range(0..16) as f64, rng.gen_range(0..16) as f64)
                    } else {
                        Vec3::new(rng.gen_range(0.0..16.0), rng.gen_range(0.0..16.0), rng.gen_range(0.0..16.0))
                    }
                };
                let a = pick();
                let b = pick();
                let (u, _) = unidirectional_visible_counted(&g, &a, &b).unwrap();
                let (bi, _) = birc_visible_counted(&g, &a, &b).unwrap();
                let (rev, _) = birc_visible_counted(&g, &b, &a).unwrap();
                let hit = raycast(&g, &a, &b).unwrap();
                let n = hit.traversed.len();
                let interior_clear = n < 3 || hit.traversed[1..n - 1].iter().all(|v| g.state(*v) != VoxelState::Occupied);
                let mut back = raycast(&g, &b, &a).unwrap().traversed;
                back.reverse();
                assert_eq!(back, hit.traversed);
                assert_eq!(u, bi);
                assert_eq!(bi, rev);
                assert_eq!(bi, interior_clear);
                agree += 1;
            }
        }
        assert_eq!(agree, 10_000);
    }

    proptest! {
        #[test]
        fn traversal_is_connected_and_ends_at_target(
            a in (0.0f64..8.0, 0.0f64..8.0, 0.0f64..8.0),
            b in (0.0f64..8.0, 0.0f64..8.0, 0.0f64..8.0),
        ) {
            let g = empty(8);
            let a = Vec3::new(a.0, a.1, a.2);
            let b = Vec3::new(b.0, b.1, b.2);
            let hit = raycast(&g, &a, &b).unwrap();
            prop_assert_eq!(hit.traversed[0], g.index_of(&a).unwrap());
            prop_assert_eq!(*hit.traversed.last().unwrap(), g.index_of(&b).unwrap());
            for w in hit.traversed.windows(2) {
                let d: i64 = (0..3).map(|k| (w[0][k] as i64 - w[1][k] as i64).abs()).sum();
                prop_assert_eq!(d, 1);
            }
        }
    }
}
