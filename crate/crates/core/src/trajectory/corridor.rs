use crate::error::{Error, Result};
use crate::geometry::{signed_angle_diff, Aabb, FlightSpace, OccupancyGrid, Vec3, VoxelIndex};
use crate::planner::CoveragePath;
use serde::Serialize;

/// A trajectory waypoint. Yaw is unwrapped along the chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Knot {
    pub position: Vec3,
    pub pitch: f64,
    pub yaw: f64,
    /// Index of the path pose this knot reproduces (0 is the start pose).
    pub pose: Option<usize>,
}

/// Axis-aligned free boxes and the box of every piece between knots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Corridor {
    pub knots: Vec<Knot>,
    pub boxes: Vec<Aabb>,
    /// Box index of piece i (knot i to knot i + 1).
    pub piece_box: Vec<usize>,
}

/// Waypoint chain of a coverage path. Intermediate safe-path points take
/// gimbal angles interpolated by arc length.
pub fn knots_from_path(path: &CoveragePath) -> Vec<Knot> {
    let poses = path.poses();
    let mut out = vec![Knot { position: poses[0].position, pitch: poses[0].pitch, yaw: poses[0].yaw, pose: Some(0) }];
    for (k, seg) in path.segments.iter().enumerate() {
        let prev = *out.last().unwrap();
        let target = &poses[k + 1];
        let yaw = prev.yaw + signed_angle_diff(prev.yaw, target.yaw);
        let total = seg.length;
        let mut run = 0.0;
        let w = &seg.waypoints;
        for i in 1..w.len().saturating_sub(1) {
            run += (w[i] - w[i - 1]).norm();
            let s = if total > 0.0 { run / total } else { 0.0 };
            out.push(Knot {
                position: w[i],
                pitch: prev.pitch + s * (target.pitch - prev.pitch),
                yaw: prev.yaw + s * (yaw - prev.yaw),
                pose: None,
            });
        }
        let knot = Knot { position: target.position, pitch: target.pitch, yaw, pose: Some(k + 1) };
        let last = out.last_mut().unwrap();
        if (last.position - knot.position).norm() < 1e-9 && (last.pitch - knot.pitch).abs() < 1e-12 && (last.yaw - knot.yaw).abs() < 1e-12 {
            last.pose = knot.pose;
        } else {
            out.push(knot);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct IdxBox {
    lo: VoxelIndex,
    hi: VoxelIndex,
}

fn cell_box(grid: &OccupancyGrid, b: &IdxBox) -> Aabb {
    let vs = grid.voxel_size();
    let h = Vec3::repeat(vs / 2.0);
    Aabb::new(grid.center(b.lo) - h, grid.center(b.hi) + h)
}

fn all_free(flight: &FlightSpace, b: &IdxBox) -> bool {
    for i in b.lo[0]..=b.hi[0] {
        for j in b.lo[1]..=b.hi[1] {
            for k in b.lo[2]..=b.hi[2] {
                if flight.is_blocked([i, j, k]) {
                    return false;
                }
            }
        }
    }
    true
}

fn span(grid: &OccupancyGrid, a: &Vec3, b: &Vec3) -> Option<IdxBox> {
    let lo = grid.index_of(&a.inf(b))?;
    let hi = grid.index_of(&a.sup(b))?;
    Some(IdxBox { lo, hi })
}

/// Grows a free box one voxel layer per face in turn until every face is
/// stuck or the extent cap is reached.
fn inflate(flight: &FlightSpace, mut b: IdxBox, max_cells: usize) -> IdxBox {
    let dims = flight.grid().dims();
    let mut grown = true;
    while grown {
        grown = false;
        for axis in 0..3 {
            for up in [false, true] {
                if b.hi[axis] - b.lo[axis] + 1 >= max_cells {
                    continue;
                }
                let mut slab = b;
                if up {
                    if b.hi[axis] + 1 >= dims[axis] {
                        continue;
                    }
                    slab.lo[axis] = b.hi[axis] + 1;
                    slab.hi[axis] = b.hi[axis] + 1;
                } else {
                    if b.lo[axis] == 0 {
                        continue;
                    }
                    slab.lo[axis] = b.lo[axis] - 1;
                    slab.hi[axis] = b.lo[axis] - 1;
                }
                if all_free(flight, &slab) {
                    if up {
                        b.hi[axis] += 1;
                    } else {
                        b.lo[axis] -= 1;
                    }
                    grown = true;
                }
            }
        }
    }
    b
}

fn lerp_knot(a: &Knot, b: &Knot, s: f64) -> Knot {
    Knot {
        position: a.position + (b.position - a.position) * s,
        pitch: a.pitch + (b.pitch - a.pitch) * s,
        yaw: a.yaw + (b.yaw - a.yaw) * s,
        pose: None,
    }
}

/// Splits a piece until every part spans only free voxels.
fn split_free(flight: &FlightSpace, a: &Knot, b: &Knot, out: &mut Vec<Knot>, depth: usize) -> Result<()> {
    let grid = flight.grid();
    let ok = span(grid, &a.position, &b.position).is_some_and(|s| all_free(flight, &s));
    if ok {
        out.push(*b);
        return Ok(());
    }
    if depth > 24 || (b.position - a.position).norm() < 1e-6 {
        return Err(Error::CorridorFailure(format!(
            "no free box contains the piece from {:?} to {:?}",
            a.position.as_slice(),
            b.position.as_slice()
        )));
    }
    let m = lerp_knot(a, b, 0.5);
    split_free(flight, a, &m, out, depth + 1)?;
    split_free(flight, &m, b, out, depth + 1)
}

/// Free boxes along the waypoint chain. Pieces are split where their
/// bounding voxels are not all free; consecutive pieces share a box while
/// both endpoints stay inside it.
pub fn build_corridors(knots: &[Knot], flight: &FlightSpace, max_extent: f64) -> Result<Corridor> {
    if !(max_extent.is_finite() && max_extent > 0.0) {
        return Err(Error::InvalidParameter(format!("corridor extent must be positive, got {max_extent}")));
    }
    let grid = flight.grid();
    let first = knots.first().ok_or(Error::EmptyInput)?;
    if !flight.is_free_point(&first.position) {
        return Err(Error::CorridorFailure(format!("waypoint {:?} is not in free space", first.position.as_slice())));
    }
    let mut chain = vec![*first];
    for w in knots.windows(2) {
        split_free(flight, &w[0], &w[1], &mut chain, 0)?;
    }
    let max_cells = ((max_extent / grid.voxel_size()).floor() as usize).max(1);
    let mut boxes: Vec<Aabb> = Vec::new();
    let mut piece_box = Vec::with_capacity(chain.len().saturating_sub(1));
    for w in chain.windows(2) {
        let reuse = boxes.last().is_some_and(|b| b.contains(&w[0].position, 0.0) && b.contains(&w[1].position, 0.0));
        if !reuse {
            let seed = span(grid, &w[0].position, &w[1].position).expect("split pieces lie in the grid");
            boxes.push(cell_box(grid, &inflate(flight, seed, max_cells)));
        }
        piece_box.push(boxes.len() - 1);
    }
    Ok(Corridor { knots: chain, boxes, piece_box })
}
