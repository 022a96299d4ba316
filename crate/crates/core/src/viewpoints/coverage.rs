use super::{SensorModel, Viewpoint};
use crate::geometry::{birc_visible, wrap_angle, FlightSpace, KdTree, OccupancyGrid, Vec3, VoxelState};
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Immutable view of the map used for all visibility queries.
pub struct CoverageContext<'g> {
    pub grid: &'g OccupancyGrid,
    pub flight: &'g FlightSpace<'g>,
    pub sensor: SensorModel,
    /// Linear indices of Occupied voxels, ascending.
    pub occupied: Vec<usize>,
    centers: Vec<Vec3>,
    tree: KdTree,
}

impl<'g> CoverageContext<'g> {
    pub fn new(flight: &'g FlightSpace<'g>, sensor: SensorModel) -> Self {
        let grid = flight.grid();
        let occupied: Vec<usize> = (0..grid.len()).filter(|&l| grid.state_linear(l) == VoxelState::Occupied).collect();
        let centers: Vec<Vec3> = occupied.iter().map(|&l| grid.center(grid.unlinear(l))).collect();
        let tree = KdTree::new(&centers);
        Self { grid, flight, sensor, occupied, centers, tree }
    }

    pub fn center_of(&self, linear: usize) -> Vec3 {
        self.grid.center(self.grid.unlinear(linear))
    }

    /// Occupied voxels seen by a pose: in range, inside the FoV pyramid and unobstructed.
    pub fn coverage_set(&self, p: &Vec3, pitch: f64, yaw: f64) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .tree
            .radius(p, self.sensor.d_v)
            .into_iter()
            .filter(|&k| self.sensor.in_fov(p, pitch, yaw, &self.centers[k]))
            .filter(|&k| birc_visible(self.grid, p, &self.centers[k]).unwrap_or(false))
            .map(|k| self.occupied[k])
            .collect();
        out.sort_unstable();
        out
    }

    pub fn cover(&self, vp: &mut Viewpoint) {
        vp.covered = self.coverage_set(&vp.position, vp.pitch, vp.yaw);
    }

    pub fn cover_all(&self, vps: &mut [Viewpoint]) {
        vps.par_iter_mut().for_each(|vp| self.cover(vp));
    }

    /// A pose at `c + dist * u` looking back along `-u`, if it is flyable,
    /// within the gimbal range and sees `c`.
    pub fn witness_pose(&self, c: &Vec3, u: &Vec3, dist: f64) -> Option<(Vec3, f64, f64)> {
        let (pitch, yaw) = look_angles(&-u);
        if !self.sensor.pitch_ok(pitch) {
            return None;
        }
        let p = c + u * dist;
        if !self.flight.is_free_point(&p) || (p - c).norm() > self.sensor.d_v {
            return None;
        }
        birc_visible(self.grid, &p, c).unwrap_or(false).then_some((p, pitch, yaw))
    }

    /// Occupied voxels that some icosphere pose at distance `dist` can see,
    /// each with the first witnessing direction.
    pub fn coverable(&self, dist: f64) -> BTreeMap<usize, Vec3> {
        let dirs = icosphere(2);
        self.occupied
            .par_iter()
            .filter_map(|&l| {
                let c = self.center_of(l);
                dirs.iter().find(|u| self.witness_pose(&c, u, dist).is_some()).map(|u| (l, *u))
            })
            .collect()
    }
}

/// Pitch and yaw of a viewing direction (pitch positive upward).
pub fn look_angles(view: &Vec3) -> (f64, f64) {
    let v = view.normalize();
    (v.z.clamp(-1.0, 1.0).asin(), wrap_angle(v.y.atan2(v.x)))
}

/// Unit viewing direction of a pitch/yaw pair.
pub fn view_direction(pitch: f64, yaw: f64) -> Vec3 {
    Vec3::new(pitch.cos() * yaw.cos(), pitch.cos() * yaw.sin(), pitch.sin())
}

/// Unit sphere vertices of a subdivided icosahedron (12, 42, 162, ... points).
pub fn icosphere(levels: usize) -> Vec<Vec3> {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut verts: Vec<Vec3> = [
        (-1.0, t, 0.0), (1.0, t, 0.0), (-1.0, -t, 0.0), (1.0, -t, 0.0),
        (0.0, -1.0, t), (0.0, 1.0, t), (0.0, -1.0, -t), (0.0, 1.0, -t),
        (t, 0.0, -1.0), (t, 0.0, 1.0), (-t, 0.0, -1.0), (-t, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vec3::new(x, y, z).normalize())
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..levels {
        let mut mid = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, verts: &mut Vec<Vec3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                verts.push(((verts[a] + verts[b]) / 2.0).normalize());
                verts.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut verts);
            let bc = midpoint(b, c, &mut verts);
            let ca = midpoint(c, a, &mut verts);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    verts
}

/// Owner of every multiply-observed voxel: the observer with the most
/// voxels in `target` (lower index on ties). Returns the owned sets.
pub fn assign_voxels(covered: &[Vec<usize>], target: Option<&std::collections::HashSet<usize>>) -> Vec<Vec<usize>> {
    let relevant: Vec<Vec<usize>> = covered
        .iter()
        .map(|c| c.iter().copied().filter(|l| target.is_none_or(|t| t.contains(l))).collect())
        .collect();
    let mut order: Vec<usize> = (0..relevant.len()).collect();
    order.sort_by(|&a, &b| relevant[b].len().cmp(&relevant[a].len()).then(a.cmp(&b)));
    let mut taken = std::collections::HashSet::new();
    let mut owned = vec![Vec::new(); relevant.len()];
    for i in order {
        for &l in &relevant[i] {
            if taken.insert(l) {
                owned[i].push(l);
            }
        }
    }
    owned
}
