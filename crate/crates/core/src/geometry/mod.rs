//! Point clouds, spatial indexing, the voxel occupancy map, ray traversal and
//! grid path search.

mod astar;
mod grid;
mod kdtree;
mod raycast;

pub use astar::{astar_path, astar_path_raw, AstarOptions, FlightSpace, SafePathResult};
pub use grid::{OccupancyGrid, VoxelIndex, VoxelState, DEFAULT_GRID_CAP};
pub use kdtree::KdTree;
pub use raycast::{birc_visible, birc_visible_counted, raycast, unidirectional_visible_counted, RayHit, VoxelWalk};

use crate::error::{Error, Result};
use nalgebra::Vector3;

pub type Vec3 = Vector3<f64>;

/// A scene point cloud, optionally carrying unit normals.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
    pub normals: Option<Vec<Vec3>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec3>) -> Self {
        Self { points, normals: None }
    }

    /// Builds an oriented cloud. Normals are normalized; zero normals are rejected.
    pub fn with_normals(points: Vec<Vec3>, normals: Vec<Vec3>) -> Result<Self> {
        if normals.len() != points.len() {
            return Err(Error::InvalidParameter(format!(
                "{} normals for {} points",
                normals.len(),
                points.len()
            )));
        }
        let normals = normals
            .into_iter()
            .enumerate()
            .map(|(i, n)| {
                let norm = n.norm();
                if !norm.is_finite() || norm < 1e-12 {
                    Err(Error::InvalidParameter(format!("normal {i} has zero length")))
                } else {
                    Ok(n / norm)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { points, normals: Some(normals) })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn has_normals(&self) -> bool {
        self.normals.is_some()
    }

    pub fn normal(&self, i: usize) -> Option<Vec3> {
        self.normals.as_ref().map(|n| n[i])
    }

    pub fn bounds(&self) -> Option<Aabb> {
        Aabb::from_points(&self.points)
    }

    pub fn centroid(&self) -> Option<Vec3> {
        if self.points.is_empty() {
            return None;
        }
        Some(self.points.iter().sum::<Vec3>() / self.points.len() as f64)
    }

    pub(crate) fn require_non_empty(&self) -> Result<()> {
        if self.points.is_empty() {
            Err(Error::EmptyInput)
        } else {
            Ok(())
        }
    }
}

/// Axis-aligned box, closed on both ends.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Self {
        Self { min, max }
    }

    pub fn from_points(points: &[Vec3]) -> Option<Self> {
        let first = *points.first()?;
        let mut b = Aabb::new(first, first);
        for p in &points[1..] {
            b.min = b.min.inf(p);
            b.max = b.max.sup(p);
        }
        Some(b)
    }

    pub fn contains(&self, p: &Vec3, tol: f64) -> bool {
        (0..3).all(|k| p[k] >= self.min[k] - tol && p[k] <= self.max[k] + tol)
    }

    pub fn intersects(&self, other: &Aabb) -> bool {
        (0..3).all(|k| self.min[k] <= other.max[k] && other.min[k] <= self.max[k])
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }
}

/// Shortest unsigned angular distance between two angles, in `[0, π]`.
pub fn ang(a1: f64, a2: f64) -> f64 {
    let d = (a1 - a2).abs() % std::f64::consts::TAU;
    d.min(std::f64::consts::TAU - d)
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut w = a % TAU;
    if w <= -PI {
        w += TAU;
    } else if w > PI {
        w -= TAU;
    }
    w
}

/// Signed shortest difference `to - from`, in `(-π, π]`.
pub fn signed_angle_diff(from: f64, to: f64) -> f64 {
    wrap_angle(to - from)
}
