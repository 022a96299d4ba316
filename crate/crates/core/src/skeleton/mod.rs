//! Curve skeleton extraction from a surface point cloud.

mod graph;
mod normals;
mod rosa;

pub use graph::{decimate, mls_smooth, smooth_and_link, LinkParams, SkeletonGraph};
pub use normals::{downsample, estimate_normals, normalize_cloud, orient_normals, Normalization};
pub use rosa::{initial_orientation, rosa_orientation, rosa_position, OrientationResult, RosaParams, RosaPoint};

use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Skeletonization parameters. Radii are multiples of `leaf`, all in the
/// normalized (unit sphere) frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SkeletonParams {
    pub leaf: f64,
    pub normal_k: usize,
    pub max_iters: usize,
    pub tol_deg: f64,
    pub slab_factor: f64,
    pub neigh_factor: f64,
    pub mls_factor: f64,
    pub link_factor: f64,
    pub edge_factor: f64,
    pub bridge_factor: f64,
}

impl Default for SkeletonParams {
    fn default() -> Self {
        Self {
            leaf: 0.05,
            normal_k: 16,
            max_iters: 20,
            tol_deg: 0.1,
            slab_factor: 0.5,
            neigh_factor: 5.0,
            mls_factor: 3.0,
            link_factor: 1.5,
            edge_factor: 3.0,
            bridge_factor: 10.0,
        }
    }
}

impl SkeletonParams {
    pub fn rosa(&self) -> RosaParams {
        RosaParams {
            r_slab: self.slab_factor * self.leaf,
            r_neigh: self.neigh_factor * self.leaf,
            max_iters: self.max_iters,
            tol: self.tol_deg.to_radians(),
        }
    }

    pub fn link(&self) -> LinkParams {
        LinkParams {
            r_mls: self.mls_factor * self.leaf,
            r_link: self.link_factor * self.leaf,
            r_edge: self.edge_factor * self.leaf,
            r_bridge: self.bridge_factor * self.leaf,
            r_support: self.neigh_factor * self.leaf,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("leaf", self.leaf),
            ("tol_deg", self.tol_deg),
            ("slab_factor", self.slab_factor),
            ("neigh_factor", self.neigh_factor),
            ("mls_factor", self.mls_factor),
            ("link_factor", self.link_factor),
            ("edge_factor", self.edge_factor),
            ("bridge_factor", self.bridge_factor),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("skeleton.{name} must be positive, got {v}")));
            }
        }
        if self.normal_k < 3 {
            return Err(Error::InvalidParameter(format!("skeleton.normal_k must be >= 3, got {}", self.normal_k)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("skeleton.max_iters must be >= 1".into()));
        }
        Ok(())
    }
}

const ORIENT_K: usize = 10;

/// True when `x` lies on the inner side of most of the neighborhood's
/// (outward) normals. Rejects medial points of the space between surfaces.
fn behind_surface(cloud: &PointCloud, hood: &[usize], x: &crate::geometry::Vec3) -> bool {
    let Some(normals) = cloud.normals.as_ref() else {
        return true;
    };
    if hood.is_empty() {
        return false;
    }
    let behind = hood.iter().filter(|&&k| (cloud.points[k] - x).dot(&normals[k]) > 0.0).count();
    2 * behind > hood.len()
}

/// Skeleton plus the intermediate products other stages and reports use.
#[derive(Debug, Clone)]
pub struct SkeletonOutput {
    /// World-frame graph; `transform` maps back to the normalized frame.
    pub graph: SkeletonGraph,
    /// Downsampled oriented cloud in the normalized frame.
    pub downsampled: PointCloud,
    pub rosa: Vec<RosaPoint>,
    /// ROSA points left out of linking (degenerate solves or outside the surface).
    pub flagged: usize,
}

/// normalize, normals, downsample, per-point ROSA, smooth and link, back to world frame.
pub fn extract_skeleton(cloud: &PointCloud, params: &SkeletonParams) -> Result<SkeletonOutput> {
    params.validate()?;
    let (normalized, transform) = normalize_cloud(cloud)?;
    let oriented = if normalized.has_normals() { normalized } else { estimate_normals(&normalized, params.normal_k)? };
    let mut pd = downsample(&oriented, params.leaf)?;
    orient_normals(&mut pd, ORIENT_K);
    let tree = KdTree::new(&pd.points);
    let rp = params.rosa();
    let normals = pd.normals.as_ref().expect("downsampled cloud keeps normals");
    let rosa: Vec<RosaPoint> = (0..pd.len())
        .into_par_iter()
        .map(|i| -> Result<RosaPoint> {
            let v0 = initial_orientation(&normals[i]);
            let o = rosa_orientation(&pd, &tree, i, &v0, &rp)?;
            let (position, pflag) = if o.neighborhood.is_empty() {
                (pd.points[i], true)
            } else {
                rosa_position(&pd, i, &o.neighborhood, 2.0 * rp.r_neigh)?
            };
            let inside = behind_surface(&pd, &o.neighborhood, &position);
            Ok(RosaPoint { position, orientation: o.orientation, source_index: i, flagged: o.flagged || pflag || !inside })
        })
        .collect::<Result<_>>()?;
    let flagged = rosa.iter().filter(|r| r.flagged).count();
    let kept: Vec<RosaPoint> = rosa.iter().copied().filter(|r| !r.flagged).collect();
    let link_input = if kept.len() >= 2 { &kept[..] } else { &rosa[..] };
    let mut g = smooth_and_link(link_input, &pd, &params.link())?;
    g.transform = transform;
    Ok(SkeletonOutput { graph: g.to_world(), downsampled: pd, rosa, flagged })
}
