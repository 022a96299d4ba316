use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud, Vec3};
use nalgebra::{Matrix3, SymmetricEigen};
use rayon::prelude::*;
use std::collections::HashMap;

/// Similarity transform into the unit sphere: `q = (p - center) * scale`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Normalization {
    pub center: Vec3,
    pub scale: f64,
}

impl Normalization {
    pub fn identity() -> Self {
        Self { center: Vec3::zeros(), scale: 1.0 }
    }

    pub fn to_normalized(&self, p: &Vec3) -> Vec3 {
        (p - self.center) * self.scale
    }

    pub fn to_world(&self, q: &Vec3) -> Vec3 {
        q / self.scale + self.center
    }
}

/// Centers the cloud on its centroid and scales it so the farthest point has norm 1.
pub fn normalize_cloud(cloud: &PointCloud) -> Result<(PointCloud, Normalization)> {
    cloud.require_non_empty()?;
    let center = cloud.centroid().ok_or(Error::EmptyInput)?;
    let max = cloud.points.iter().map(|p| (p - center).norm()).fold(0.0, f64::max);
    if !(max > 0.0) || !max.is_finite() {
        return Err(Error::DegenerateCloud);
    }
    let t = Normalization { center, scale: 1.0 / max };
    let points = cloud.points.iter().map(|p| t.to_normalized(p)).collect();
    Ok((PointCloud { points, normals: cloud.normals.clone() }, t))
}

/// Eigen decomposition with eigenpairs sorted by ascending eigenvalue.
pub(crate) fn sorted_eigen(m: Matrix3<f64>) -> ([f64; 3], [Vec3; 3]) {
    let e = SymmetricEigen::new(m);
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]).then(a.cmp(&b)));
    let vals = idx.map(|i| e.eigenvalues[i]);
    let vecs = idx.map(|i| e.eigenvectors.column(i).into_owned());
    (vals, vecs)
}

/// Flips `v` so its first component with magnitude above 1e-12 is positive.
pub(crate) fn canonical_sign(v: Vec3) -> Vec3 {
    for k in 0..3 {
        if v[k].abs() > 1e-12 {
            return if v[k] < 0.0 { -v } else { v };
        }
    }
    v
}

/// PCA normals from the `k` nearest neighbors of each point.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> Result<PointCloud> {
    if k < 3 {
        return Err(Error::InsufficientNeighborhood(k));
    }
    if cloud.len() < k + 1 {
        return Err(Error::InsufficientNeighborhood(cloud.len()));
    }
    let tree = KdTree::new(&cloud.points);
    let normals: Vec<Vec3> = cloud
        .points
        .par_iter()
        .map(|p| {
            let nb = tree.knn(p, k + 1);
            let mean = nb.iter().map(|&i| cloud.points[i]).sum::<Vec3>() / nb.len() as f64;
            let mut cov = Matrix3::zeros();
            let mut spread: f64 = 0.0;
            for &i in &nb {
                let d = cloud.points[i] - mean;
                cov += d * d.transpose();
                spread = spread.max(d.norm());
            }
            let (_, vecs) = sorted_eigen(cov);
            let n = vecs[0].normalize();
            let side = n.dot(&(p - mean));
            if side.abs() <= 1e-9 * spread.max(f64::MIN_POSITIVE) {
                canonical_sign(n)
            } else if side < 0.0 {
                -n
            } else {
                n
            }
        })
        .collect();
    Ok(PointCloud { points: cloud.points.clone(), normals: Some(normals) })
}

fn cell_of(p: &Vec3, min: &Vec3, leaf: f64) -> [i64; 3] {
    let d = (p - min) / leaf;
    [d.x.floor() as i64, d.y.floor() as i64, d.z.floor() as i64]
}

/// Voxel-grid downsampling: one centroid per occupied `leaf` cell, ordered by
/// cell. Cells are anchored at the minimum corner of the cloud's bounding box.
/// Bucket normals are sign-aligned with the bucket's first normal before averaging.
pub fn downsample(cloud: &PointCloud, leaf: f64) -> Result<PointCloud> {
    if !(leaf > 0.0) {
        return Err(Error::InvalidParameter(format!("leaf must be positive, got {leaf}")));
    }
    let Some(bounds) = cloud.bounds() else {
        return Ok(cloud.clone());
    };
    let mut buckets: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in cloud.points.iter().enumerate() {
        buckets.entry(cell_of(p, &bounds.min, leaf)).or_default().push(i);
    }
    let mut keys: Vec<_> = buckets.keys().copied().collect();
    keys.sort_unstable();
    let mut points = Vec::with_capacity(keys.len());
    let mut normals = cloud.normals.as_ref().map(|_| Vec::with_capacity(keys.len()));
    for key in keys {
        let ids = &buckets[&key];
        points.push(ids.iter().map(|&i| cloud.points[i]).sum::<Vec3>() / ids.len() as f64);
        if let (Some(out), Some(ns)) = (normals.as_mut(), cloud.normals.as_ref()) {
            let first = ns[ids[0]];
            let sum: Vec3 = ids.iter().map(|&i| if ns[i].dot(&first) < 0.0 { -ns[i] } else { ns[i] }).sum();
            let n = sum.norm();
            out.push(if n > 1e-12 { sum / n } else { first });
        }
    }
    Ok(PointCloud { points, normals })
}

/// Makes normal signs globally consistent by propagating along a minimum
/// spanning tree of the k-NN graph weighted by `1 - |n_i . n_j|`. Each
/// component is seeded at its point farthest from the cloud centroid, whose
/// normal is turned away from the centroid, so normals end up outward.
pub fn orient_normals(cloud: &mut PointCloud, k: usize) {
    let Some(normals) = cloud.normals.as_mut() else {
        return;
    };
    let n = cloud.points.len();
    if n == 0 {
        return;
    }
    let tree = KdTree::new(&cloud.points);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, p) in cloud.points.iter().enumerate() {
        for j in tree.knn(p, k + 1) {
            if j != i {
                adj[i].push(j);
                adj[j].push(i);
            }
        }
    }
    for l in &mut adj {
        l.sort_unstable();
        l.dedup();
    }
    let mut done = vec![false; n];
    let center = cloud.points.iter().sum::<Vec3>() / n as f64;
    let far: Vec<f64> = cloud.points.iter().map(|p| (p - center).norm_squared()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| far[b].total_cmp(&far[a]).then(a.cmp(&b)));
    let weight = |a: &Vec3, b: &Vec3| OrderedWeight(1.0 - a.dot(b).abs());
    for seed in order {
        if done[seed] {
            continue;
        }
        if normals[seed].dot(&(cloud.points[seed] - center)) < 0.0 {
            normals[seed] = -normals[seed];
        }
        done[seed] = true;
        let mut heap = std::collections::BinaryHeap::new();
        for &j in &adj[seed] {
            heap.push(std::cmp::Reverse((weight(&normals[seed], &normals[j]), seed, j)));
        }
        while let Some(std::cmp::Reverse((_, from, to))) = heap.pop() {
            if done[to] {
                continue;
            }
            if normals[from].dot(&normals[to]) < 0.0 {
                normals[to] = -normals[to];
            }
            done[to] = true;
            for &j in &adj[to] {
                if !done[j] {
                    heap.push(std::cmp::Reverse((weight(&normals[to], &normals[j]), to, j)));
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct OrderedWeight(f64);

impl Eq for OrderedWeight {}

impl PartialOrd for OrderedWeight {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for OrderedWeight {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}
