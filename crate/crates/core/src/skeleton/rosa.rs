use super::normals::{canonical_sign, sorted_eigen};
use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud, Vec3};
use nalgebra::Matrix3;

/// A skeleton sample: position plus local symmetry axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosaPoint {
    pub position: Vec3,
    pub orientation: Vec3,
    pub source_index: usize,
    /// Set when either solve fell back to a degenerate-case answer.
    pub flagged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RosaParams {
    pub r_slab: f64,
    pub r_neigh: f64,
    pub max_iters: usize,
    /// Convergence threshold on the angle between successive axes (radians).
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrientationResult {
    pub orientation: Vec3,
    pub iterations: usize,
    /// Slab neighborhood of the returned orientation.
    pub neighborhood: Vec<usize>,
    pub flagged: bool,
}

/// Unit vector orthogonal to `n`, by Gram-Schmidt against the coordinate axis
/// least aligned with it (lowest axis index on ties).
pub fn initial_orientation(n: &Vec3) -> Vec3 {
    let mut k = 0;
    for j in 1..3 {
        if n[j].abs() < n[k].abs() {
            k = j;
        }
    }
    let mut e = Vec3::zeros();
    e[k] = 1.0;
    (e - n * n.dot(&e)).normalize()
}

fn slab(cloud: &PointCloud, tree: &KdTree, p: usize, v: &Vec3, params: &RosaParams) -> Vec<usize> {
    let c = cloud.points[p];
    tree.radius(&c, params.r_neigh)
        .into_iter()
        .filter(|&i| (cloud.points[i] - c).dot(v).abs() <= params.r_slab)
        .collect()
}

/// Second moment of the normals of `ids`.
fn normal_moment(normals: &[Vec3], ids: &[usize]) -> Matrix3<f64> {
    let mut m = Matrix3::zeros();
    for &i in ids {
        m += normals[i] * normals[i].transpose();
    }
    m / ids.len() as f64
}

/// Direction minimizing `v^T m v`. When the two smallest eigenvalues tie the
/// minimizer is a plane; the current direction projected into it is kept.
fn min_direction(m: Matrix3<f64>, current: &Vec3) -> Vec3 {
    let (vals, vecs) = sorted_eigen(m);
    let scale = vals[2].abs().max(1e-300);
    if vals[1] - vals[0] <= 1e-9 * scale {
        let proj = vecs[0] * vecs[0].dot(current) + vecs[1] * vecs[1].dot(current);
        if proj.norm() > 1e-6 {
            return proj.normalize();
        }
    }
    vecs[0].normalize()
}

/// Iterates the slab-covariance eigenproblem for the symmetry axis at point `p`.
pub fn rosa_orientation(cloud: &PointCloud, tree: &KdTree, p: usize, v0: &Vec3, params: &RosaParams) -> Result<OrientationResult> {
    let normals = cloud
        .normals
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("orientation requires normals".into()))?;
    let mut v = v0.normalize();
    let mut hood = slab(cloud, tree, p, &v, params);
    if hood.len() < 3 {
        return Ok(OrientationResult { orientation: canonical_sign(v), iterations: 0, neighborhood: hood, flagged: true });
    }
    let mut iterations = 0;
    let mut flagged = false;
    for _ in 0..params.max_iters {
        let mut next = min_direction(normal_moment(normals, &hood), &v);
        if next.dot(&v) < 0.0 {
            next = -next;
        }
        iterations += 1;
        let change = next.dot(&v).clamp(-1.0, 1.0).acos();
        let next_hood = slab(cloud, tree, p, &next, params);
        if next_hood.len() < 3 {
            flagged = true;
            break;
        }
        v = next;
        hood = next_hood;
        if change < params.tol {
            break;
        }
    }
    Ok(OrientationResult { orientation: canonical_sign(v), iterations, neighborhood: hood, flagged })
}

/// Point closest (least squares) to the normal lines of the neighborhood.
/// Falls back to projecting the neighborhood centroid on the normal line of
/// `p` when the system is rank-deficient or the solution lands farther than
/// `max_offset` from `p`; the bool is the fallback flag.
pub fn rosa_position(cloud: &PointCloud, p: usize, neighborhood: &[usize], max_offset: f64) -> Result<(Vec3, bool)> {
    if neighborhood.is_empty() {
        return Err(Error::InsufficientNeighborhood(0));
    }
    let normals = cloud
        .normals
        .as_ref()
        .ok_or_else(|| Error::InvalidParameter("position requires normals".into()))?;
    let mut a = Matrix3::zeros();
    let mut b = Vec3::zeros();
    for &k in neighborhood {
        let n = normals[k];
        let proj = Matrix3::identity() - n * n.transpose();
        a += proj;
        b += proj * cloud.points[k];
    }
    let origin = cloud.points[p];
    let fallback = || {
        let c = neighborhood.iter().map(|&k| cloud.points[k]).sum::<Vec3>() / neighborhood.len() as f64;
        let n = normals[p];
        origin + n * n.dot(&(c - origin))
    };
    let (vals, _) = sorted_eigen(a);
    if vals[0] <= 1e-6 * vals[2] {
        return Ok((fallback(), true));
    }
    match a.lu().solve(&b) {
        Some(x) if x.iter().all(|c| c.is_finite()) && (x - origin).norm() <= max_offset => Ok((x, false)),
        _ => Ok((fallback(), true)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};
    use std::f64::consts::TAU;

    fn params() -> RosaParams {
        RosaParams { r_slab: 0.1, r_neigh: 5.0, max_iters: 20, tol: 0.1f64.to_radians() }
    }

    fn ring_stack(rings: usize, per_ring: usize) -> PointCloud {
        let mut pts = Vec::new();
        let mut ns = Vec::new();
        for r in 0..rings {
            for i in 0..per_ring {
                let a = TAU * i as f64 / per_ring as f64;
                pts.push(Vec3::new(a.cos(), a.sin(), 0.15 * r as f64));
                ns.push(Vec3::new(a.cos(), a.sin(), 0.0));
            }
        }
        PointCloud::with_normals(pts, ns).unwrap()
    }

    #[test]
    fn converges_to_cylinder_axis() {
        let cloud = ring_stack(9, 48);
        let tree = KdTree::new(&cloud.points);
        let p = 4 * 48 + 5;
        let v0 = initial_orientation(&cloud.normal(p).unwrap());
        let r = rosa_orientation(&cloud, &tree, p, &v0, &params()).unwrap();
        assert!(r.orientation.dot(&Vec3::z()).abs() > 2f64.to_radians().cos());
        assert!(!r.flagged);
        // Monotone: the returned axis does not do worse than v0 on the final neighborhood.
        let m = normal_moment(cloud.normals.as_ref().unwrap(), &r.neighborhood);
        let q = |v: &Vec3| (v.transpose() * m * v)[0];
        assert!(q(&r.orientation) <= q(&v0) + 1e-12);
    }

    #[test]
    fn fixed_point_terminates_in_one_iteration() {
        let cloud = ring_stack(9, 48);
        let tree = KdTree::new(&cloud.points);
        let r = rosa_orientation(&cloud, &tree, 4 * 48, &Vec3::z(), &params()).unwrap();
        assert_eq!(r.iterations, 1);
        assert!((r.orientation - Vec3::z()).norm() < 1e-9);
    }

    #[test]
    fn identical_normals_give_orthogonal_axis() {
        let pts: Vec<Vec3> = (0..25).map(|i| Vec3::new((i % 5) as f64 * 0.1, (i / 5) as f64 * 0.1, 0.0)).collect();
        let ns = vec![Vec3::z(); 25];
        let cloud = PointCloud::with_normals(pts, ns).unwrap();
        let tree = KdTree::new(&cloud.points);
        let v0 = initial_orientation(&Vec3::z());
        let a = rosa_orientation(&cloud, &tree, 12, &v0, &params()).unwrap();
        let b = rosa_orientation(&cloud, &tree, 12, &v0, &params()).unwrap();
        assert!((a.orientation.norm() - 1.0).abs() < 1e-9);
        assert!(a.orientation.dot(&Vec3::z()).abs() < 1e-3);
        assert_eq!(a.orientation, b.orientation);
    }

    #[test]
    fn small_neighborhood_falls_back_to_v0() {
        let cloud = PointCloud::with_normals(vec![Vec3::zeros(), Vec3::x()], vec![Vec3::z(), Vec3::z()]).unwrap();
        let tree = KdTree::new(&cloud.points);
        let r = rosa_orientation(&cloud, &tree, 0, &Vec3::x(), &params()).unwrap();
        assert!(r.flagged);
        assert_eq!(r.orientation, Vec3::x());
    }

    #[test]
    fn two_lines_meet_at_origin() {
        let cloud = PointCloud::with_normals(vec![Vec3::x(), Vec3::y()], vec![Vec3::x(), Vec3::y()]).unwrap();
        let (x, flagged) = rosa_position(&cloud, 0, &[0, 1], 10.0).unwrap();
        assert!(!flagged);
        assert!(x.norm() < 1e-12);
    }

    #[test]
    fn circle_center_recovered() {
        let cloud = ring_stack(1, 36);
        let ids: Vec<usize> = (0..36).collect();
        let (x, _) = rosa_position(&cloud, 0, &ids, 10.0).unwrap();
        assert!(x.norm() < 1e-6);
        // normal equations residual
        let mut a = Matrix3::zeros();
        let mut b = Vec3::zeros();
        for &k in &ids {
            let n = cloud.normals.as_ref().unwrap()[k];
            let pr = Matrix3::identity() - n * n.transpose();
            a += pr;
            b += pr * cloud.points[k];
        }
        assert!((a * x - b).norm() <= 1e-8 * b.norm().max(1e-300) + 1e-12);
    }

    #[test]
    fn noisy_cross_section_near_axis() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let noise = Normal::new(0.0, 0.01).unwrap();
        let mut pts = Vec::new();
        let mut ns = Vec::new();
        for i in 0..200 {
            let a = TAU * i as f64 / 200.0;
            let r = 1.0 + noise.sample(&mut rng);
            pts.push(Vec3::new(r * a.cos() + 3.0, r * a.sin() - 1.0, noise.sample(&mut rng)));
            ns.push(Vec3::new(a.cos(), a.sin(), 0.0));
        }
        let cloud = PointCloud::with_normals(pts, ns).unwrap();
        let ids: Vec<usize> = (0..200).collect();
        let (x, _) = rosa_position(&cloud, 0, &ids, 10.0).unwrap();
        assert!((Vec3::new(x.x, x.y, 0.0) - Vec3::new(3.0, -1.0, 0.0)).norm() < 0.05);
    }

    #[test]
    fn parallel_normals_fall_back() {
        let cloud = PointCloud::with_normals(vec![Vec3::zeros(), Vec3::new(1.0, 0.0, 0.5)], vec![Vec3::z(), Vec3::z()]).unwrap();
        let (x, flagged) = rosa_position(&cloud, 0, &[0, 1], 10.0).unwrap();
        assert!(flagged);
        assert!((x - Vec3::new(0.0, 0.0, 0.25)).norm() < 1e-12);
        assert!(rosa_position(&cloud, 0, &[], 10.0).is_err());
    }
}
