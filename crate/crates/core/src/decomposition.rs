//! Skeleton decomposition into direction-coherent branches and the
//! allocation of scene points to them.

use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud, Vec3};
use crate::skeleton::SkeletonGraph;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::io::Write;

/// A simple path of skeleton edges, each stored in walk direction.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Branch {
    pub id: usize,
    pub edges: Vec<(usize, usize)>,
    /// Direction of the first edge; every edge is within the split angle of it.
    pub reference: Vec3,
}

impl Branch {
    /// Vertices along the branch, in walk order.
    pub fn vertices(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.edges.iter().map(|e| e.0).collect();
        if let Some(last) = self.edges.last() {
            v.push(last.1);
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OrientedPoint {
    pub position: Vec3,
    pub direction: Vec3,
    pub branch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subspace {
    pub id: usize,
    pub branch: Branch,
    pub allocated_points: Vec<usize>,
    pub planes: Vec<OrientedPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DecompositionParams {
    /// Split angle between an edge and its branch reference (degrees).
    pub delta_deg: f64,
    /// Oriented point spacing (meters).
    pub step: f64,
    /// Plane capture half-width as a multiple of `step`.
    pub slab_factor: f64,
    /// Plane capture radius as a multiple of the median skeleton-to-surface distance.
    pub plane_radius_factor: f64,
}

impl Default for DecompositionParams {
    fn default() -> Self {
        Self { delta_deg: 45.0, step: 0.6, slab_factor: 1.0, plane_radius_factor: 3.0 }
    }
}

impl DecompositionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta_deg > 0.0 && self.delta_deg <= 180.0) {
            return Err(Error::InvalidParameter(format!("decomposition.delta_deg must be in (0, 180], got {}", self.delta_deg)));
        }
        for (name, v) in [("step", self.step), ("slab_factor", self.slab_factor), ("plane_radius_factor", self.plane_radius_factor)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("decomposition.{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub branches: Vec<Branch>,
    pub subspaces: Vec<Subspace>,
    /// Subspace id of every input point.
    pub labels: Vec<usize>,
    pub r_plane: f64,
}

/// Vertices of degree three or more.
pub fn find_joints(graph: &SkeletonGraph) -> Vec<usize> {
    graph.degrees().into_iter().enumerate().filter(|&(_, d)| d >= 3).map(|(v, _)| v).collect()
}

/// Angle between undirected directions, in [0, pi/2].
pub(crate) fn undirected_angle(a: &Vec3, b: &Vec3) -> f64 {
    let c = (a.dot(b) / (a.norm() * b.norm())).abs().min(1.0);
    c.acos()
}

fn walk_chain(adj: &[Vec<usize>], used: &mut HashSet<(usize, usize)>, start: usize, first: usize) -> Vec<(usize, usize)> {
    let key = |a: usize, b: usize| (a.min(b), a.max(b));
    let mut chain = vec![(start, first)];
    used.insert(key(start, first));
    let (mut prev, mut cur) = (start, first);
    while adj[cur].len() == 2 {
        let next = if adj[cur][0] == prev { adj[cur][1] } else { adj[cur][0] };
        if !used.insert(key(cur, next)) {
            break;
        }
        chain.push((cur, next));
        prev = cur;
        cur = next;
    }
    chain
}

/// Walks joint-to-joint/leaf chains, then splits each chain where an edge
/// turns by `delta` or more from the current branch reference.
pub fn decompose_branches(graph: &SkeletonGraph, delta: f64) -> Result<Vec<Branch>> {
    if graph.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if !(delta > 0.0 && delta <= std::f64::consts::PI) {
        return Err(Error::InvalidParameter(format!("split angle must be in (0, pi], got {delta}")));
    }
    let adj = graph.adjacency();
    let mut used = HashSet::new();
    let mut chains = Vec::new();
    for j in find_joints(graph) {
        for &u in &adj[j] {
            if !used.contains(&(j.min(u), j.max(u))) {
                chains.push(walk_chain(&adj, &mut used, j, u));
            }
        }
    }
    // Joint-free components: start at a leaf, or anywhere on a pure cycle.
    loop {
        let free = |v: usize, used: &HashSet<(usize, usize)>| adj[v].iter().any(|&u| !used.contains(&(v.min(u), v.max(u))));
        let seed = (0..adj.len())
            .find(|&v| adj[v].len() == 1 && free(v, &used))
            .or_else(|| (0..adj.len()).find(|&v| free(v, &used)));
        let Some(s) = seed else { break };
        let u = *adj[s].iter().find(|&&u| !used.contains(&(s.min(u), s.max(u)))).unwrap();
        chains.push(walk_chain(&adj, &mut used, s, u));
    }

    let dir = |e: &(usize, usize)| graph.vertices[e.1] - graph.vertices[e.0];
    let mut branches = Vec::new();
    for chain in chains {
        let chain: Vec<(usize, usize)> = chain.into_iter().filter(|e| dir(e).norm() > 0.0).collect();
        let Some(first) = chain.first() else { continue };
        let mut current = Branch { id: branches.len(), edges: vec![*first], reference: dir(first).normalize() };
        for e in &chain[1..] {
            if undirected_angle(&dir(e), &current.reference) >= delta {
                let next = Branch { id: current.id + 1, edges: vec![*e], reference: dir(e).normalize() };
                branches.push(std::mem::replace(&mut current, next));
            } else {
                current.edges.push(*e);
            }
        }
        branches.push(current);
    }
    Ok(branches)
}

/// Oriented points every `step` along each edge (endpoints included, shared vertices once).
pub fn discretize_branch(graph: &SkeletonGraph, branch: &Branch, step: f64) -> Vec<OrientedPoint> {
    let mut out = Vec::new();
    for (k, &(a, b)) in branch.edges.iter().enumerate() {
        let (pa, pb) = (graph.vertices[a], graph.vertices[b]);
        let len = (pb - pa).norm();
        if len == 0.0 {
            continue;
        }
        let d = (pb - pa) / len;
        let mut t = if k == 0 { 0.0 } else { step };
        while t < len {
            out.push(OrientedPoint { position: pa + d * t, direction: d, branch: branch.id });
            t += step;
        }
        out.push(OrientedPoint { position: pb, direction: d, branch: branch.id });
    }
    out
}

/// Assigns every cloud point to one branch via the planes of the oriented points.
pub fn allocate_space(cloud: &PointCloud, graph: &SkeletonGraph, branches: &[Branch], params: &DecompositionParams) -> Result<Decomposition> {
    if cloud.is_empty() {
        return Err(Error::EmptyInput);
    }
    params.validate()?;
    if branches.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let planes: Vec<OrientedPoint> = branches.iter().flat_map(|b| discretize_branch(graph, b, params.step)).collect();
    let positions: Vec<Vec3> = planes.iter().map(|o| o.position).collect();
    let tree = KdTree::new(&positions);
    let nearest: Vec<(usize, f64)> = cloud.points.par_iter().map(|p| tree.nearest(p).expect("non-empty planes")).collect();
    let mut dists: Vec<f64> = nearest.iter().map(|(_, d2)| d2.sqrt()).collect();
    dists.sort_by(|a, b| a.total_cmp(b));
    let median = dists[dists.len() / 2];
    let r_plane = params.plane_radius_factor * median.max(params.step);
    let halfwidth = params.slab_factor * params.step;

    // (distance, subspace, plane index) ordering makes ties go to the lower subspace id.
    let owner = |p: &Vec3, fallback: usize| -> usize {
        let mut best: Option<(f64, usize, usize)> = None;
        for (k, d2) in tree.radius_with_dist2(p, r_plane) {
            let o = &planes[k];
            if (p - o.position).dot(&o.direction).abs() > halfwidth {
                continue;
            }
            let cand = (d2, o.branch, k);
            if best.is_none_or(|b| cand.0.total_cmp(&b.0).then((cand.1, cand.2).cmp(&(b.1, b.2))).is_lt()) {
                best = Some(cand);
            }
        }
        match best {
            Some((_, _, k)) => planes[k].branch,
            None => {
                // nearest oriented point overall, ties to the lower subspace id
                let d2 = nearest[fallback].1;
                let ties = tree.radius_with_dist2(p, d2.sqrt());
                ties.iter().filter(|(_, t)| *t <= d2).map(|&(k, _)| planes[k].branch).min().unwrap_or(planes[nearest[fallback].0].branch)
            }
        }
    };
    let labels: Vec<usize> = cloud.points.par_iter().enumerate().map(|(i, p)| owner(p, i)).collect();
    let mut subspaces: Vec<Subspace> = branches
        .iter()
        .map(|b| Subspace {
            id: b.id,
            branch: b.clone(),
            allocated_points: Vec::new(),
            planes: planes.iter().filter(|o| o.branch == b.id).copied().collect(),
        })
        .collect();
    for (i, &l) in labels.iter().enumerate() {
        subspaces[l].allocated_points.push(i);
    }
    Ok(Decomposition { branches: branches.to_vec(), subspaces, labels, r_plane })
}

/// Full decomposition of a scene given its skeleton.
pub fn decompose(cloud: &PointCloud, graph: &SkeletonGraph, params: &DecompositionParams) -> Result<Decomposition> {
    params.validate()?;
    let branches = decompose_branches(graph, params.delta_deg.to_radians())?;
    allocate_space(cloud, graph, &branches, params)
}

impl Decomposition {
    /// One subspace id per line, in input point order.
    pub fn write_labels<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for l in &self.labels {
            writeln!(w, "{l}")?;
        }
        Ok(())
    }

    /// CSV: id, edges, points, reference direction.
    pub fn write_summary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "id,edges,points,ref_x,ref_y,ref_z")?;
        for s in &self.subspaces {
            let r = s.branch.reference;
            writeln!(w, "{},{},{},{:.6},{:.6},{:.6}", s.id, s.branch.edges.len(), s.allocated_points.len(), r.x, r.y, r.z)?;
        }
        Ok(())
    }
}
