use super::normals::{sorted_eigen, Normalization};
use super::rosa::RosaPoint;
use crate::error::{Error, Result};
use crate::geometry::{KdTree, PointCloud, Vec3};
use nalgebra::Matrix3;
use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashMap};
use std::io::{BufRead, Write};

/// Undirected skeleton graph. Edges are stored as `(i, j)` with `i < j`, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonGraph {
    pub vertices: Vec<Vec3>,
    pub edges: Vec<(usize, usize)>,
    /// Maps the normalized frame to the world frame.
    pub transform: Normalization,
}

impl SkeletonGraph {
    /// Builds a graph, dropping self-loops and duplicate edges.
    pub fn new(vertices: Vec<Vec3>, edges: impl IntoIterator<Item = (usize, usize)>, transform: Normalization) -> Self {
        let set: BTreeSet<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).map(|(a, b)| (a.min(b), a.max(b))).collect();
        Self { vertices, edges: set.into_iter().collect(), transform }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.vertices.len()];
        for &(a, b) in &self.edges {
            d[a] += 1;
            d[b] += 1;
        }
        d
    }

    /// Sorted neighbor lists.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    /// Component id per vertex, numbered by lowest member index.
    pub fn components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.vertices.len());
        for &(a, b) in &self.edges {
            uf.union(a, b);
        }
        let mut ids = HashMap::new();
        (0..self.vertices.len())
            .map(|v| {
                let r = uf.find(v);
                let n = ids.len();
                *ids.entry(r).or_insert(n)
            })
            .collect()
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }

    pub fn edge_length(&self, e: (usize, usize)) -> f64 {
        (self.vertices[e.0] - self.vertices[e.1]).norm()
    }

    /// Same graph with vertices mapped through `transform` into the world frame.
    pub fn to_world(&self) -> SkeletonGraph {
        let vertices = self.vertices.iter().map(|v| self.transform.to_world(v)).collect();
        SkeletonGraph { vertices, edges: self.edges.clone(), transform: self.transform }
    }

    /// Plain-text export: `skeleton V E`, then `v x y z` and `e i j` lines.
    pub fn write_text<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "skeleton {} {}", self.vertices.len(), self.edges.len())?;
        for v in &self.vertices {
            writeln!(w, "v {} {} {}", v.x, v.y, v.z)?;
        }
        for (a, b) in &self.edges {
            writeln!(w, "e {a} {b}")?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<SkeletonGraph> {
        let perr = |line: usize, message: String| Error::Parse { location: format!("line {line}"), message };
        let mut lines = r.lines().enumerate();
        let (nv, ne) = match lines.next() {
            Some((_, l)) => {
                let l = l?;
                let f: Vec<&str> = l.split_whitespace().collect();
                if f.len() != 3 || f[0] != "skeleton" {
                    return Err(perr(1, "expected `skeleton V E` header".into()));
                }
                let nv = f[1].parse::<usize>().map_err(|e| perr(1, e.to_string()))?;
                let ne = f[2].parse::<usize>().map_err(|e| perr(1, e.to_string()))?;
                (nv, ne)
            }
            None => return Err(Error::EmptyInput),
        };
        let mut vertices = Vec::with_capacity(nv);
        let mut edges = Vec::with_capacity(ne);
        for (i, l) in lines {
            let l = l?;
            let f: Vec<&str> = l.split_whitespace().collect();
            match f.as_slice() {
                [] => {}
                ["v", x, y, z] => {
                    let p = [x, y, z].map(|s| s.parse::<f64>().map_err(|e| perr(i + 1, e.to_string())));
                    let [x, y, z] = p;
                    vertices.push(Vec3::new(x?, y?, z?));
                }
                ["e", a, b] => {
                    let a = a.parse::<usize>().map_err(|e| perr(i + 1, e.to_string()))?;
                    let b = b.parse::<usize>().map_err(|e| perr(i + 1, e.to_string()))?;
                    edges.push((a, b));
                }
                _ => return Err(perr(i + 1, format!("unrecognized record `{l}`"))),
            }
        }
        if vertices.len() != nv || edges.len() != ne {
            return Err(perr(1, format!("header declares {nv} vertices / {ne} edges, found {} / {}", vertices.len(), edges.len())));
        }
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= nv || *b >= nv) {
            return Err(perr(1, format!("edge ({a}, {b}) references a missing vertex")));
        }
        Ok(SkeletonGraph::new(vertices, edges, Normalization::identity()))
    }
}

pub(crate) struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    pub(crate) fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Merges the sets; the smaller root index survives. Returns false if already joined.
    pub(crate) fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    pub r_mls: f64,
    pub r_link: f64,
    pub r_edge: f64,
    pub r_bridge: f64,
    /// A candidate edge is valid when every sample along it has an input point within this radius.
    pub r_support: f64,
}

const SPUR_FACTOR: f64 = 3.0;
const LOOP_FACTOR: f64 = 8.0;
const JUNCTION_MERGE_FACTOR: f64 = 2.0;

/// Linear 1D moving least squares: each position is replaced by the fit of
/// its `r` neighborhood along the neighborhood's dominant direction.
pub fn mls_smooth(points: &[Vec3], r: f64) -> Vec<Vec3> {
    let tree = KdTree::new(points);
    points
        .iter()
        .map(|p| {
            let nb = tree.radius(p, r);
            if nb.len() < 3 {
                return *p;
            }
            let mean = nb.iter().map(|&i| points[i]).sum::<Vec3>() / nb.len() as f64;
            let mut cov = Matrix3::zeros();
            for &i in &nb {
                let d = points[i] - mean;
                cov += d * d.transpose();
            }
            let (_, vecs) = sorted_eigen(cov);
            let dir = vecs[2];
            let mut stt = 0.0;
            let mut sxt = Vec3::zeros();
            for &i in &nb {
                let d = points[i] - mean;
                let t = d.dot(&dir);
                stt += t * t;
                sxt += d * t;
            }
            if stt <= 1e-300 {
                return mean;
            }
            mean + sxt / stt * (p - mean).dot(&dir)
        })
        .collect()
}

/// Greedy clustering in index order: each unclaimed point absorbs the
/// unclaimed points within `r` and becomes their centroid.
pub fn decimate(points: &[Vec3], r: f64) -> Vec<Vec3> {
    decimate_with_labels(points, r).0
}

/// [`decimate`] plus the cluster of every input point.
fn decimate_with_labels(points: &[Vec3], r: f64) -> (Vec<Vec3>, Vec<usize>) {
    let tree = KdTree::new(points);
    let mut label = vec![usize::MAX; points.len()];
    let mut out = Vec::new();
    for i in 0..points.len() {
        if label[i] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = tree.radius(&points[i], r).into_iter().filter(|&j| label[j] == usize::MAX).collect();
        for &j in &members {
            label[j] = out.len();
        }
        out.push(members.iter().map(|&j| points[j]).sum::<Vec3>() / members.len() as f64);
    }
    (out, label)
}

struct Linker<'a> {
    params: LinkParams,
    support: &'a KdTree,
    support_labels: Vec<usize>,
}

impl Linker<'_> {
    fn segment_supported(&self, a: &Vec3, b: &Vec3) -> bool {
        let len = (b - a).norm();
        let samples = ((len / (self.params.r_link / 3.0)).ceil() as usize).max(2);
        (0..=samples).all(|s| {
            let q = a + (b - a) * (s as f64 / samples as f64);
            self.support.nearest(&q).is_some_and(|(_, d2)| d2.sqrt() <= self.params.r_support)
        })
    }

    fn input_component(&self, v: &Vec3) -> usize {
        self.support.nearest(v).map_or(0, |(i, _)| self.support_labels[i])
    }
}

/// Connected components of the input points under the `r` neighborhood relation.
fn cloud_components(points: &[Vec3], tree: &KdTree, r: f64) -> Vec<usize> {
    let mut uf = UnionFind::new(points.len());
    let mut buf = Vec::new();
    for (i, p) in points.iter().enumerate() {
        tree.radius_unsorted(p, r, &mut buf);
        for &j in &buf {
            uf.union(i, j);
        }
    }
    (0..points.len()).map(|i| uf.find(i)).collect()
}

/// Working graph with removable vertices.
struct WorkGraph {
    pos: Vec<Vec3>,
    alive: Vec<bool>,
    adj: Vec<BTreeSet<usize>>,
}

impl WorkGraph {
    fn new(pos: Vec<Vec3>) -> Self {
        let n = pos.len();
        Self { pos, alive: vec![true; n], adj: vec![BTreeSet::new(); n] }
    }

    fn add_edge(&mut self, a: usize, b: usize) {
        if a != b {
            self.adj[a].insert(b);
            self.adj[b].insert(a);
        }
    }

    fn remove_vertex(&mut self, v: usize) {
        let nbs: Vec<usize> = self.adj[v].iter().copied().collect();
        for u in nbs {
            self.adj[u].remove(&v);
        }
        self.adj[v].clear();
        self.alive[v] = false;
    }

    fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    fn len(&self, a: usize, b: usize) -> f64 {
        (self.pos[a] - self.pos[b]).norm()
    }

    fn fragments(&self) -> Vec<Vec<usize>> {
        let mut uf = UnionFind::new(self.pos.len());
        for v in 0..self.pos.len() {
            for &u in &self.adj[v] {
                uf.union(v, u);
            }
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for v in (0..self.pos.len()).filter(|&v| self.alive[v]) {
            groups.entry(uf.find(v)).or_default().push(v);
        }
        let mut out: Vec<Vec<usize>> = groups.into_values().collect();
        out.sort_by_key(|g| g[0]);
        out
    }

    /// Shortest path distances from `s`, truncated at `limit`; returns (dist, predecessor).
    fn dijkstra(&self, s: usize, limit: f64) -> HashMap<usize, (f64, usize)> {
        let mut best: HashMap<usize, (f64, usize)> = HashMap::new();
        let mut heap = BinaryHeap::new();
        best.insert(s, (0.0, s));
        heap.push(Reverse((Dist(0.0), s)));
        while let Some(Reverse((Dist(d), v))) = heap.pop() {
            if best.get(&v).is_some_and(|&(bd, _)| d > bd) {
                continue;
            }
            for &u in &self.adj[v] {
                let nd = d + self.len(v, u);
                if nd > limit {
                    continue;
                }
                if best.get(&u).is_none_or(|&(bd, _)| nd < bd) {
                    best.insert(u, (nd, v));
                    heap.push(Reverse((Dist(nd), u)));
                }
            }
        }
        best
    }

    /// Removes short leaf chains hanging off junctions, never lowering a
    /// junction below degree 2. Returns true if anything changed.
    fn prune_spurs(&mut self, max_len: f64) -> bool {
        let mut changed_any = false;
        loop {
            let mut spurs: HashMap<usize, Vec<(f64, usize, Vec<usize>)>> = HashMap::new();
            for leaf in (0..self.pos.len()).filter(|&v| self.alive[v] && self.degree(v) == 1) {
                let mut chain = vec![leaf];
                let mut prev = leaf;
                let mut cur = *self.adj[leaf].iter().next().unwrap();
                let mut len = self.len(prev, cur);
                while self.degree(cur) == 2 {
                    chain.push(cur);
                    let next = *self.adj[cur].iter().find(|&&u| u != prev).unwrap();
                    len += self.len(cur, next);
                    prev = cur;
                    cur = next;
                }
                if self.degree(cur) >= 3 && len < max_len {
                    spurs.entry(cur).or_default().push((len, leaf, chain));
                }
            }
            if spurs.is_empty() {
                return changed_any;
            }
            let mut junctions: Vec<usize> = spurs.keys().copied().collect();
            junctions.sort_unstable();
            let mut changed = false;
            for j in junctions {
                let mut list = spurs.remove(&j).unwrap();
                list.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
                let removable = self.degree(j).saturating_sub(2);
                for (_, _, chain) in list.into_iter().take(removable) {
                    if chain.iter().all(|&v| self.alive[v]) && self.degree(j) > 2 {
                        for v in chain {
                            self.remove_vertex(v);
                        }
                        changed = true;
                    }
                }
            }
            if !changed {
                return changed_any;
            }
            changed_any = true;
        }
    }

    /// Collapses junctions within `radius` of each other (along the graph)
    /// into one vertex at the mean of the merged junctions.
    fn contract_junctions(&mut self, radius: f64) -> bool {
        let junctions: Vec<usize> = (0..self.pos.len()).filter(|&v| self.alive[v] && self.degree(v) >= 3).collect();
        let mut uf = UnionFind::new(self.pos.len());
        let mut merged = false;
        for &j in &junctions {
            let reach = self.dijkstra(j, radius);
            for &k in &junctions {
                if k <= j || !reach.contains_key(&k) {
                    continue;
                }
                let mut cur = k;
                while cur != j {
                    let p = reach[&cur].1;
                    merged |= uf.union(cur, p);
                    cur = p;
                }
            }
        }
        if !merged {
            return false;
        }
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for v in (0..self.pos.len()).filter(|&v| self.alive[v]) {
            groups.entry(uf.find(v)).or_default().push(v);
        }
        let mut roots: Vec<usize> = groups.keys().copied().collect();
        roots.sort_unstable();
        for root in roots {
            let members = &groups[&root];
            if members.len() < 2 {
                continue;
            }
            let js: Vec<usize> = members.iter().copied().filter(|v| junctions.contains(v)).collect();
            let center = js.iter().map(|&v| self.pos[v]).sum::<Vec3>() / js.len() as f64;
            let mut outside = BTreeSet::new();
            for &m in members {
                for &u in &self.adj[m] {
                    if uf.find(u) != root {
                        outside.insert(u);
                    }
                }
            }
            for &m in members {
                self.remove_vertex(m);
            }
            self.alive[root] = true;
            self.pos[root] = center;
            for u in outside {
                self.add_edge(root, u);
            }
        }
        true
    }
}

/// Total order for non-NaN distances.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dist(f64);

impl Eq for Dist {}

impl PartialOrd for Dist {
    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Dist {
    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&o.0)
    }
}

/// Smooths ROSA positions and links them into a skeleton graph (normalized frame).
///
/// Linking: minimum spanning forest over supported edges between close or
/// touching clusters, bridging of
/// fragments within one input component, the largest structure per input
/// component, spur pruning and junction contraction, then loop closure for
/// candidate edges whose graph detour is long.
pub fn smooth_and_link(rosa: &[RosaPoint], cloud: &PointCloud, params: &LinkParams) -> Result<SkeletonGraph> {
    if rosa.len() < 2 {
        return Err(Error::SkeletonCollapsed(rosa.len()));
    }
    cloud.require_non_empty()?;
    let positions: Vec<Vec3> = rosa.iter().map(|r| r.position).collect();
    let smoothed = mls_smooth(&positions, params.r_mls);
    let (verts, cluster) = decimate_with_labels(&smoothed, params.r_link);

    let support = KdTree::new(&cloud.points);
    let support_labels = cloud_components(&cloud.points, &support, params.r_edge);
    let linker = Linker { params: *params, support: &support, support_labels };

    // Candidate links: close vertices, or clusters whose members touch.
    let vtree = KdTree::new(&verts);
    let mut pairs = BTreeSet::new();
    for (i, v) in verts.iter().enumerate() {
        for (j, d2) in vtree.radius_with_dist2(v, params.r_edge) {
            if j > i && d2.sqrt() < params.r_edge {
                pairs.insert((i, j));
            }
        }
    }
    let stree = KdTree::new(&smoothed);
    let mut buf = Vec::new();
    for (k, p) in smoothed.iter().enumerate() {
        stree.radius_unsorted(p, params.r_link, &mut buf);
        for &m in &buf {
            let (a, b) = (cluster[k], cluster[m]);
            if a != b {
                pairs.insert((a.min(b), a.max(b)));
            }
        }
    }
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, j) in pairs {
        let d = (verts[i] - verts[j]).norm();
        if d > 0.0 && d <= params.r_bridge && linker.segment_supported(&verts[i], &verts[j]) {
            candidates.push((d, i, j));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then((a.1, a.2).cmp(&(b.1, b.2))));

    let mut g = WorkGraph::new(verts.clone());
    let mut uf = UnionFind::new(verts.len());
    for &(_, i, j) in &candidates {
        if uf.union(i, j) {
            g.add_edge(i, j);
        }
    }

    // Bridge fragments that belong to the same input component.
    let labels: Vec<usize> = verts.iter().map(|v| linker.input_component(v)).collect();
    let frags = g.fragments();
    let frag_label: Vec<usize> = frags
        .iter()
        .map(|f| {
            let mut count: HashMap<usize, usize> = HashMap::new();
            for &v in f {
                *count.entry(labels[v]).or_default() += 1;
            }
            count.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))).unwrap().0
        })
        .collect();
    let mut bridges = Vec::new();
    for a in 0..frags.len() {
        for b in a + 1..frags.len() {
            if frag_label[a] != frag_label[b] {
                continue;
            }
            let mut best = (f64::INFINITY, 0, 0);
            for &u in &frags[a] {
                for &w in &frags[b] {
                    let d = g.len(u, w);
                    if d < best.0 {
                        best = (d, u, w);
                    }
                }
            }
            if best.0 < params.r_bridge {
                bridges.push((best.0, a, b, best.1, best.2));
            }
        }
    }
    bridges.sort_by(|x, y| x.0.total_cmp(&y.0).then((x.1, x.2).cmp(&(y.1, y.2))));
    let mut fuf = UnionFind::new(frags.len());
    for (_, a, b, u, w) in bridges {
        if fuf.union(a, b) {
            g.add_edge(u, w);
        }
    }

    // Keep the largest structure per input component.
    let frags = g.fragments();
    let mut best_per_label: HashMap<usize, usize> = HashMap::new();
    for (fi, f) in frags.iter().enumerate() {
        let label = labels[f[0]];
        match best_per_label.get(&label) {
            Some(&cur) if frags[cur].len() >= f.len() => {}
            _ => {
                best_per_label.insert(label, fi);
            }
        }
    }
    for (fi, f) in frags.iter().enumerate() {
        if !best_per_label.values().any(|&k| k == fi) {
            for &v in f {
                g.remove_vertex(v);
            }
        }
    }

    let simplify = |g: &mut WorkGraph| loop {
        let pruned = g.prune_spurs(SPUR_FACTOR * params.r_edge);
        let contracted = g.contract_junctions(JUNCTION_MERGE_FACTOR * params.r_edge);
        if !pruned && !contracted {
            break;
        }
    };
    simplify(&mut g);

    let loop_len = LOOP_FACTOR * params.r_edge;
    for &(_, i, j) in &candidates {
        if !g.alive[i] || !g.alive[j] || g.adj[i].contains(&j) {
            continue;
        }
        if !g.dijkstra(i, loop_len).contains_key(&j) {
            g.add_edge(i, j);
        }
    }
    simplify(&mut g);

    let mut remap = vec![usize::MAX; verts.len()];
    let mut vertices = Vec::new();
    for v in (0..verts.len()).filter(|&v| g.alive[v]) {
        remap[v] = vertices.len();
        vertices.push(g.pos[v]);
    }
    if vertices.len() < 2 {
        return Err(Error::SkeletonCollapsed(vertices.len()));
    }
    let mut edges = Vec::new();
    for v in 0..verts.len() {
        for &u in &g.adj[v] {
            if v < u && g.len(v, u) > 0.0 {
                edges.push((remap[v], remap[u]));
            }
        }
    }
    Ok(SkeletonGraph::new(vertices, edges, Normalization::identity()))
}
