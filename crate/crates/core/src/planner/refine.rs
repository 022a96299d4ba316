use super::{CoveragePath, DynamicLimits, PathCache};
use crate::decomposition::Branch;
use crate::error::{Error, Result};
use crate::geometry::{KdTree, Vec3};
use crate::viewpoints::Viewpoint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineParams {
    /// Radius around each junction vertex, meters.
    pub r_jc: f64,
    pub iterations: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RefineStats {
    pub junctions: usize,
    /// Junctions with at least two nearby viewpoints.
    pub active_junctions: usize,
    pub iterations: usize,
    pub accepted: usize,
}

/// Skeleton vertices shared by two or more branches, ascending.
pub fn junction_vertices(branches: &[Branch]) -> Vec<usize> {
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for b in branches {
        let mut v = b.vertices();
        v.sort_unstable();
        v.dedup();
        for k in v {
            *count.entry(k).or_default() += 1;
        }
    }
    count.into_iter().filter(|&(_, c)| c >= 2).map(|(k, _)| k).collect()
}

/// Randomized 2-opt moves among viewpoints near skeleton junctions. A move
/// is kept only if it strictly lowers the total cost; the start pose and the
/// final viewpoint never move.
#[allow(clippy::too_many_arguments)]
pub fn refine_path(
    path: &CoveragePath,
    cache: &mut PathCache,
    viewpoints: &[Viewpoint],
    start_node: usize,
    branches: &[Branch],
    skeleton_vertices: &[Vec3],
    params: &RefineParams,
    limits: &DynamicLimits,
) -> Result<(CoveragePath, RefineStats)> {
    if !(params.r_jc.is_finite() && params.r_jc > 0.0) {
        return Err(Error::InvalidParameter(format!("r_jc must be positive, got {}", params.r_jc)));
    }
    let junctions = junction_vertices(branches);
    let mut seq = path.sequence(start_node);
    let positions: Vec<Vec3> = path.viewpoints.iter().map(|v| v.position).collect();
    let tree = KdTree::new(&positions);
    let sets: Vec<Vec<usize>> = junctions
        .iter()
        .filter_map(|&z| skeleton_vertices.get(z))
        .map(|z| {
            let mut near: Vec<usize> = tree.radius(z, params.r_jc).into_iter().map(|k| path.order[k]).collect();
            near.sort_unstable();
            near
        })
        .filter(|s| s.len() >= 2)
        .collect();
    let mut stats = RefineStats { junctions: junctions.len(), active_junctions: sets.len(), iterations: 0, accepted: 0 };
    if sets.is_empty() || params.iterations == 0 || seq.len() < 4 {
        return Ok((path.clone(), stats));
    }
    let last = seq.len() - 1;
    let mut pos = vec![usize::MAX; cache.len()];
    for (i, &k) in seq.iter().enumerate() {
        pos[k] = i;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut temp = Vec::new();
    for it in 0..params.iterations {
        stats.iterations += 1;
        let set = &sets[it % sets.len()];
        let v1 = set[rng.gen_range(0..set.len())];
        let i = pos[v1];
        let forward = i < last && rng.gen_bool(0.5);
        let (v2, far, arc1) = if forward {
            (seq[i + 1], seq.get(i + 2).copied(), i)
        } else {
            (seq[i - 1], i.checked_sub(2).map(|k| seq[k]), i - 1)
        };
        temp.clear();
        temp.extend(set.iter().copied().filter(|&k| k != v1 && k != v2 && Some(k) != far));
        if temp.is_empty() {
            continue;
        }
        let v3 = temp[rng.gen_range(0..temp.len())];
        let j = pos[v3];
        let arc2 = if forward {
            if j == last {
                continue;
            }
            j
        } else {
            j - 1
        };
        let (lo, hi) = (arc1.min(arc2), arc1.max(arc2));
        if hi - lo < 2 {
            continue;
        }
        let (a, b, c, d) = (seq[lo], seq[lo + 1], seq[hi], seq[hi + 1]);
        let before = cache.cost(a, b, limits)? + cache.cost(c, d, limits)?;
        let after = cache.cost(a, c, limits)? + cache.cost(b, d, limits)?;
        if after < before - 1e-9 {
            seq[lo + 1..=hi].reverse();
            for (k, &node) in seq.iter().enumerate().take(hi + 1).skip(lo + 1) {
                pos[node] = k;
            }
            stats.accepted += 1;
        }
    }
    let refined = CoveragePath::from_sequence(cache, viewpoints, &seq, limits)?;
    Ok((refined, stats))
}
