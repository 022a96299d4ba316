//! Tour solvers: an exhaustive oracle for small instances and a local-search
//! heuristic for closed asymmetric tours and fixed-endpoint open paths.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Write;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TourKind {
    /// Tour starts at 0 and returns to it.
    ClosedAtsp,
    /// Path from 0 to n - 1.
    OpenPath,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    n: usize,
    costs: Vec<f64>,
    pub kind: TourKind,
}

impl CostMatrix {
    /// Row-major costs; `f64::INFINITY` marks a forbidden arc.
    pub fn new(n: usize, costs: Vec<f64>, kind: TourKind) -> Result<Self> {
        if costs.len() != n * n {
            return Err(Error::InvalidParameter(format!("cost matrix needs {} entries, got {}", n * n, costs.len())));
        }
        if let Some(k) = costs.iter().position(|c| c.is_nan() || *c < 0.0) {
            return Err(Error::InvalidParameter(format!("invalid cost at ({}, {})", k / n, k % n)));
        }
        let mut costs = costs;
        for i in 0..n {
            costs[i * n + i] = 0.0;
        }
        Ok(Self { n, costs, kind })
    }

    pub fn from_fn(n: usize, kind: TourKind, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let costs = (0..n * n).map(|k| if k / n == k % n { 0.0 } else { f(k / n, k % n) }).collect();
        Self::new(n, costs, kind)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.costs[i * self.n + j]
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| {
            let (a, b) = (self.get(i, j), self.get(j, i));
            a == b || (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
        }))
    }

    /// Cost of visiting `order`, closing the loop for closed tours.
    pub fn tour_cost(&self, order: &[usize]) -> f64 {
        let mut c: f64 = order.windows(2).map(|w| self.get(w[0], w[1])).sum();
        if self.kind == TourKind::ClosedAtsp && order.len() > 1 {
            c += self.get(order[order.len() - 1], order[0]);
        }
        c
    }

    /// Plain-text dump: n, then one row per line (`inf` for forbidden arcs).
    pub fn write_debug<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", self.n)?;
        for i in 0..self.n {
            let row: Vec<String> = (0..self.n)
                .map(|j| {
                    let c = self.get(i, j);
                    if c.is_finite() { format!("{c}") } else { "inf".to_string() }
                })
                .collect();
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    pub order: Vec<usize>,
    pub cost: f64,
}

pub const ORACLE_MAX_N: usize = 11;

/// Up to this size segment relocations consider every segment length.
const FULL_SEGMENT_N: usize = 16;

fn next_permutation(v: &mut [usize]) -> bool {
    if v.len() < 2 {
        return false;
    }
    let mut i = v.len() - 1;
    while i > 0 && v[i - 1] >= v[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = v.len() - 1;
    while v[j] <= v[i - 1] {
        j -= 1;
    }
    v.swap(i - 1, j);
    v[i..].reverse();
    true
}

/// Exhaustive minimum; ties go to the lexicographically smallest order.
pub fn brute_force(m: &CostMatrix) -> Result<Tour> {
    let n = m.n;
    if n > ORACLE_MAX_N {
        return Err(Error::OracleTooLarge(n));
    }
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let (lo, hi) = match m.kind {
        TourKind::ClosedAtsp => (1, n),
        TourKind::OpenPath => (1, n.saturating_sub(1).max(1)),
    };
    let mut middle: Vec<usize> = (lo..hi).collect();
    let mut order = Vec::with_capacity(n);
    let mut best: Option<Tour> = None;
    loop {
        order.clear();
        order.push(0);
        order.extend(&middle);
        if m.kind == TourKind::OpenPath && n > 1 {
            order.push(n - 1);
        }
        let c = m.tour_cost(&order);
        if c.is_finite() && best.as_ref().is_none_or(|b| c < b.cost) {
            best = Some(Tour { order: order.clone(), cost: c });
        }
        if !next_permutation(&mut middle) {
            break;
        }
    }
    best.ok_or(Error::Infeasible)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    /// Evaluated-move budget as a multiple of n^2.
    pub budget_factor: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { budget_factor: 200 }
    }
}

/// Heuristic tour with default options.
pub fn solve(m: &CostMatrix, seed: u64) -> Result<Tour> {
    solve_traced(m, seed, &SolveOptions::default()).map(|(t, _)| t)
}

struct Search<'m> {
    m: &'m CostMatrix,
    /// Working costs with forbidden arcs replaced by a large penalty.
    w: Vec<f64>,
    n: usize,
    closed: bool,
    symmetric: bool,
    budget: usize,
    used: usize,
}

impl Search<'_> {
    #[inline]
    fn c(&self, a: usize, b: usize) -> f64 {
        self.w[a * self.n + b]
    }

    fn cost(&self, order: &[usize]) -> f64 {
        let mut c: f64 = order.windows(2).map(|w| self.c(w[0], w[1])).sum();
        if self.closed {
            c += self.c(order[self.n - 1], order[0]);
        }
        c
    }

    /// Node after position `p`, if any.
    #[inline]
    fn after(&self, order: &[usize], p: usize) -> Option<usize> {
        if p + 1 < self.n {
            Some(order[p + 1])
        } else if self.closed {
            Some(order[0])
        } else {
            None
        }
    }

    fn last_mobile(&self) -> usize {
        if self.closed { self.n - 1 } else { self.n - 2 }
    }

    fn tick(&mut self) -> bool {
        self.used += 1;
        self.used <= self.budget
    }

    /// First-improvement descent over per-position neighborhoods, resuming the
    /// scan where the last improvement happened. Returns false once the budget
    /// is spent.
    fn descend(&mut self, order: &mut Vec<usize>, cost: &mut f64, trace: &mut Option<&mut Vec<f64>>) -> bool {
        let last = self.last_mobile();
        if last < 1 {
            return true;
        }
        let mut i = 1;
        let mut idle = 0;
        while idle < last {
            match self.improve_at(order, cost, i) {
                None => return false,
                Some(true) => {
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(*cost);
                    }
                    idle = 0;
                }
                Some(false) => {
                    idle += 1;
                    i = if i == last { 1 } else { i + 1 };
                }
            }
        }
        true
    }

    /// Tries every move anchored at position `i`; applies the first improving
    /// one. None when the budget runs out.
    fn improve_at(&mut self, order: &mut Vec<usize>, cost: &mut f64, i: usize) -> Option<bool> {
        let n = self.n;
        let last = self.last_mobile();
        let eps = 1e-9 * cost.abs().max(1.0);
        // relocation of the segment starting at i
        let max_len = if n <= FULL_SEGMENT_N { last } else { 3 };
        for len in 1..=(last + 1 - i).min(max_len) {
            let k = i + len - 1;
            let (prev, s, e) = (order[i - 1], order[i], order[k]);
            let next = self.after(order, k).expect("mobile positions have successors");
            let gaps = if self.closed { n } else { n - 1 };
            for j in 0..gaps {
                if j + 1 >= i && j <= k {
                    continue;
                }
                // moving the longer block equals moving the block it jumps over
                let jumped = if j > k { j - k } else { i - 1 - j };
                if jumped < len {
                    continue;
                }
                let b = self.after(order, j).expect("gap has a successor");
                if !self.tick() {
                    return None;
                }
                let a = order[j];
                let delta = self.c(prev, next) + self.c(a, s) + self.c(e, b) - self.c(prev, s) - self.c(e, next) - self.c(a, b);
                if delta < -eps {
                    let seg: Vec<usize> = order.drain(i..=k).collect();
                    let at = if j > k { j - len + 1 } else { j + 1 };
                    order.splice(at..at, seg);
                    *cost = self.cost(order);
                    return Some(true);
                }
            }
        }
        // exchange of the node at i with any other mobile node
        for j in 1..=last {
            if j == i {
                continue;
            }
            if !self.tick() {
                return None;
            }
            let (lo, hi) = (i.min(j), i.max(j));
            let (x, y, p1) = (order[lo], order[hi], order[lo - 1]);
            let q2 = self.after(order, hi).expect("mobile positions have successors");
            let delta = if hi == lo + 1 {
                self.c(p1, y) + self.c(y, x) + self.c(x, q2) - self.c(p1, x) - self.c(x, y) - self.c(y, q2)
            } else {
                let (q1, p2) = (order[lo + 1], order[hi - 1]);
                self.c(p1, y) + self.c(y, q1) + self.c(p2, x) + self.c(x, q2) - self.c(p1, x) - self.c(x, q1) - self.c(p2, y) - self.c(y, q2)
            };
            if delta < -eps {
                order.swap(lo, hi);
                *cost = self.cost(order);
                return Some(true);
            }
        }
        if self.symmetric {
            for j in i + 1..=last {
                if !self.tick() {
                    return None;
                }
                let (p, x, y) = (order[i - 1], order[i], order[j]);
                let q = self.after(order, j).expect("mobile positions have successors");
                let delta = self.c(p, y) + self.c(x, q) - self.c(p, x) - self.c(y, q);
                if delta < -eps {
                    order[i..=j].reverse();
                    *cost = self.cost(order);
                    return Some(true);
                }
            }
        }
        Some(false)
    }

    /// Nearest-neighbor tour. Closed tours grow from `root` and are rotated to
    /// start at 0; open paths leave 0 through `root` first. With an rng, each
    /// step picks uniformly among the `RCL` cheapest candidates.
    fn nearest_neighbor(&self, root: usize, mut rng: Option<&mut ChaCha8Rng>) -> Vec<usize> {
        const RCL: usize = 3;
        let n = self.n;
        let mut visited = vec![false; n];
        let mut order = if self.closed || root == 0 { vec![root] } else { vec![0, root] };
        for &v in &order {
            visited[v] = true;
        }
        if !self.closed {
            visited[n - 1] = true;
        }
        let mut cur = *order.last().unwrap();
        let mut cand = Vec::with_capacity(n);
        while order.len() < n - usize::from(!self.closed) {
            cand.clear();
            cand.extend((0..n).filter(|&j| !visited[j]));
            cand.sort_by(|&a, &b| self.c(cur, a).total_cmp(&self.c(cur, b)).then(a.cmp(&b)));
            let pick = match rng.as_deref_mut() {
                Some(r) => r.gen_range(0..cand.len().min(RCL)),
                None => 0,
            };
            let next = cand[pick];
            visited[next] = true;
            order.push(next);
            cur = next;
        }
        if !self.closed {
            order.push(n - 1);
        } else {
            let z = order.iter().position(|&v| v == 0).unwrap();
            order.rotate_left(z);
        }
        order
    }

    /// Restart point: a randomized nearest-neighbor tour from a random root.
    fn restart(&self, rng: &mut ChaCha8Rng) -> Vec<usize> {
        let root = if self.closed { rng.gen_range(0..self.n) } else { rng.gen_range(0..self.n - 1) };
        self.nearest_neighbor(root, Some(rng))
    }
}

/// Heuristic tour plus the incumbent cost after every accepted move.
///
/// Best nearest-neighbor construction over all roots, then first-improvement
/// descent over segment relocations, node exchanges and, for symmetric
/// matrices, segment reversals. Segments are 1 to 3 long, or any length on
/// small instances. Remaining budget goes to seeded randomized
/// nearest-neighbor restarts; the incumbent only changes on strict improvement.
pub fn solve_traced(m: &CostMatrix, seed: u64, opts: &SolveOptions) -> Result<(Tour, Vec<f64>)> {
    let n = m.n;
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let closed = m.kind == TourKind::ClosedAtsp;
    if n <= 2 || (!closed && n <= 3) {
        let order: Vec<usize> = (0..n).collect();
        let cost = m.tour_cost(&order);
        return if cost.is_finite() { Ok((Tour { order, cost }, vec![cost])) } else { Err(Error::Infeasible) };
    }
    let finite_max = m.costs.iter().copied().filter(|c| c.is_finite()).fold(0.0, f64::max);
    let penalty = (finite_max + 1.0) * n as f64 * 4.0;
    let w: Vec<f64> = m.costs.iter().map(|&c| if c.is_finite() { c } else { penalty }).collect();
    let mut s = Search {
        m,
        w,
        n,
        closed,
        symmetric: m.is_symmetric(1e-9),
        budget: opts.budget_factor.max(1) * n * n,
        used: 0,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let roots = if closed { n } else { n - 1 };
    let mut best = (0..roots)
        .map(|r| s.nearest_neighbor(r, None))
        .min_by(|a, b| s.cost(a).total_cmp(&s.cost(b)))
        .unwrap();
    let mut best_cost = s.cost(&best);
    let mut trace = vec![best_cost];
    let mut more = s.descend(&mut best, &mut best_cost, &mut Some(&mut trace));
    while more {
        let mut cand = s.restart(&mut rng);
        let mut cand_cost = s.cost(&cand);
        more = s.descend(&mut cand, &mut cand_cost, &mut None);
        if cand_cost < best_cost - 1e-9 * best_cost.abs().max(1.0) {
            best = cand;
            best_cost = cand_cost;
            trace.push(best_cost);
        }
    }
    let cost = s.m.tour_cost(&best);
    if !cost.is_finite() {
        return Err(Error::Infeasible);
    }
    Ok((Tour { order: best, cost }, trace))
}
