//! Synthetic desk-scale scenes with analytic ground truth.

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Cylinder,
    PipeNetwork,
    YTube,
    Torus,
    WallGap,
    Tower,
}

impl SceneKind {
    pub const ALL: [SceneKind; 6] =
        [SceneKind::Cylinder, SceneKind::PipeNetwork, SceneKind::YTube, SceneKind::Torus, SceneKind::WallGap, SceneKind::Tower];

    pub fn name(self) -> &'static str {
        match self {
            SceneKind::Cylinder => "cylinder",
            SceneKind::PipeNetwork => "pipe_network",
            SceneKind::YTube => "y_tube",
            SceneKind::Torus => "torus",
            SceneKind::WallGap => "wall_gap",
            SceneKind::Tower => "tower",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SceneKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scene `{s}` (expected one of cylinder, pipe_network, y_tube, torus, wall_gap, tower)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneParams {
    pub n_points: usize,
    /// Standard deviation of Gaussian noise along the surface normal (meters).
    pub noise: f64,
}

impl Default for SceneParams {
    fn default() -> Self {
        Self { n_points: 20_000, noise: 0.0 }
    }
}

/// Analytic solid used for inside tests and axis distances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solid {
    Tube { a: Vec3, b: Vec3, radius: f64 },
    Torus { major: f64, minor: f64 },
    Box { min: Vec3, max: Vec3 },
    Slab { min: Vec3, max: Vec3 },
}

fn segment_param(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    (p - a).dot(&(b - a)) / (b - a).norm_squared()
}

pub(crate) fn dist_to_segment(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let t = segment_param(p, a, b).clamp(0.0, 1.0);
    (p - (a + (b - a) * t)).norm()
}

impl Solid {
    pub fn contains(&self, p: &Vec3) -> bool {
        match *self {
            Solid::Tube { a, b, radius } => {
                let t = segment_param(p, &a, &b);
                (0.0..=1.0).contains(&t) && (p - (a + (b - a) * t)).norm() < radius
            }
            Solid::Torus { major, minor } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                (rho - major).powi(2) + p.z * p.z < minor * minor
            }
            Solid::Box { min, max } | Solid::Slab { min, max } => (0..3).all(|k| p[k] > min[k] && p[k] < max[k]),
        }
    }

    /// Distance from `p` to the solid's medial curve (None for slabs).
    pub fn axis_distance(&self, p: &Vec3) -> Option<f64> {
        match *self {
            Solid::Tube { a, b, .. } => Some(dist_to_segment(p, &a, &b)),
            Solid::Torus { major, .. } => {
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                Some(((rho - major).powi(2) + p.z * p.z).sqrt())
            }
            Solid::Box { min, max } => {
                let c = (min + max) / 2.0;
                Some(dist_to_segment(p, &Vec3::new(c.x, c.y, min.z), &Vec3::new(c.x, c.y, max.z)))
            }
            Solid::Slab { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub kind: SceneKind,
    pub solids: Vec<Solid>,
    /// Expected skeleton topology.
    pub joints: usize,
    pub leaves: usize,
    pub cycles: usize,
    /// Index of the generating solid per point.
    pub labels: Vec<usize>,
}

impl GroundTruth {
    pub fn contains(&self, p: &Vec3) -> bool {
        self.solids.iter().any(|s| s.contains(p))
    }

    pub fn axis_distance(&self, p: &Vec3) -> Option<f64> {
        self.solids.iter().filter_map(|s| s.axis_distance(p)).min_by(|a, b| a.total_cmp(b))
    }
}

struct Sampler {
    rng: ChaCha8Rng,
    noise: Option<Normal<f64>>,
}

impl Sampler {
    fn jitter(&mut self) -> f64 {
        match &self.noise {
            Some(n) => n.sample(&mut self.rng),
            None => 0.0,
        }
    }

    fn frame(axis: &Vec3) -> (Vec3, Vec3) {
        let helper = if axis.z.abs() < 0.9 { Vec3::z() } else { Vec3::x() };
        let u = axis.cross(&helper).normalize();
        (u, axis.cross(&u))
    }

    /// Uniform point on the lateral surface of a tube, with noise along the normal.
    fn tube(&mut self, a: &Vec3, b: &Vec3, r: f64) -> Vec3 {
        let axis = (b - a).normalize();
        let (u, v) = Self::frame(&axis);
        let t: f64 = self.rng.gen_range(0.0..1.0);
        let ang: f64 = self.rng.gen_range(0.0..TAU);
        let n = u * ang.cos() + v * ang.sin();
        a + (b - a) * t + n * (r + self.jitter())
    }
}

/// Samples a synthetic scene. Deterministic for a given seed.
pub fn synth_scene(kind: SceneKind, params: &SceneParams, seed: u64) -> Result<(PointCloud, GroundTruth)> {
    if params.n_points == 0 {
        return Err(Error::InvalidParameter("scene.n_points must be positive".into()));
    }
    if !(params.noise >= 0.0) || !params.noise.is_finite() {
        return Err(Error::InvalidParameter(format!("scene.noise must be >= 0, got {}", params.noise)));
    }
    let noise = if params.noise > 0.0 { Some(Normal::new(0.0, params.noise).expect("valid sigma")) } else { None };
    let mut s = Sampler { rng: ChaCha8Rng::seed_from_u64(seed), noise };
    let n = params.n_points;
    let (points, labels, solids, (joints, leaves, cycles)) = match kind {
        SceneKind::Cylinder => {
            let (a, b) = (Vec3::zeros(), Vec3::new(0.0, 0.0, 10.0));
            let pts: Vec<Vec3> = (0..n).map(|_| s.tube(&a, &b, 1.0)).collect();
            (pts, vec![0; n], vec![Solid::Tube { a, b, radius: 1.0 }], (0, 2, 0))
        }
        SceneKind::YTube => {
            let r = 0.5;
            let solids: Vec<Solid> = (0..3)
                .map(|k| {
                    let ang = PI / 2.0 + TAU * k as f64 / 3.0;
                    let dir = Vec3::new(ang.cos(), ang.sin(), 0.0);
                    Solid::Tube { a: -dir * (0.5 * r), b: dir * 4.0, radius: r }
                })
                .collect();
            let (p, l) = union_of_tubes(&mut s, &solids, n);
            (p, l, solids, (1, 3, 0))
        }
        SceneKind::PipeNetwork => {
            let r = 0.4;
            let solids = vec![
                Solid::Tube { a: Vec3::new(-6.0, 0.0, 0.0), b: Vec3::new(6.0, 0.0, 0.0), radius: r },
                Solid::Tube { a: Vec3::new(-3.0, 0.0, 0.0), b: Vec3::new(-3.0, 0.0, 4.0), radius: r },
                Solid::Tube { a: Vec3::new(3.0, 0.0, 0.0), b: Vec3::new(3.0, 0.0, 4.0), radius: r },
                Solid::Tube { a: Vec3::new(0.0, 0.0, 0.0), b: Vec3::new(0.0, 4.0, 0.0), radius: r },
            ];
            let (p, l) = union_of_tubes(&mut s, &solids, n);
            (p, l, solids, (3, 5, 0))
        }
        SceneKind::Torus => {
            let (big, small) = (3.0, 0.6);
            let mut pts = Vec::with_capacity(n);
            while pts.len() < n {
                let u: f64 = s.rng.gen_range(0.0..TAU);
                let v: f64 = s.rng.gen_range(0.0..TAU);
                // area element is proportional to (R + r cos v)
                if s.rng.gen_range(0.0..big + small) > big + small * v.cos() {
                    continue;
                }
                let rr = small + s.jitter();
                let rho = big + rr * v.cos();
                pts.push(Vec3::new(rho * u.cos(), rho * u.sin(), rr * v.sin()));
            }
            (pts, vec![0; n], vec![Solid::Torus { major: big, minor: small }], (0, 0, 1))
        }
        SceneKind::WallGap => {
            // Thin wall in the plane x = 0 with a doorway |y| < 1, z < 3.
            let mut pts = Vec::with_capacity(n);
            while pts.len() < n {
                let y: f64 = s.rng.gen_range(-4.0..4.0);
                let z: f64 = s.rng.gen_range(0.0..4.0);
                if y.abs() < 1.0 && z < 3.0 {
                    continue;
                }
                pts.push(Vec3::new(s.jitter(), y, z));
            }
            let slab = Solid::Slab { min: Vec3::new(-0.05, -4.0, 0.0), max: Vec3::new(0.05, 4.0, 4.0) };
            (pts, vec![0; n], vec![slab], (0, 0, 0))
        }
        SceneKind::Tower => {
            let (h, w) = (6.0, 0.6);
            let lateral = 4.0 * 2.0 * w * h;
            let top = 4.0 * w * w;
            let mut pts = Vec::with_capacity(n);
            for _ in 0..n {
                let pick: f64 = s.rng.gen_range(0.0..lateral + top);
                let a: f64 = s.rng.gen_range(-w..w);
                let e = s.jitter();
                if pick >= lateral {
                    let b: f64 = s.rng.gen_range(-w..w);
                    pts.push(Vec3::new(a, b, h + e));
                    continue;
                }
                let z: f64 = s.rng.gen_range(0.0..h);
                let face = (pick / (lateral / 4.0)) as usize;
                pts.push(match face {
                    0 => Vec3::new(w + e, a, z),
                    1 => Vec3::new(-w - e, a, z),
                    2 => Vec3::new(a, w + e, z),
                    _ => Vec3::new(a, -w - e, z),
                });
            }
            let solid = Solid::Box { min: Vec3::new(-w, -w, 0.0), max: Vec3::new(w, w, h) };
            (pts, vec![0; n], vec![solid], (0, 2, 0))
        }
    };
    let gt = GroundTruth { kind, solids, joints, leaves, cycles, labels };
    Ok((PointCloud::new(points), gt))
}

/// Samples the boundary of a union of tubes: tubes are picked proportionally
/// to lateral area and points inside another tube are rejected.
fn union_of_tubes(s: &mut Sampler, solids: &[Solid], n: usize) -> (Vec<Vec3>, Vec<usize>) {
    let areas: Vec<f64> = solids
        .iter()
        .map(|t| match t {
            Solid::Tube { a, b, radius } => (b - a).norm() * radius,
            _ => 0.0,
        })
        .collect();
    let total: f64 = areas.iter().sum();
    let mut pts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    while pts.len() < n {
        let mut pick = s.rng.gen_range(0.0..total);
        let mut k = 0;
        while k + 1 < areas.len() && pick >= areas[k] {
            pick -= areas[k];
            k += 1;
        }
        let Solid::Tube { a, b, radius } = solids[k] else { unreachable!() };
        let p = s.tube(&a, &b, radius);
        if solids.iter().enumerate().any(|(j, t)| j != k && t.contains(&p)) {
            continue;
        }
        pts.push(p);
        labels.push(k);
    }
    (pts, labels)
}
