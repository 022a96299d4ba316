use super::{PointCloud, Vec3};
use crate::error::{Error, Result};
use std::io::{Read, Write};

/// Default cap on the number of voxels a grid may allocate.
pub const DEFAULT_GRID_CAP: usize = 64_000_000;

pub type VoxelIndex = [usize; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum VoxelState {
    Free = 0,
    Occupied = 1,
    Internal = 2,
}

impl VoxelState {
    fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(VoxelState::Free),
            1 => Some(VoxelState::Occupied),
            2 => Some(VoxelState::Internal),
            _ => None,
        }
    }
}

/// Dense uniform voxel map.
///
/// Voxel `[i, j, k]` spans `origin + [i, j, k] * voxel_size` to one voxel
/// further along each axis. Points on a shared face belong to the voxel with
/// the higher index along that axis (floor convention).
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    origin: Vec3,
    voxel_size: f64,
    dims: [usize; 3],
    states: Vec<VoxelState>,
}

impl OccupancyGrid {
    /// Empty (all Free) grid.
    pub fn new(origin: Vec3, voxel_size: f64, dims: [usize; 3]) -> Result<Self> {
        Self::new_capped(origin, voxel_size, dims, DEFAULT_GRID_CAP)
    }

    pub fn new_capped(origin: Vec3, voxel_size: f64, dims: [usize; 3], cap: usize) -> Result<Self> {
        if !(voxel_size > 0.0) || !voxel_size.is_finite() {
            return Err(Error::InvalidParameter(format!("voxel_size must be > 0, got {voxel_size}")));
        }
        if dims.contains(&0) {
            return Err(Error::InvalidParameter("grid dims must be positive".into()));
        }
        let voxels = dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX);
        if voxels > cap {
            return Err(Error::GridTooLarge { voxels, cap });
        }
        Ok(Self { origin, voxel_size, dims, states: vec![VoxelState::Free; voxels] })
    }

    /// Voxelizes a cloud: its bounding box plus `padding` voxels on every side.
    pub fn build(cloud: &PointCloud, voxel_size: f64, padding: usize) -> Result<Self> {
        Self::build_capped(cloud, voxel_size, padding, DEFAULT_GRID_CAP)
    }

    pub fn build_capped(cloud: &PointCloud, voxel_size: f64, padding: usize, cap: usize) -> Result<Self> {
        cloud.require_non_empty()?;
        if !(voxel_size > 0.0) || !voxel_size.is_finite() {
            return Err(Error::InvalidParameter(format!("voxel_size must be > 0, got {voxel_size}")));
        }
        if padding < 1 {
            return Err(Error::InvalidParameter("padding must be at least 1 voxel".into()));
        }
        let bounds = cloud.bounds().ok_or(Error::EmptyInput)?;
        if !(0..3).all(|k| bounds.min[k].is_finite() && bounds.max[k].is_finite()) {
            return Err(Error::InvalidParameter("cloud contains non-finite coordinates".into()));
        }
        let origin = bounds.min - Vec3::repeat(padding as f64 * voxel_size);
        let mut max_idx = [0usize; 3];
        for p in &cloud.points {
            for k in 0..3 {
                let i = ((p[k] - origin[k]) / voxel_size).floor() as usize;
                max_idx[k] = max_idx[k].max(i);
            }
        }
        let dims = [max_idx[0] + 1 + padding, max_idx[1] + 1 + padding, max_idx[2] + 1 + padding];
        let mut grid = Self::new_capped(origin, voxel_size, dims, cap)?;
        for p in &cloud.points {
            let idx = grid.index_of(p).expect("cloud point inside its own padded bounds");
            let l = grid.linear(idx);
            grid.states[l] = VoxelState::Occupied;
        }
        Ok(grid)
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[VoxelState] {
        &self.states
    }

    /// World-space extent of the whole grid.
    pub fn bounds(&self) -> super::Aabb {
        let ext = Vec3::new(self.dims[0] as f64, self.dims[1] as f64, self.dims[2] as f64) * self.voxel_size;
        super::Aabb::new(self.origin, self.origin + ext)
    }

    /// Continuous voxel coordinate of a world point (voxel units from origin).
    pub fn to_voxel_coords(&self, p: &Vec3) -> Vec3 {
        (p - self.origin) / self.voxel_size
    }

    /// Voxel containing `p`, or `None` outside the grid.
    pub fn index_of(&self, p: &Vec3) -> Option<VoxelIndex> {
        let mut idx = [0usize; 3];
        for k in 0..3 {
            let f = ((p[k] - self.origin[k]) / self.voxel_size).floor();
            if !(f >= 0.0) || f >= self.dims[k] as f64 {
                return None;
            }
            idx[k] = f as usize;
        }
        Some(idx)
    }

    pub fn index_of_checked(&self, p: &Vec3) -> Result<VoxelIndex> {
        self.index_of(p)
            .ok_or_else(|| Error::OutOfBounds(format!("point ({:.4}, {:.4}, {:.4})", p.x, p.y, p.z)))
    }

    pub fn in_dims(&self, x: i64, y: i64, z: i64) -> bool {
        x >= 0 && y >= 0 && z >= 0 && (x as usize) < self.dims[0] && (y as usize) < self.dims[1] && (z as usize) < self.dims[2]
    }

    #[inline]
    pub fn linear(&self, idx: VoxelIndex) -> usize {
        idx[0] + self.dims[0] * (idx[1] + self.dims[1] * idx[2])
    }

    #[inline]
    pub fn unlinear(&self, l: usize) -> VoxelIndex {
        let x = l % self.dims[0];
        let yz = l / self.dims[0];
        [x, yz % self.dims[1], yz / self.dims[1]]
    }

    pub fn center(&self, idx: VoxelIndex) -> Vec3 {
        self.origin + Vec3::new(idx[0] as f64 + 0.5, idx[1] as f64 + 0.5, idx[2] as f64 + 0.5) * self.voxel_size
    }

    #[inline]
    pub fn state(&self, idx: VoxelIndex) -> VoxelState {
        self.states[self.linear(idx)]
    }

    #[inline]
    pub fn state_linear(&self, l: usize) -> VoxelState {
        self.states[l]
    }

    pub fn is_occupied(&self, idx: VoxelIndex) -> bool {
        self.state(idx) == VoxelState::Occupied
    }

    /// Marks a voxel Occupied. Only Free voxels change.
    pub fn set_occupied(&mut self, idx: VoxelIndex) {
        let l = self.linear(idx);
        if self.states[l] == VoxelState::Free {
            self.states[l] = VoxelState::Occupied;
        }
    }

    /// Marks a voxel Internal. Occupied voxels are never relabeled; returns
    /// whether the state changed.
    pub fn mark_internal(&mut self, idx: VoxelIndex) -> bool {
        let l = self.linear(idx);
        if self.states[l] == VoxelState::Free {
            self.states[l] = VoxelState::Internal;
            true
        } else {
            false
        }
    }

    pub fn count(&self, state: VoxelState) -> usize {
        self.states.iter().filter(|&&s| s == state).count()
    }

    pub fn occupied_indices(&self) -> Vec<VoxelIndex> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, &s)| s == VoxelState::Occupied)
            .map(|(l, _)| self.unlinear(l))
            .collect()
    }

    /// Per-voxel mask of voxels unusable for flight: Occupied or Internal
    /// voxels, and every voxel whose center lies within `clearance` of an
    /// Occupied voxel center.
    pub fn blocked_mask(&self, clearance: f64) -> Vec<bool> {
        let mut blocked: Vec<bool> = self.states.iter().map(|&s| s != VoxelState::Free).collect();
        let r = (clearance / self.voxel_size).max(0.0);
        let ri = r.floor() as i64;
        let mut offsets = Vec::new();
        for dz in -ri..=ri {
            for dy in -ri..=ri {
                for dx in -ri..=ri {
                    if ((dx * dx + dy * dy + dz * dz) as f64) <= r * r + 1e-9 {
                        offsets.push((dx, dy, dz));
                    }
                }
            }
        }
        for (l, &s) in self.states.iter().enumerate() {
            if s != VoxelState::Occupied {
                continue;
            }
            let [x, y, z] = self.unlinear(l);
            for &(dx, dy, dz) in &offsets {
                let (nx, ny, nz) = (x as i64 + dx, y as i64 + dy, z as i64 + dz);
                if self.in_dims(nx, ny, nz) {
                    let nl = self.linear([nx as usize, ny as usize, nz as usize]);
                    blocked[nl] = true;
                }
            }
        }
        blocked
    }

    /// Writes the binary sidecar: origin (3 x f64 LE), voxel_size (f64 LE),
    /// dims (3 x u64 LE), then one byte per voxel (0 Free, 1 Occupied,
    /// 2 Internal), x fastest.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        for k in 0..3 {
            w.write_all(&self.origin[k].to_le_bytes())?;
        }
        w.write_all(&self.voxel_size.to_le_bytes())?;
        for d in self.dims {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        let body: Vec<u8> = self.states.iter().map(|&s| s as u8).collect();
        w.write_all(&body)?;
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut f = [0u8; 8];
        let mut read_f64 = |r: &mut R| -> Result<f64> {
            r.read_exact(&mut f)?;
            Ok(f64::from_le_bytes(f))
        };
        let origin = Vec3::new(read_f64(&mut r)?, read_f64(&mut r)?, read_f64(&mut r)?);
        let voxel_size = read_f64(&mut r)?;
        let mut dims = [0usize; 3];
        for d in dims.iter_mut() {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *d = u64::from_le_bytes(b) as usize;
        }
        let mut grid = Self::new(origin, voxel_size, dims)?;
        let mut body = vec![0u8; grid.states.len()];
        r.read_exact(&mut body)?;
        for (i, b) in body.into_iter().enumerate() {
            grid.states[i] = VoxelState::from_byte(b).ok_or_else(|| Error::Parse {
                location: format!("voxel byte {i}"),
                message: format!("invalid voxel state {b}"),
            })?;
        }
        Ok(grid)
    }
}
