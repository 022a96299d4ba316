//! Pipeline configuration: TOML file, then `SKELCOVER_` environment
//! overrides, then validation.
//!
//! An override names a key path with `__` between levels, for example
//! `SKELCOVER_SEED=7`, `SKELCOVER_GRID__VOXEL_SIZE=0.25` or
//! `SKELCOVER_PLANNER__LIMITS__V_MAX=1.5`. Values are parsed as TOML
//! (`[75.0, 55.0]` for arrays) and fall back to plain strings.

use crate::decomposition::DecompositionParams;
use crate::error::{Error, Result};
use crate::planner::PlannerParams;
use crate::skeleton::SkeletonParams;
use crate::trajectory::TrajectoryParams;
use crate::viewpoints::ViewpointParams;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const ENV_PREFIX: &str = "SKELCOVER_";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridParams {
    pub voxel_size: f64,
    /// Free voxels added around the cloud bounds on every side.
    pub padding: usize,
    /// Minimum distance kept from Occupied voxel centers.
    pub clearance: f64,
}

impl Default for GridParams {
    fn default() -> Self {
        Self { voxel_size: 0.3, padding: 12, clearance: 0.6 }
    }
}

impl GridParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.voxel_size.is_finite() && self.voxel_size > 0.0) {
            return Err(Error::InvalidParameter(format!("grid.voxel_size must be positive, got {}", self.voxel_size)));
        }
        if !(self.clearance.is_finite() && self.clearance >= 0.0) {
            return Err(Error::InvalidParameter(format!("grid.clearance must be non-negative, got {}", self.clearance)));
        }
        if self.padding == 0 {
            return Err(Error::InvalidParameter("grid.padding must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Current position of the vehicle; defaults to a free point beside the scene.
    pub start: Option<[f64; 3]>,
    pub grid: GridParams,
    pub skeleton: SkeletonParams,
    pub decomposition: DecompositionParams,
    pub viewpoints: ViewpointParams,
    pub planner: PlannerParams,
    pub trajectory: TrajectoryParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            workers: 0,
            start: None,
            grid: GridParams::default(),
            skeleton: SkeletonParams::default(),
            decomposition: DecompositionParams::default(),
            viewpoints: ViewpointParams::default(),
            planner: PlannerParams::default(),
            trajectory: TrajectoryParams::default(),
        }
    }
}

fn set_path(table: &mut toml::Table, path: &[String], value: toml::Value, var: &str) -> Result<()> {
    let (last, parents) = path.split_last().ok_or_else(|| Error::Config(format!("{var}: empty key")))?;
    let mut t = table;
    for p in parents {
        let entry = t.entry(p.clone()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or_else(|| Error::Config(format!("{var}: '{p}' is not a section")))?;
    }
    t.insert(last.clone(), value);
    Ok(())
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl PipelineConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Applies `SKELCOVER_*` overrides from `vars`; unknown keys are errors.
    pub fn with_overrides<I, K, V>(&self, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut table: toml::Table = toml::from_str(&self.to_toml_string()?).map_err(|e| Error::Config(e.to_string()))?;
        let mut vars: Vec<(String, String)> = vars
            .into_iter()
            .filter_map(|(k, v)| k.as_ref().strip_prefix(ENV_PREFIX).map(|rest| (rest.to_string(), v.as_ref().to_string())))
            .collect();
        vars.sort();
        if vars.is_empty() {
            return Ok(self.clone());
        }
        for (key, raw) in &vars {
            let path: Vec<String> = key.split("__").map(|s| s.to_ascii_lowercase()).collect();
            set_path(&mut table, &path, parse_value(raw), &format!("{ENV_PREFIX}{key}"))?;
        }
        let text = toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    /// File (or defaults), then process environment, then validation.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let base = match path {
            Some(p) => Self::from_toml_str(&std::fs::read_to_string(p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?)?,
            None => Self::default(),
        };
        let cfg = base.with_overrides(std::env::vars())?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.skeleton.validate()?;
        self.decomposition.validate()?;
        self.viewpoints.validate()?;
        self.planner.validate()?;
        self.trajectory.validate()?;
        if let Some(s) = self.start {
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter(format!("start must be finite, got {s:?}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip_through_toml() {
        let c = PipelineConfig::default();
        let text = c.to_toml_string().unwrap();
        assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), c);
        c.validate().unwrap();
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let c = PipelineConfig::from_toml_str("seed = 9\n[decomposition]\ndelta_deg = 30.0\n[planner.limits]\nv_max = 1.5\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.decomposition.delta_deg, 30.0);
        assert_eq!(c.decomposition.step, DecompositionParams::default().step);
        assert_eq!(c.planner.limits.v_max, 1.5);
        assert_eq!(c.planner.limits.j_max, 0.5);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(matches!(PipelineConfig::from_toml_str("sed = 1\n"), Err(Error::Config(_))));
        assert!(matches!(PipelineConfig::from_toml_str("[grid]\nvoxel = 0.2\n"), Err(Error::Config(_))));
    }

    #[test]
    fn environment_overrides() {
        let base = PipelineConfig::default();
        let vars = [
            ("SKELCOVER_SEED", "7"),
            ("SKELCOVER_GRID__VOXEL_SIZE", "0.25"),
            ("SKELCOVER_PLANNER__LIMITS__V_MAX", "1.5"),
            ("SKELCOVER_VIEWPOINTS__FOV_DEG", "[90.0, 60.0]"),
            ("SKELCOVER_START", "[1.0, 2.0, 3.0]"),
            ("PATH", "/usr/bin"),
        ];
        let c = base.with_overrides(vars).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.grid.voxel_size, 0.25);
        assert_eq!(c.planner.limits.v_max, 1.5);
        assert_eq!(c.viewpoints.fov_deg, [90.0, 60.0]);
        assert_eq!(c.start, Some([1.0, 2.0, 3.0]));
        assert!(base.with_overrides([("SKELCOVER_GRID__NOPE", "1")]).is_err());
        assert!(base.with_overrides([("SKELCOVER_SEED", "many")]).is_err());
    }

    #[test]
    fn validation_catches_bad_values() {
        let mut c = PipelineConfig::default();
        c.planner.limits.j_max = 0.0;
        assert!(c.validate().unwrap_err().is_validation());
        let mut c = PipelineConfig::default();
        c.grid.voxel_size = -1.0;
        assert!(c.validate().is_err());
    }
}
