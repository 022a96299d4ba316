//! Default configuration as TOML, and the effect of SKELCOVER_ overrides.

use skelcover::config::PipelineConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let base = PipelineConfig::default();
    print!("{}", base.to_toml_string()?);
    let tuned = base.with_overrides([("SKELCOVER_SEED", "7"), ("SKELCOVER_PLANNER__LIMITS__V_MAX", "1.5"), ("SKELCOVER_VIEWPOINTS__FOV_DEG", "[90.0, 60.0]")])?;
    tuned.validate()?;
    println!("\n# with overrides: seed {}, v_max {}, fov {:?}", tuned.seed, tuned.planner.limits.v_max, tuned.viewpoints.fov_deg);
    Ok(())
}
