//! Benchmark rows for every scene and mode over a few seeds, as CSV.
//!
//! cargo run --release --example bench -- [seeds]

use skelcover::config::PipelineConfig;
use skelcover::pipeline::{run_bench, write_bench_csv};
use skelcover::planner::PlanMode;
use skelcover::scenes::{SceneKind, SceneParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: u64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2);
    let seeds: Vec<u64> = (1..=seeds).collect();
    let rows = run_bench(&PipelineConfig::default(), &SceneKind::ALL, &SceneParams::default(), &[PlanMode::Full, PlanMode::Nr, PlanMode::Go], &seeds)?;
    write_bench_csv(&rows, std::io::stdout().lock())?;
    Ok(())
}
