//! Heuristic tours against the exhaustive optimum on random instances.
//!
//! cargo run --release --example tsp -- [n] [instances]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelcover::tsp::{brute_force, solve, CostMatrix, TourKind};
use std::time::Instant;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(9);
    let count: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(50);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for kind in [TourKind::ClosedAtsp, TourKind::OpenPath] {
        let (mut optimal, mut worst, mut solve_s, mut oracle_s) = (0, 1.0f64, 0.0, 0.0);
        for i in 0..count {
            let m = CostMatrix::from_fn(n, kind, |_, _| rng.gen_range(1.0..100.0))?;
            let t = Instant::now();
            let tour = solve(&m, i as u64)?;
            solve_s += t.elapsed().as_secs_f64();
            let t = Instant::now();
            let best = brute_force(&m)?;
            oracle_s += t.elapsed().as_secs_f64();
            worst = worst.max(tour.cost / best.cost);
            optimal += usize::from(tour.cost <= best.cost + 1e-9);
        }
        println!("{kind:?} n={n}: {optimal}/{count} optimal, worst ratio {worst:.4}, heuristic {:.1} ms, exhaustive {:.1} ms", solve_s * 1e3, oracle_s * 1e3);
    }
    Ok(())
}
