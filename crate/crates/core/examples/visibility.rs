//! Bidirectional against one-way visibility checks on a random grid: same
//! verdicts, fewer voxels visited when the blocker sits near the target.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use skelcover::geometry::{birc_visible_counted, unidirectional_visible_counted, OccupancyGrid, Vec3};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut grid = OccupancyGrid::new(Vec3::zeros(), 1.0, [64, 64, 64])?;
    for _ in 0..4000 {
        grid.set_occupied([rng.gen_range(0..64), rng.gen_range(0..64), rng.gen_range(0..64)]);
    }
    let (mut agree, mut birc, mut uni) = (0, 0, 0);
    let rays = 5000;
    for _ in 0..rays {
        let a = Vec3::new(rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0));
        let b = Vec3::new(rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0), rng.gen_range(0.0..64.0));
        let (vb, nb) = birc_visible_counted(&grid, &a, &b)?;
        let (vu, nu) = unidirectional_visible_counted(&grid, &a, &b)?;
        agree += usize::from(vb == vu);
        birc += nb;
        uni += nu;
    }
    println!("{agree}/{rays} verdicts agree; voxels visited: bidirectional {birc}, one-way {uni}");

    // blocker one voxel short of the target
    let mut wall = OccupancyGrid::new(Vec3::zeros(), 1.0, [64, 64, 64])?;
    wall.set_occupied([61, 32, 32]);
    let (a, b) = (Vec3::new(0.5, 32.5, 32.5), Vec3::new(62.5, 32.5, 32.5));
    let (_, nb) = birc_visible_counted(&wall, &a, &b)?;
    let (_, nu) = unidirectional_visible_counted(&wall, &a, &b)?;
    println!("blocker near target: bidirectional {nb} voxels, one-way {nu}");
    Ok(())
}
