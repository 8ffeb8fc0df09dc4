//! Deterministic synthetic floor plans for tests, demos and the bundled
//! sample building.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::types::BuildingGrid;

/// Shape and seed of the bundled example building.
pub const BUNDLED_SHAPE: (usize, usize) = (96, 128);
pub const BUNDLED_SEED: u64 = 2024;
/// Grid-file bytes of `synthetic_building(96, 128, 2024)`.
pub const BUNDLED_BUILDING_RMG: &[u8] = include_bytes!("../data/synthetic_building.rmg");

/// Decodes [`BUNDLED_BUILDING_RMG`].
pub fn bundled_building() -> BuildingGrid {
    let raster = crate::gridfile::decode(BUNDLED_BUILDING_RMG).expect("bundled grid decodes");
    BuildingGrid::from_raster(&raster).expect("bundled grid is well formed")
}

/// Rectangular floor plan with outer walls, interior partitions and doors.
///
/// Material values are multiples of 0.5 dB so they survive `f32` storage.
pub fn synthetic_building(height: usize, width: usize, seed: u64) -> BuildingGrid {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut grid = BuildingGrid::air(height, width);
    let material = |rng: &mut ChaCha8Rng| {
        let r = rng.gen_range(4..=24) as f64 * 0.5;
        let t = rng.gen_range(4..=30) as f64 * 0.5;
        (r, t)
    };

    let (r, t) = material(&mut rng);
    for row in 0..height {
        for col in 0..width {
            if row == 0 || col == 0 || row + 1 == height || col + 1 == width {
                grid.set_cell(row, col, r, t).unwrap();
            }
        }
    }
    if height < 8 || width < 8 {
        return grid;
    }

    let partitions = (height + width) / 24 + 1;
    for _ in 0..partitions {
        let (r, t) = material(&mut rng);
        let vertical = rng.gen_bool(0.5);
        let (len, across) = if vertical { (height, width) } else { (width, height) };
        let at = rng.gen_range(3..across - 3);
        let door_len = rng.gen_range(2..=4).min(len / 4).max(1);
        let door = rng.gen_range(1..len - door_len - 1);
        for i in 1..len - 1 {
            if (door..door + door_len).contains(&i) {
                continue;
            }
            let (row, col) = if vertical { (i, at) } else { (at, i) };
            grid.set_cell(row, col, r, t).unwrap();
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_walled() {
        let a = synthetic_building(60, 45, 11);
        assert_eq!(a, synthetic_building(60, 45, 11));
        assert_ne!(a, synthetic_building(60, 45, 12));
        assert!(a.is_wall(0, 0) && a.is_wall(59, 44));
        let walls = a.wall_mask().iter().filter(|&&w| w).count();
        assert!(walls > 2 * (60 + 45) - 4);
    }

    #[test]
    fn tiny_grids_are_fine() {
        let g = synthetic_building(3, 5, 0);
        assert_eq!(g.dim(), (3, 5));
    }
}
