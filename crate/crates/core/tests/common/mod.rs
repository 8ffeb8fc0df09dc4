#![allow(dead_code)]

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use radiomap::features::ChannelKind;
use radiomap::{BuildingGrid, FeatureStack, TxConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Each cell is a wall with probability `p`, materials drawn from small positive values.
pub fn random_grid(rng: &mut ChaCha8Rng, h: usize, w: usize, p: f64) -> BuildingGrid {
    let mut g = BuildingGrid::air(h, w);
    for r in 0..h {
        for c in 0..w {
            if rng.gen_bool(p) {
                let refl = rng.gen_range(1..20) as f64 * 0.5;
                let trans = rng.gen_range(1..20) as f64 * 0.5;
                g.set_cell(r, c, refl, trans).unwrap();
            }
        }
    }
    g
}

pub fn random_tx(rng: &mut ChaCha8Rng, h: usize, w: usize) -> TxConfig {
    TxConfig::new(rng.gen_range(0..h) as f64, rng.gen_range(0..w) as f64, 868.0)
}

/// Wall entries along the segment from the tx cell center to each pixel
/// center, found by sampling the segment every `step` pixels. Samples within
/// 1e-9 of a cell boundary are skipped so that grazing a corner never counts.
pub fn dense_obstructions(grid: &BuildingGrid, tx: (usize, usize), step: f64) -> Array2<u32> {
    let (h, w) = grid.dim();
    Array2::from_shape_fn((h, w), |(r, c)| {
        let (dr, dc) = (r as f64 - tx.0 as f64, c as f64 - tx.1 as f64);
        let len = dr.hypot(dc);
        let n = (len / step).ceil().max(1.0) as usize;
        let mut prev = grid.is_wall(tx.0, tx.1);
        let mut count = 0;
        for k in 1..=n {
            let t = k as f64 / n as f64;
            let (y, x) = (tx.0 as f64 + t * dr, tx.1 as f64 + t * dc);
            let near = |v: f64| ((v + 0.5) - (v + 0.5).round()).abs() < 1e-9;
            if near(y) || near(x) {
                continue;
            }
            let cell = ((y + 0.5).floor() as usize, (x + 0.5).floor() as usize);
            let wall = grid.is_wall(cell.0, cell.1);
            if wall && !prev {
                count += 1;
            }
            prev = wall;
        }
        count
    })
}

/// Pooled RMSE with a plain loop, padding (-1) excluded.
pub fn naive_micro(preds: &[Array2<f64>], targets: &[Array2<f64>]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for (p, t) in preds.iter().zip(targets) {
        for (a, b) in p.iter().zip(t) {
            if *b != -1.0 {
                sum += (a - b) * (a - b);
                n += 1;
            }
        }
    }
    (sum / n as f64).sqrt()
}

pub fn naive_macro(preds: &[Array2<f64>], targets: &[Array2<f64>]) -> f64 {
    let per: Vec<f64> = preds
        .iter()
        .zip(targets)
        .map(|(p, t)| naive_micro(std::slice::from_ref(p), std::slice::from_ref(t)))
        .collect();
    per.iter().sum::<f64>() / per.len() as f64
}

/// A normalized-scale random stack for `task` at side `n`.
pub fn random_stack(rng: &mut ChaCha8Rng, task: u8, n: usize) -> FeatureStack {
    let kinds = ChannelKind::for_task(task).unwrap();
    FeatureStack::new(
        kinds
            .into_iter()
            .map(|k| (k, Array2::from_shape_simple_fn((n, n), || rng.gen_range(0.0..1.0))))
            .collect(),
    )
    .unwrap()
}
