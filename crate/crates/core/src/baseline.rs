//! Single-ray physics predictor: free-space loss, minus antenna gain, plus
//! the transmittance of every wall entered on the straight path.
//!
//! Reflections and diffraction are ignored; the reflectance plane is unused.

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Result};
use crate::features::{distance_channel, for_each_wall_entry, friis_db, radiation_channel, DistanceMode};
use crate::types::{BuildingGrid, RadioMap, TxConfig, PATHLOSS_CEILING_DB};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub clamp_min: f64,
    pub clamp_max: f64,
    /// Planar distance is zero at the transmitter; the resulting −∞ loss
    /// clamps to `clamp_min`.
    pub distance_mode: DistanceMode,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            clamp_min: 0.0,
            clamp_max: PATHLOSS_CEILING_DB,
            distance_mode: DistanceMode::Slant,
        }
    }
}

pub fn predict(grid: &BuildingGrid, tx: &TxConfig, cfg: &BaselineConfig) -> Result<RadioMap> {
    if !(cfg.clamp_min < cfg.clamp_max) {
        bail_arg!("clamp_min {} must be below clamp_max {}", cfg.clamp_min, cfg.clamp_max);
    }
    let (h, w) = grid.dim();
    let distance = distance_channel(grid, tx, cfg.distance_mode)?;
    let gain = radiation_channel(grid, tx)?;
    let from = tx.cell(h, w);
    let walls = grid.wall_mask();
    let transmittance = grid.transmittance();

    let values: Vec<f64> = (0..h * w)
        .into_par_iter()
        .map(|i| {
            let (r, c) = (i / w, i % w);
            let mut wall_loss = 0.0;
            for_each_wall_entry(|r, c| walls[[r, c]], from, (r, c), |wr, wc| {
                wall_loss += transmittance[[wr, wc]];
            });
            let pl = friis_db(distance[[r, c]], tx.freq_mhz) - gain[[r, c]] + wall_loss;
            pl.clamp(cfg.clamp_min, cfg.clamp_max)
        })
        .collect();
    RadioMap::new(Array2::from_shape_vec((h, w), values).expect("one value per pixel"))
}
