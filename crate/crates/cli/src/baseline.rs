use std::path::PathBuf;

use radiomap::baseline::{predict, BaselineConfig};
use radiomap::DistanceMode;

use crate::io::{self, TxArgs};

#[derive(clap::Args)]
pub struct Args {
    /// Building grid (2 channels: reflectance, transmittance).
    #[arg(long)]
    building: PathBuf,
    #[command(flatten)]
    tx: TxArgs,
    /// Lower clamp of the prediction in dB.
    #[arg(long, default_value_t = 0.0)]
    clamp_min: f64,
    /// Upper clamp of the prediction in dB.
    #[arg(long, default_value_t = radiomap::types::PATHLOSS_CEILING_DB)]
    clamp_max: f64,
    /// Distance used in the free-space term: slant or planar.
    #[arg(long, default_value = "slant")]
    distance_mode: DistanceMode,
    /// Output map.
    #[arg(short, long)]
    out: PathBuf,
}

pub fn run(a: Args) -> anyhow::Result<()> {
    let grid = io::read_building(&a.building)?;
    let tx = a.tx.config()?;
    let cfg = BaselineConfig { clamp_min: a.clamp_min, clamp_max: a.clamp_max, distance_mode: a.distance_mode };
    let map = predict(&grid, &tx, &cfg)?;
    io::write_map(&map, &a.out)
}
