//! File helpers shared by the subcommands.

use std::path::{Path, PathBuf};

use anyhow::Context;
use radiomap::gridfile::{read_grid_file, write_grid_file};
use radiomap::{AntennaPattern, BuildingGrid, RadioMap, SampleMeta, TxConfig};
use serde::{Deserialize, Serialize};

pub fn read_building(path: &Path) -> anyhow::Result<BuildingGrid> {
    let raster = read_grid_file(path)?;
    BuildingGrid::from_raster(&raster).with_context(|| format!("{} is not a building grid", path.display()))
}

pub fn read_map(path: &Path) -> anyhow::Result<RadioMap> {
    let raster = read_grid_file(path)?;
    RadioMap::from_raster(&raster).with_context(|| format!("{} is not a single-channel map", path.display()))
}

pub fn write_map(map: &RadioMap, path: &Path) -> anyhow::Result<()> {
    create_parent(path)?;
    Ok(write_grid_file(&map.to_raster(), path)?)
}

pub fn create_parent(path: &Path) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

/// Transmitter flags shared by `featurize` and `baseline`.
#[derive(clap::Args, Clone, Debug)]
pub struct TxArgs {
    /// Transmitter row in pixels (fractional allowed).
    #[arg(long)]
    pub tx_row: f64,
    /// Transmitter column in pixels (fractional allowed).
    #[arg(long)]
    pub tx_col: f64,
    /// Carrier frequency in MHz.
    #[arg(long, default_value_t = 868.0)]
    pub freq_mhz: f64,
    /// Antenna pattern CSV, 360 lines of `angle_deg,gain_dbi` (isotropic if omitted).
    #[arg(long)]
    pub pattern: Option<PathBuf>,
    /// Azimuth of the pattern's 0° direction, degrees counterclockwise.
    #[arg(long, default_value_t = 0.0)]
    pub orientation_deg: f64,
    /// Antenna height above the floor in meters.
    #[arg(long, default_value_t = radiomap::types::TX_HEIGHT_M)]
    pub tx_height_m: f64,
}

impl TxArgs {
    pub fn config(&self) -> anyhow::Result<TxConfig> {
        let pattern = match &self.pattern {
            Some(p) => AntennaPattern::read_csv(p)?,
            None => AntennaPattern::isotropic(),
        };
        let mut tx = TxConfig::new(self.tx_row, self.tx_col, self.freq_mhz).with_pattern(pattern, self.orientation_deg);
        tx.height_m = self.tx_height_m;
        Ok(tx)
    }
}

/// One manifest line: sample metadata plus its input stack and target map.
/// Relative paths resolve against the manifest's directory.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Record {
    #[serde(flatten)]
    pub meta: SampleMeta,
    pub input: PathBuf,
    pub target: PathBuf,
}

pub fn read_manifest(path: &Path) -> anyhow::Result<Vec<Record>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let mut r: Record = serde_json::from_str(line)
                .map_err(|e| radiomap::Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?;
            r.input = base.join(&r.input);
            r.target = base.join(&r.target);
            Ok(r)
        })
        .collect()
}
