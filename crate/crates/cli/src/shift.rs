use std::path::PathBuf;

use anyhow::Context;
use radiomap::gridfile::write_grid_file;
use radiomap::shift::{dataset_scatter, generate_crops};
use serde::Serialize;

use crate::io;

#[derive(clap::Subcommand)]
pub enum Command {
    /// Wall density and mean wall materials for every building in a directory.
    Stats(StatsArgs),
    /// Cut non-overlapping dense-wall windows out of one building.
    Crops(CropsArgs),
}

#[derive(clap::Args)]
pub struct StatsArgs {
    /// Directory of building grids (`.rmg`).
    #[arg(long)]
    dataset: PathBuf,
    /// CSV output; the aggregate row is labeled `__aggregate__`.
    #[arg(long)]
    csv: PathBuf,
}

#[derive(clap::Args)]
pub struct CropsArgs {
    #[arg(long)]
    building: PathBuf,
    /// Window side in pixels.
    #[arg(long)]
    window: usize,
    /// Step between candidate windows in pixels.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Minimum wall density of a kept window.
    #[arg(long, default_value_t = 0.0)]
    min_density: f64,
    /// Maximum number of crops.
    #[arg(long, default_value_t = 8)]
    max_crops: usize,
    /// Output directory for crop grids and crops.json.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct CropEntry {
    file: String,
    row: usize,
    col: usize,
    side: usize,
    density: f64,
}

pub fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Stats(a) => stats(a),
        Command::Crops(a) => crops(a),
    }
}

fn stats(a: StatsArgs) -> anyhow::Result<()> {
    let mut paths = vec![];
    for entry in std::fs::read_dir(&a.dataset).with_context(|| format!("listing {}", a.dataset.display()))? {
        let p = entry?.path();
        if p.extension().is_some_and(|e| e == "rmg") {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(radiomap::Error::Data(format!("no .rmg buildings in {}", a.dataset.display())).into());
    }
    let grids = paths
        .iter()
        .map(|p| {
            let label = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            Ok((label, io::read_building(p)?))
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    let scatter = dataset_scatter(&grids)?;
    io::create_parent(&a.csv)?;
    scatter.write_csv_file(&a.csv)?;
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.3}"));
    let agg = scatter.aggregate;
    println!(
        "{} buildings: mean wall density {:.4}, mean wall transmittance {}, mean wall reflectance {}",
        grids.len(),
        agg.wall_density,
        fmt(agg.mean_wall_transmittance),
        fmt(agg.mean_wall_reflectance)
    );
    Ok(())
}

fn crops(a: CropsArgs) -> anyhow::Result<()> {
    let grid = io::read_building(&a.building)?;
    let crops = generate_crops(&grid, a.window, a.stride, a.min_density, a.max_crops)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let mut entries = vec![];
    for (i, c) in crops.iter().enumerate() {
        let file = format!("crop_{i:03}_r{}_c{}.rmg", c.row, c.col);
        write_grid_file(&c.grid.to_raster(), a.out.join(&file))?;
        entries.push(CropEntry { file, row: c.row, col: c.col, side: a.window, density: c.density });
    }
    let index = a.out.join("crops.json");
    std::fs::write(&index, serde_json::to_string_pretty(&entries)? + "\n")
        .with_context(|| format!("writing {}", index.display()))?;
    println!("{} crops written to {}", entries.len(), a.out.display());
    eprintln!(
        "note: crops carry walls only; pathloss inside a cropped region still depends on the rest of the building"
    );
    Ok(())
}
