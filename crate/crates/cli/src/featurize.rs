use std::path::PathBuf;

use anyhow::Context;
use log::info;
use radiomap::features::{build_stack, preprocess, write_stack};
use radiomap::gridfile::{self, export_png, read_grid_file};
use radiomap::synth::{synthetic_building, BUNDLED_SEED, BUNDLED_SHAPE};
use radiomap::{ChannelKind, DistanceMode};

use crate::io::{self, TxArgs};
use crate::usage;

#[derive(clap::Args)]
pub struct Args {
    /// Building grid (2 channels: reflectance, transmittance).
    #[arg(long)]
    building: PathBuf,
    #[command(flatten)]
    tx: TxArgs,
    /// Task whose channel set to build (1: R,T,distance; 2: +frequency; 3: +radiation).
    #[arg(long, default_value_t = 1)]
    task: u8,
    /// Explicit channel list overriding --task, e.g. `reflectance,transmittance,distance,fspl,obstructions`.
    #[arg(long, value_delimiter = ',')]
    channels: Vec<ChannelKind>,
    /// Distance channel mode: planar or slant.
    #[arg(long, default_value = "planar")]
    distance_mode: DistanceMode,
    /// Write raw channels, skipping normalization and the pad/resize to 518.
    #[arg(long)]
    raw: bool,
    /// Target map to pad and resize together with the stack.
    #[arg(long, requires = "target_out")]
    target: Option<PathBuf>,
    /// Where to write the processed target.
    #[arg(long, requires = "target")]
    target_out: Option<PathBuf>,
    /// Output stack (a `.json` sidecar is written next to it).
    #[arg(short, long)]
    out: PathBuf,
}

pub fn run(a: Args) -> anyhow::Result<()> {
    let grid = io::read_building(&a.building)?;
    let tx = a.tx.config()?;
    let kinds = if a.channels.is_empty() { ChannelKind::for_task(a.task)? } else { a.channels.clone() };
    let stack = build_stack(&grid, &tx, &kinds, a.distance_mode)?;
    let target = a.target.as_deref().map(io::read_map).transpose()?;
    let (stack, target) = if a.raw {
        if target.is_some() {
            usage!("--target has no effect with --raw");
        }
        (stack, None)
    } else {
        preprocess(&stack, target.as_ref())?
    };
    io::create_parent(&a.out)?;
    write_stack(&stack, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    if let (Some(t), Some(path)) = (target, &a.target_out) {
        io::write_map(&t, path)?;
    }
    info!("wrote {} channels {:?} to {}", stack.len(), stack.dim(), a.out.display());
    Ok(())
}

#[derive(clap::Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = BUNDLED_SHAPE.0)]
    height: usize,
    #[arg(long, default_value_t = BUNDLED_SHAPE.1)]
    width: usize,
    #[arg(long, default_value_t = BUNDLED_SEED)]
    seed: u64,
    #[arg(short, long)]
    out: PathBuf,
}

pub fn synth(a: SynthArgs) -> anyhow::Result<()> {
    if a.height < 4 || a.width < 4 {
        usage!("synthetic buildings need at least 4x4 pixels");
    }
    let grid = synthetic_building(a.height, a.width, a.seed);
    io::create_parent(&a.out)?;
    Ok(gridfile::write_grid_file(&grid.to_raster(), &a.out)?)
}

#[derive(clap::Args)]
pub struct PngArgs {
    /// Any grid file.
    #[arg(long = "in")]
    input: PathBuf,
    /// Channel index to render.
    #[arg(long, default_value_t = 0)]
    channel: usize,
    /// Value mapped to black (default: channel minimum).
    #[arg(long)]
    min: Option<f64>,
    /// Value mapped to white (default: channel maximum).
    #[arg(long)]
    max: Option<f64>,
    #[arg(short, long)]
    out: PathBuf,
}

pub fn png(a: PngArgs) -> anyhow::Result<()> {
    let raster = read_grid_file(&a.input)?;
    if a.channel >= raster.dim().0 {
        usage!("channel {} out of range; file has {}", a.channel, raster.dim().0);
    }
    let plane = raster.index_axis(ndarray::Axis(0), a.channel).to_owned();
    let lo = a.min.unwrap_or_else(|| plane.iter().cloned().fold(f64::INFINITY, f64::min));
    let mut hi = a.max.unwrap_or_else(|| plane.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
    if hi <= lo && a.max.is_none() {
        hi = lo + 1.0;
    }
    io::create_parent(&a.out)?;
    Ok(export_png(&plane, &a.out, lo, hi)?)
}
