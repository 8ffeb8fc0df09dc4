use std::path::PathBuf;

use anyhow::Context;
use log::{info, warn};
use radiomap::features::{invert_geom, read_stack};
use radiomap::modelstub::{forward, StubWeights};

use crate::{io, usage};

#[derive(clap::Subcommand)]
pub enum Command {
    /// Run the stub on a preprocessed 518x518 stack.
    Forward(ForwardArgs),
    /// Write seeded stub weights as one grid file per tensor plus manifest.json.
    InitWeights(InitArgs),
}

#[derive(clap::Args)]
pub struct ForwardArgs {
    /// Normalized, padded stack from `featurize`.
    #[arg(long = "in")]
    input: PathBuf,
    /// Task (1, 2 or 3); fixes the expected channels and neck widths.
    #[arg(long, default_value_t = 1)]
    task: u8,
    /// Seed for random weights; ignored with --weights.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Weight manifest written by `stub init-weights`.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Map the 518x518 output back to the building's original shape.
    #[arg(long)]
    restore: bool,
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(clap::Args)]
pub struct InitArgs {
    #[arg(long, default_value_t = 1)]
    task: u8,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(short, long)]
    out: PathBuf,
}

pub fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Forward(a) => forward_cmd(a),
        Command::InitWeights(a) => {
            let path = StubWeights::init(a.task, a.seed)?.save(&a.out)?;
            info!("wrote {}", path.display());
            Ok(())
        }
    }
}

fn forward_cmd(a: ForwardArgs) -> anyhow::Result<()> {
    let stack = read_stack(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    if !stack.is_normalized() {
        warn!("{} is not normalized; the stub expects `featurize` output without --raw", a.input.display());
    }
    let weights = match &a.weights {
        Some(p) => {
            let w = StubWeights::load(p)?;
            w.validate()?;
            if w.task != a.task {
                usage!("weights in {} are for task {}, not task {}", p.display(), w.task, a.task);
            }
            w
        }
        None => StubWeights::init(a.task, a.seed)?,
    };
    let mut map = forward(&stack, &weights, a.task)?;
    if a.restore {
        match stack.geom() {
            Some(g) => map = invert_geom(&map, g)?,
            None => usage!("--restore needs a stack with padding metadata in its sidecar"),
        }
    }
    io::write_map(&map, &a.out)
}
