mod augment;
mod baseline;
mod eval;
mod featurize;
mod io;
mod shift;
mod stub;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (grid format RMG1)");

/// Indoor pathloss radio-map toolkit: features, augmentation, baseline,
/// evaluation, shift analysis and a forward-only model stub.
#[derive(Parser)]
#[command(name = "radiomap", version = VERSION)]
struct Cli {
    /// Worker threads for per-pixel and per-sample work (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the input channel stack for one transmitter position.
    Featurize(featurize::Args),
    /// Predict pathloss with the free-space plus wall-loss baseline.
    Baseline(baseline::Args),
    /// Apply the seeded augmentation pipeline to samples.
    Augment(augment::Args),
    /// Score predictions against targets.
    Eval(eval::Args),
    /// Distribution-shift statistics and dense-region crops.
    #[command(subcommand)]
    Shift(shift::Command),
    /// Forward-only model stub.
    #[command(subcommand)]
    Stub(stub::Command),
    /// Write a synthetic floor plan (defaults reproduce the bundled building).
    SynthBuilding(featurize::SynthArgs),
    /// Render one raster channel as an 8-bit grayscale PNG.
    Png(featurize::PngArgs),
}

/// A command-line usage problem detected after parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

macro_rules! usage {
    ($($arg:tt)*) => {
        return Err(anyhow::Error::new($crate::Usage(format!($($arg)*))))
    };
}
pub(crate) use usage;

/// 1 for usage and argument errors, 2 for everything caused by input data.
fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<Usage>() {
            return 1;
        }
        if let Some(e) = cause.downcast_ref::<radiomap::Error>() {
            return if matches!(e, radiomap::Error::Argument(_)) { 1 } else { 2 };
        }
    }
    2
}

fn run(cli: Cli) -> anyhow::Result<()> {
    if cli.jobs > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global()?;
    }
    match cli.command {
        Command::Featurize(a) => featurize::run(a),
        Command::Baseline(a) => baseline::run(a),
        Command::Augment(a) => augment::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Shift(c) => shift::run(c),
        Command::Stub(c) => stub::run(c),
        Command::SynthBuilding(a) => featurize::synth(a),
        Command::Png(a) => featurize::png(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
