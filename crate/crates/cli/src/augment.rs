use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use rand::Rng;
use radiomap::augment::{apply_pipeline, AugmentConfig, AugmentDraws};
use radiomap::features::{read_stack, write_stack};
use radiomap::rng::{stream_rng, Stream};
use radiomap::{FeatureStack, RadioMap};
use rayon::prelude::*;
use serde::Serialize;

use crate::io::{self, read_manifest};
use crate::usage;

#[derive(clap::Args)]
pub struct Args {
    /// Manifest of samples (JSON lines with `input` and `target` paths).
    #[arg(long, conflicts_with_all = ["input", "target"])]
    manifest: Option<PathBuf>,
    /// Single preprocessed stack (use with --target instead of --manifest).
    #[arg(long = "in", requires = "target")]
    input: Option<PathBuf>,
    /// Target map for --in.
    #[arg(long, requires = "input")]
    target: Option<PathBuf>,
    /// Base seed; each sample derives its own seed from this and its index.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Probability of MixUp with another sample from the manifest.
    #[arg(long, default_value_t = 0.75)]
    mixup_prob: f64,
    /// Probability of crop-and-resize.
    #[arg(long, default_value_t = 0.75)]
    crop_prob: f64,
    /// Also rotate by a random angle (uncovered pixels become -1).
    #[arg(long)]
    arbitrary_rotation: bool,
    /// Resample targets in linear power instead of dB.
    #[arg(long)]
    db_resize: bool,
    /// Output directory for augmented stacks, targets and provenance.jsonl.
    #[arg(short, long)]
    out: PathBuf,
}

#[derive(Serialize)]
struct Provenance {
    index: usize,
    input: PathBuf,
    sample_seed: u64,
    partner: Option<usize>,
    draws: AugmentDraws,
    stack: PathBuf,
    target: PathBuf,
}

fn load(input: &Path, target: &Path) -> anyhow::Result<(FeatureStack, RadioMap)> {
    let stack = read_stack(input).with_context(|| format!("reading {}", input.display()))?;
    Ok((stack, io::read_map(target)?))
}

pub fn run(a: Args) -> anyhow::Result<()> {
    let samples: Vec<(PathBuf, PathBuf)> = match (&a.manifest, &a.input, &a.target) {
        (Some(m), _, _) => read_manifest(m)?.into_iter().map(|r| (r.input, r.target)).collect(),
        (None, Some(i), Some(t)) => vec![(i.clone(), t.clone())],
        _ => usage!("give either --manifest or --in with --target"),
    };
    let base = AugmentConfig {
        seed: a.seed,
        mixup_prob: a.mixup_prob,
        crop_prob: a.crop_prob,
        arbitrary_rotation: a.arbitrary_rotation,
        db_domain_resize: a.db_resize,
    };
    base.validate()?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;

    let n = samples.len();
    let records: Vec<Provenance> = samples
        .par_iter()
        .enumerate()
        .map(|(i, (input, target))| -> anyhow::Result<Provenance> {
            let cfg = base.for_sample(i as u64);
            let (stack, map) = load(input, target)?;
            // partner: any other sample, drawn from its own stream
            let partner = (n > 1).then(|| {
                let j = stream_rng(cfg.seed, Stream::Partner).gen_range(0..n - 1);
                if j >= i { j + 1 } else { j }
            });
            let partner_data = partner.map(|j| load(&samples[j].0, &samples[j].1)).transpose()?;
            let (s, t, draws) = apply_pipeline(&stack, &map, partner_data.as_ref().map(|(s, t)| (s, t)), &cfg)
                .with_context(|| format!("augmenting {}", input.display()))?;
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("sample");
            let stack_out = a.out.join(format!("{i:05}_{stem}.rmg"));
            let target_out = a.out.join(format!("{i:05}_{stem}_target.rmg"));
            write_stack(&s, &stack_out)?;
            io::write_map(&t, &target_out)?;
            Ok(Provenance {
                index: i,
                input: input.clone(),
                sample_seed: cfg.seed,
                partner: draws.mixup_lambda.and(partner),
                draws,
                stack: stack_out,
                target: target_out,
            })
        })
        .collect::<anyhow::Result<_>>()?;

    let path = a.out.join("provenance.jsonl");
    let mut f = std::io::BufWriter::new(std::fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?);
    for r in &records {
        writeln!(f, "{}", serde_json::to_string(r)?)?;
    }
    f.flush()?;
    Ok(())
}
