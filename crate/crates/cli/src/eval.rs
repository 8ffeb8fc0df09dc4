use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use radiomap::eval::{grouped_report, make_split, rmse_micro, rmse_per_map, GroupAxis, GroupScore};
use radiomap::raster::pairwise_sum;
use radiomap::{RadioMap, SampleMeta};
use rayon::prelude::*;
use serde::Serialize;

use crate::io::{self, read_manifest};
use crate::usage;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Macro,
    Micro,
}

#[derive(clap::Args)]
pub struct Args {
    /// Directory of predicted maps, matched to targets by file name.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of target maps.
    #[arg(long)]
    target: PathBuf,
    /// Sample manifest; without it every `.rmg` file in --target is scored.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Headline metric.
    #[arg(long, value_enum, default_value_t = Mode::Macro)]
    mode: Mode,
    /// Report seen/unseen groups along these axes (building, freq, antenna).
    #[arg(long, value_delimiter = ',')]
    group_by: Vec<GroupAxis>,
    /// Task whose split defines seen/unseen and validates manifest ids.
    #[arg(long)]
    task: Option<u8>,
    /// Also write the report as JSON to this file.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Serialize)]
struct MapEntry {
    file: String,
    rmse: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    meta: Option<SampleMeta>,
}

#[derive(Serialize)]
struct Report {
    mode: Mode,
    rmse: f64,
    micro_rmse: f64,
    macro_rmse: f64,
    maps: Vec<MapEntry>,
    groups: Vec<GroupScore>,
}

fn file_name(p: &Path) -> anyhow::Result<String> {
    Ok(p.file_name()
        .and_then(|n| n.to_str())
        .with_context(|| format!("{} has no file name", p.display()))?
        .to_owned())
}

fn target_files(dir: &Path) -> anyhow::Result<Vec<String>> {
    let mut names = vec![];
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().is_some_and(|e| e == "rmg") {
            names.push(file_name(&path)?);
        }
    }
    names.sort();
    Ok(names)
}

pub fn run(a: Args) -> anyhow::Result<()> {
    let (names, metas): (Vec<String>, Option<Vec<SampleMeta>>) = match &a.manifest {
        Some(m) => {
            let records = read_manifest(m)?;
            let names = records.iter().map(|r| file_name(&r.target)).collect::<anyhow::Result<_>>()?;
            (names, Some(records.into_iter().map(|r| r.meta).collect()))
        }
        None => (target_files(&a.target)?, None),
    };
    if names.is_empty() {
        return Err(radiomap::Error::Data(format!("no maps to score in {}", a.target.display())).into());
    }
    let metas = match (metas, a.task) {
        (Some(mut metas), Some(task)) => {
            let split = make_split(task)?;
            for m in &mut metas {
                if !split.admits(m) {
                    return Err(radiomap::Error::Data(format!(
                        "sample building {} antenna {} at {} MHz is not in the task {task} {:?} split",
                        m.building_id, m.antenna_id, m.freq_mhz, m.split
                    ))
                    .into());
                }
                if m.seen.is_none() {
                    m.seen = Some(split.seen_flags(m));
                }
            }
            Some(metas)
        }
        (metas, _) => metas,
    };
    if !a.group_by.is_empty() && metas.is_none() {
        usage!("--group-by needs --manifest");
    }

    let pairs: Vec<(RadioMap, RadioMap)> = names
        .par_iter()
        .map(|n| Ok((io::read_map(&a.pred.join(n))?, io::read_map(&a.target.join(n))?)))
        .collect::<anyhow::Result<_>>()?;
    let (preds, targets): (Vec<RadioMap>, Vec<RadioMap>) = pairs.into_iter().unzip();

    let (micro, macro_, per_map, groups) = match &metas {
        Some(metas) => {
            let r = grouped_report(&preds, &targets, metas, &a.group_by)?;
            (r.micro_rmse, r.macro_rmse, r.per_map.iter().map(|m| m.rmse).collect(), r.groups)
        }
        None => {
            let per_map = rmse_per_map(&preds, &targets, None)?;
            let macro_ = pairwise_sum(&per_map) / per_map.len() as f64;
            (rmse_micro(&preds, &targets, None)?, macro_, per_map, vec![])
        }
    };
    let report = Report {
        mode: a.mode,
        rmse: if a.mode == Mode::Macro { macro_ } else { micro },
        micro_rmse: micro,
        macro_rmse: macro_,
        maps: names
            .into_iter()
            .zip(per_map)
            .enumerate()
            .map(|(i, (file, rmse))| MapEntry { file, rmse, meta: metas.as_ref().map(|m| m[i].clone()) })
            .collect(),
        groups,
    };
    print!("{}", table(&report));
    if let Some(path) = &a.json {
        io::create_parent(path)?;
        let text = serde_json::to_string_pretty(&report)? + "\n";
        std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn table(r: &Report) -> String {
    let mut out = String::new();
    let width = r.groups.iter().map(|g| g.label.len()).chain([14]).max().unwrap_or(14);
    let n = r.maps.len();
    let _ = writeln!(out, "{:<width$}  {:>6}  {:>10}", "group", "maps", "RMSE (dB)");
    let _ = writeln!(out, "{:<width$}  {n:>6}  {:>10.4}", "overall/micro", r.micro_rmse);
    let _ = writeln!(out, "{:<width$}  {n:>6}  {:>10.4}", "overall/macro", r.macro_rmse);
    for g in &r.groups {
        let _ = writeln!(out, "{:<width$}  {:>6}  {:>10.4}", g.label, g.maps, g.rmse);
    }
    out
}
