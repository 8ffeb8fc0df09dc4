//! Distribution-shift statistics and dense-region crop generation.

use std::io;
use std::path::Path;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};
use crate::types::BuildingGrid;

/// Wall density and mean material values over wall pixels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftStats {
    pub wall_density: f64,
    /// `None` when the grid has no wall pixels.
    pub mean_wall_transmittance: Option<f64>,
    pub mean_wall_reflectance: Option<f64>,
}

pub fn stats(grid: &BuildingGrid) -> ShiftStats {
    let (mut walls, mut t_sum, mut r_sum) = (0usize, 0.0, 0.0);
    for ((&r, &t), wall) in grid
        .reflectance()
        .iter()
        .zip(grid.transmittance().iter())
        .map(|rt| (rt, *rt.0 > 0.0 || *rt.1 > 0.0))
    {
        if wall {
            walls += 1;
            t_sum += t;
            r_sum += r;
        }
    }
    let total = grid.height() * grid.width();
    let mean = |s: f64| (walls > 0).then(|| s / walls as f64);
    ShiftStats {
        wall_density: walls as f64 / total as f64,
        mean_wall_transmittance: mean(t_sum),
        mean_wall_reflectance: mean(r_sum),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledStats {
    pub label: String,
    #[serde(flatten)]
    pub stats: ShiftStats,
}

/// Per-grid statistics plus their aggregate (arithmetic means; material
/// means average over grids that have walls).
#[derive(Clone, Debug, PartialEq)]
pub struct Scatter {
    pub rows: Vec<LabeledStats>,
    pub aggregate: ShiftStats,
}

pub fn dataset_scatter(grids: &[(String, BuildingGrid)]) -> Result<Scatter> {
    if grids.is_empty() {
        bail_arg!("dataset scatter needs at least one grid");
    }
    let rows: Vec<LabeledStats> = grids
        .iter()
        .map(|(label, g)| LabeledStats {
            label: label.clone(),
            stats: stats(g),
        })
        .collect();
    let mean_of = |f: &dyn Fn(&ShiftStats) -> Option<f64>| {
        let vals: Vec<f64> = rows.iter().filter_map(|r| f(&r.stats)).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let aggregate = ShiftStats {
        wall_density: mean_of(&|s| Some(s.wall_density)).expect("non-empty"),
        mean_wall_transmittance: mean_of(&|s| s.mean_wall_transmittance),
        mean_wall_reflectance: mean_of(&|s| s.mean_wall_reflectance),
    };
    Ok(Scatter { rows, aggregate })
}

impl Scatter {
    /// CSV with header `label,wall_density,mean_wall_transmittance,mean_wall_reflectance`;
    /// absent means are empty fields. The aggregate row is labeled `__aggregate__`.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let all = self.rows.iter().cloned().chain(std::iter::once(LabeledStats {
            label: AGGREGATE_LABEL.into(),
            stats: self.aggregate,
        }));
        for row in all {
            w.serialize(CsvRow::from(row)).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io("<csv>", e))
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(f)
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self> {
        let mut rows = vec![];
        let mut aggregate = None;
        for rec in csv::Reader::from_reader(input).deserialize::<CsvRow>() {
            let rec = rec.map_err(csv_err)?;
            let row = LabeledStats {
                label: rec.label,
                stats: ShiftStats {
                    wall_density: rec.wall_density,
                    mean_wall_transmittance: rec.mean_wall_transmittance,
                    mean_wall_reflectance: rec.mean_wall_reflectance,
                },
            };
            if row.label == AGGREGATE_LABEL {
                aggregate = Some(row.stats);
            } else {
                rows.push(row);
            }
        }
        let aggregate = aggregate.ok_or_else(|| Error::Format("scatter CSV lacks the aggregate row".into()))?;
        Ok(Self { rows, aggregate })
    }
}

const AGGREGATE_LABEL: &str = "__aggregate__";

// csv cannot serialize flattened structs
#[derive(Serialize, Deserialize)]
struct CsvRow {
    label: String,
    wall_density: f64,
    mean_wall_transmittance: Option<f64>,
    mean_wall_reflectance: Option<f64>,
}

impl From<LabeledStats> for CsvRow {
    fn from(r: LabeledStats) -> Self {
        Self {
            label: r.label,
            wall_density: r.stats.wall_density,
            mean_wall_transmittance: r.stats.mean_wall_transmittance,
            mean_wall_reflectance: r.stats.mean_wall_reflectance,
        }
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

/// A window selected by [`generate_crops`].
#[derive(Clone, Debug, PartialEq)]
pub struct Crop {
    pub row: usize,
    pub col: usize,
    pub density: f64,
    pub grid: BuildingGrid,
}

/// Summed-area table of wall pixels, one row/col larger than the grid.
fn wall_integral(grid: &BuildingGrid) -> Array2<u64> {
    let (h, w) = grid.dim();
    let mut s = Array2::<u64>::zeros((h + 1, w + 1));
    for r in 0..h {
        for c in 0..w {
            s[[r + 1, c + 1]] = u64::from(grid.is_wall(r, c)) + s[[r, c + 1]] + s[[r + 1, c]] - s[[r, c]];
        }
    }
    s
}

/// Greedy non-overlapping top-`max_crops` windows by wall density.
///
/// Candidate positions step by `stride` from the top-left; ties in density
/// prefer the upper, then leftmost window.
pub fn generate_crops(
    grid: &BuildingGrid,
    window: usize,
    stride: usize,
    min_density: f64,
    max_crops: usize,
) -> Result<Vec<Crop>> {
    let (h, w) = grid.dim();
    if window == 0 || window > h.min(w) {
        bail_arg!("window {window} must be between 1 and min(H, W) = {}", h.min(w));
    }
    if stride == 0 {
        bail_arg!("stride must be at least 1");
    }
    let integral = wall_integral(grid);
    let area = (window * window) as f64;
    let rows: Vec<usize> = (0..=h - window).step_by(stride).collect();
    let mut candidates: Vec<(f64, usize, usize)> = rows
        .par_iter()
        .flat_map_iter(|&r| {
            let integral = &integral;
            (0..=w - window).step_by(stride).map(move |c| {
                let (r1, c1) = (r + window, c + window);
                let walls = integral[[r1, c1]] + integral[[r, c]] - integral[[r, c1]] - integral[[r1, c]];
                (walls as f64 / area, r, c)
            })
        })
        .collect();
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut picked: Vec<(usize, usize)> = vec![];
    let mut crops = vec![];
    for (density, r, c) in candidates {
        if crops.len() >= max_crops || density < min_density {
            break;
        }
        let overlaps = picked.iter().any(|&(pr, pc)| r < pr + window && pr < r + window && c < pc + window && pc < c + window);
        if overlaps {
            continue;
        }
        picked.push((r, c));
        crops.push(Crop {
            row: r,
            col: c,
            density,
            grid: grid.crop(r, c, window, window)?,
        });
    }
    Ok(crops)
}
