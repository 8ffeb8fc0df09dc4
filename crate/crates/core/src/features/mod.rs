//! Engineered input channels and model-input preprocessing.

mod traversal;

use std::path::{Path, PathBuf};

use ndarray::{s, Array2, Array3, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};
use crate::gridfile;
use crate::raster::{self, Resample};
use crate::types::{BuildingGrid, RadioMap, TxConfig, MODEL_SIDE, PAD_VALUE, PIXEL_SIZE_M};

pub use traversal::CellWalk;
pub(crate) use traversal::for_each_wall_entry;

/// Named feature channel. Declaration order is the canonical file order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Reflectance,
    Transmittance,
    Distance,
    Frequency,
    Radiation,
    Fspl,
    Obstructions,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 7] = [
        ChannelKind::Reflectance,
        ChannelKind::Transmittance,
        ChannelKind::Distance,
        ChannelKind::Frequency,
        ChannelKind::Radiation,
        ChannelKind::Fspl,
        ChannelKind::Obstructions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ChannelKind::Reflectance => "reflectance",
            ChannelKind::Transmittance => "transmittance",
            ChannelKind::Distance => "distance",
            ChannelKind::Frequency => "frequency",
            ChannelKind::Radiation => "radiation",
            ChannelKind::Fspl => "fspl",
            ChannelKind::Obstructions => "obstructions",
        }
    }

    /// Normalization divisor. The last two put typical values near [0, 1].
    pub fn divisor(self) -> f64 {
        match self {
            ChannelKind::Reflectance => 25.0,
            ChannelKind::Transmittance => 20.0,
            ChannelKind::Distance => 200.0,
            ChannelKind::Frequency => 10.0,
            ChannelKind::Radiation => 40.0,
            ChannelKind::Fspl => 160.0,
            ChannelKind::Obstructions => 10.0,
        }
    }

    /// Input channels of the model for a task: 3, 4 or 5 planes.
    pub fn for_task(task: u8) -> Result<Vec<ChannelKind>> {
        use ChannelKind::*;
        match task {
            1 => Ok(vec![Reflectance, Transmittance, Distance]),
            2 => Ok(vec![Reflectance, Transmittance, Distance, Frequency]),
            3 => Ok(vec![Reflectance, Transmittance, Distance, Frequency, Radiation]),
            t => bail_arg!("task must be 1, 2 or 3, got {t}"),
        }
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ChannelKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown channel name `{s}`")))
    }
}

impl std::fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Whether distances include the transmitter height.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMode {
    /// Map-plane distance between pixel centers.
    #[default]
    Planar,
    /// Straight-line distance from the antenna at its mounting height.
    Slant,
}

impl std::str::FromStr for DistanceMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "planar" => Ok(DistanceMode::Planar),
            "slant" => Ok(DistanceMode::Slant),
            other => Err(format!("unknown distance mode `{other}`")),
        }
    }
}

/// Record of the padding and resizing applied to a stack, for inversion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeomTransform {
    pub orig_h: usize,
    pub orig_w: usize,
    pub pad_value: f64,
    pub pad_bottom: usize,
    pub pad_right: usize,
    pub resized_to: usize,
}

impl GeomTransform {
    pub fn for_shape(orig_h: usize, orig_w: usize, resized_to: usize) -> Self {
        let side = orig_h.max(orig_w);
        Self {
            orig_h,
            orig_w,
            pad_value: PAD_VALUE,
            pad_bottom: side - orig_h,
            pad_right: side - orig_w,
            resized_to,
        }
    }

    pub fn padded_side(&self) -> usize {
        self.orig_h + self.pad_bottom
    }
}

/// Ordered, uniquely named feature planes of equal shape.
///
/// Channels are kept in canonical [`ChannelKind`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureStack {
    channels: Vec<(ChannelKind, Array2<f64>)>,
    normalized: bool,
    geom: Option<GeomTransform>,
}

impl FeatureStack {
    pub fn new(channels: Vec<(ChannelKind, Array2<f64>)>) -> Result<Self> {
        let mut stack = Self {
            channels: Vec::with_capacity(channels.len()),
            normalized: false,
            geom: None,
        };
        for (kind, plane) in channels {
            stack.insert(kind, plane)?;
        }
        Ok(stack)
    }

    /// Adds a channel at its canonical position.
    pub fn insert(&mut self, kind: ChannelKind, plane: Array2<f64>) -> Result<()> {
        if let Some(dim) = self.dim() {
            if plane.dim() != dim {
                return Err(Error::Shape(format!(
                    "channel {kind} has shape {:?}, stack has {dim:?}",
                    plane.dim()
                )));
            }
        }
        match self.channels.binary_search_by_key(&kind, |(k, _)| *k) {
            Ok(_) => bail_arg!("duplicate channel {kind}"),
            Err(pos) => self.channels.insert(pos, (kind, plane)),
        }
        Ok(())
    }

    /// Rebuilds a stack from a C×H×W raster whose channels are `kinds`.
    pub fn from_raster(raster: &Array3<f64>, kinds: &[ChannelKind]) -> Result<Self> {
        if raster.len_of(Axis(0)) != kinds.len() {
            return Err(Error::Shape(format!(
                "raster has {} channels but {} names were given",
                raster.len_of(Axis(0)),
                kinds.len()
            )));
        }
        if kinds.windows(2).any(|w| w[0] >= w[1]) {
            bail_arg!("channel names must be unique and in canonical order: {kinds:?}");
        }
        Self::new(
            kinds
                .iter()
                .zip(raster.outer_iter())
                .map(|(k, p)| (*k, p.to_owned()))
                .collect(),
        )
    }

    pub fn to_raster(&self) -> Array3<f64> {
        let views: Vec<_> = self.channels.iter().map(|(_, p)| p.view()).collect();
        ndarray::stack(Axis(0), &views).expect("channels share a shape")
    }

    pub fn dim(&self) -> Option<(usize, usize)> {
        self.channels.first().map(|(_, p)| p.dim())
    }

    pub fn len(&self) -> usize {
        self.channels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.channels.is_empty()
    }

    pub fn kinds(&self) -> Vec<ChannelKind> {
        self.channels.iter().map(|(k, _)| *k).collect()
    }

    pub fn get(&self, kind: ChannelKind) -> Option<&Array2<f64>> {
        self.channels.iter().find(|(k, _)| *k == kind).map(|(_, p)| p)
    }

    pub fn channels(&self) -> &[(ChannelKind, Array2<f64>)] {
        &self.channels
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn geom(&self) -> Option<&GeomTransform> {
        self.geom.as_ref()
    }

    /// Applies `f` to every plane, keeping names and metadata.
    pub fn map_planes(&self, mut f: impl FnMut(ChannelKind, &Array2<f64>) -> Array2<f64>) -> Self {
        Self {
            channels: self.channels.iter().map(|(k, p)| (*k, f(*k, p))).collect(),
            normalized: self.normalized,
            geom: self.geom,
        }
    }

    pub(crate) fn try_map_planes(
        &self,
        mut f: impl FnMut(ChannelKind, &Array2<f64>) -> Result<Array2<f64>>,
    ) -> Result<Self> {
        Ok(Self {
            channels: self
                .channels
                .iter()
                .map(|(k, p)| Ok((*k, f(*k, p)?)))
                .collect::<Result<_>>()?,
            normalized: self.normalized,
            geom: self.geom,
        })
    }

    pub(crate) fn set_meta(&mut self, normalized: bool, geom: Option<GeomTransform>) {
        self.normalized = normalized;
        self.geom = geom;
    }
}

/// Distance from the transmitter to every pixel center, in meters.
pub fn distance_channel(grid: &BuildingGrid, tx: &TxConfig, mode: DistanceMode) -> Result<Array2<f64>> {
    let (h, w) = grid.dim();
    tx.validate(h, w)?;
    let height_sq = tx.height_m * tx.height_m;
    Ok(Array2::from_shape_fn((h, w), |(r, c)| {
        let (dr, dc) = (r as f64 - tx.row, c as f64 - tx.col);
        // dr² + dc² is symmetric in its terms, so 90° rotations permute exactly
        let planar = PIXEL_SIZE_M * (dr * dr + dc * dc).sqrt();
        match mode {
            DistanceMode::Planar => planar,
            DistanceMode::Slant => (planar * planar + height_sq).sqrt(),
        }
    }))
}

/// Uniform plane holding the carrier frequency in GHz.
pub fn frequency_channel(shape: (usize, usize), freq_mhz: f64) -> Result<Array2<f64>> {
    if !(freq_mhz > 0.0 && freq_mhz.is_finite()) {
        bail_arg!("carrier frequency must be positive, got {freq_mhz} MHz");
    }
    Ok(Array2::from_elem(shape, freq_mhz / 1000.0))
}

/// Bearing in degrees from the transmitter to a pixel, counterclockwise from
/// the +col axis as seen on screen (rows grow downward).
pub fn bearing_deg(tx: &TxConfig, row: usize, col: usize) -> f64 {
    let up = tx.row - row as f64;
    let right = col as f64 - tx.col;
    up.atan2(right).to_degrees()
}

/// Antenna gain toward every pixel, in dBi.
pub fn radiation_channel(grid: &BuildingGrid, tx: &TxConfig) -> Result<Array2<f64>> {
    let (h, w) = grid.dim();
    tx.validate(h, w)?;
    let tx_cell = tx.cell(h, w);
    Ok(Array2::from_shape_fn((h, w), |(r, c)| {
        if (r, c) == tx_cell {
            tx.pattern.gains_dbi()[0]
        } else {
            tx.pattern.gain_at(bearing_deg(tx, r, c) - tx.orientation_deg)
        }
    }))
}

/// Free-space loss in dB for a distance in meters and frequency in MHz.
pub fn friis_db(distance_m: f64, freq_mhz: f64) -> f64 {
    20.0 * (distance_m / 1000.0).log10() + 20.0 * freq_mhz.log10() + 32.44
}

/// Free-space pathloss over slant distance, which never reaches zero.
pub fn fspl_channel(grid: &BuildingGrid, tx: &TxConfig) -> Result<Array2<f64>> {
    let d = distance_channel(grid, tx, DistanceMode::Slant)?;
    Ok(d.mapv(|d| friis_db(d, tx.freq_mhz)))
}

/// Number of air-to-wall transitions between the transmitter cell and each
/// pixel, walking the exact set of cells the connecting segment crosses.
pub fn obstruction_channel(grid: &BuildingGrid, tx: &TxConfig) -> Result<Array2<u32>> {
    let (h, w) = grid.dim();
    tx.validate(h, w)?;
    let from = tx.cell(h, w);
    let walls = grid.wall_mask();
    let counts: Vec<u32> = (0..h * w)
        .into_par_iter()
        .map(|i| {
            let mut n = 0;
            for_each_wall_entry(|r, c| walls[[r, c]], from, (i / w, i % w), |_, _| n += 1);
            n
        })
        .collect();
    Ok(Array2::from_shape_vec((h, w), counts).expect("one count per pixel"))
}

/// Assembles the requested channels for one building and transmitter.
pub fn build_stack(
    grid: &BuildingGrid,
    tx: &TxConfig,
    kinds: &[ChannelKind],
    distance_mode: DistanceMode,
) -> Result<FeatureStack> {
    tx.validate(grid.height(), grid.width())?;
    let mut stack = FeatureStack::new(vec![])?;
    for &kind in kinds {
        let plane = match kind {
            ChannelKind::Reflectance => grid.reflectance().clone(),
            ChannelKind::Transmittance => grid.transmittance().clone(),
            ChannelKind::Distance => distance_channel(grid, tx, distance_mode)?,
            ChannelKind::Frequency => frequency_channel(grid.dim(), tx.freq_mhz)?,
            ChannelKind::Radiation => radiation_channel(grid, tx)?,
            ChannelKind::Fspl => fspl_channel(grid, tx)?,
            ChannelKind::Obstructions => obstruction_channel(grid, tx)?.mapv(f64::from),
        };
        stack.insert(kind, plane)?;
    }
    Ok(stack)
}

/// Divides every channel by its fixed divisor.
pub fn normalize(stack: &FeatureStack) -> Result<FeatureStack> {
    if stack.normalized {
        return Err(Error::State("stack is already normalized".into()));
    }
    let mut out = stack.map_planes(|kind, plane| {
        let d = kind.divisor();
        plane.mapv(|v| v / d)
    });
    out.normalized = true;
    Ok(out)
}

fn pad_plane(plane: &Array2<f64>, side: usize) -> Array2<f64> {
    let (h, w) = plane.dim();
    let mut out = Array2::from_elem((side, side), PAD_VALUE);
    out.slice_mut(s![..h, ..w]).assign(plane);
    out
}

/// Pads bottom/right with −1 to a square and resamples to `side`×`side`.
///
/// A target map, when given, is padded and resampled identically.
pub fn pad_and_resize(
    stack: &FeatureStack,
    target: Option<&RadioMap>,
    side: usize,
    kernel: Resample,
) -> Result<(FeatureStack, Option<RadioMap>)> {
    let Some((h, w)) = stack.dim() else {
        bail_arg!("cannot pad an empty stack");
    };
    if side == 0 {
        bail_arg!("resize target must be positive");
    }
    if stack.geom.is_some() {
        return Err(Error::State("stack is already padded and resized".into()));
    }
    if let Some(t) = target {
        if t.dim() != (h, w) {
            return Err(Error::Shape(format!("target {:?} does not match stack {:?}", t.dim(), (h, w))));
        }
    }
    let geom = GeomTransform::for_shape(h, w, side);
    let square = geom.padded_side();
    let apply = |plane: &Array2<f64>| raster::resize(&pad_plane(plane, square), side, side, kernel);
    let mut out = stack.try_map_planes(|_, p| apply(p))?;
    out.geom = Some(geom);
    let target = target.map(|t| RadioMap::new(apply(t.values())?)).transpose()?;
    Ok((out, target))
}

/// Model-input preprocessing at the standard 518-pixel side.
pub fn preprocess(stack: &FeatureStack, target: Option<&RadioMap>) -> Result<(FeatureStack, Option<RadioMap>)> {
    let normalized = normalize(stack)?;
    pad_and_resize(&normalized, target, MODEL_SIDE, Resample::Bilinear)
}

/// Maps a model-resolution map back to the original building shape.
pub fn invert_geom(map: &RadioMap, geom: &GeomTransform) -> Result<RadioMap> {
    if map.dim() != (geom.resized_to, geom.resized_to) {
        return Err(Error::Argument(format!(
            "map {:?} is not {}x{}",
            map.dim(),
            geom.resized_to,
            geom.resized_to
        )));
    }
    let square = geom.padded_side();
    let back = raster::resize(map.values(), square, square, Resample::Bilinear)?;
    RadioMap::new(back.slice(s![..geom.orig_h, ..geom.orig_w]).to_owned())
}

/// JSON sidecar describing a stack file's channels and geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StackMeta {
    pub channels: Vec<ChannelKind>,
    pub normalized: bool,
    #[serde(default)]
    pub geom: Option<GeomTransform>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes the stack raster plus its `.json` sidecar.
pub fn write_stack(stack: &FeatureStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    gridfile::write_grid_file(&stack.to_raster(), path)?;
    let meta = StackMeta {
        channels: stack.kinds(),
        normalized: stack.normalized,
        geom: stack.geom,
    };
    let side = sidecar_path(path);
    let json = serde_json::to_string_pretty(&meta).expect("meta serializes");
    std::fs::write(&side, json + "\n").map_err(|e| Error::io(side, e))
}

/// Reads a stack file. Without a sidecar the channel names are inferred from
/// the channel count (3, 4 or 5 planes as in tasks 1 to 3).
pub fn read_stack(path: impl AsRef<Path>) -> Result<FeatureStack> {
    let path = path.as_ref();
    let raster = gridfile::read_grid_file(path)?;
    let side = sidecar_path(path);
    let meta = if side.exists() {
        let text = std::fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
        serde_json::from_str::<StackMeta>(&text).map_err(|e| Error::Format(format!("{}: {e}", side.display())))?
    } else {
        let n = raster.len_of(Axis(0));
        let task = match n {
            3..=5 => (n - 2) as u8,
            _ => return Err(Error::Format(format!("cannot infer channel names for {n} channels without a sidecar"))),
        };
        StackMeta {
            channels: ChannelKind::for_task(task)?,
            normalized: false,
            geom: None,
        }
    };
    let mut stack = FeatureStack::from_raster(&raster, &meta.channels)?;
    stack.set_meta(meta.normalized, meta.geom);
    Ok(stack)
}
