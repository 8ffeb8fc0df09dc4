//! Domain types shared by every stage of the pipeline.

use std::fmt;
use std::path::Path;

use ndarray::{Array2, Array3, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};

/// Side of one grid cell in meters.
pub const PIXEL_SIZE_M: f64 = 0.25;
/// Transmitter height above the floor in meters.
pub const TX_HEIGHT_M: f64 = 1.5;
/// Fill value for padded and out-of-bounds pixels (0 is a meaningful value).
pub const PAD_VALUE: f64 = -1.0;
/// Model input side after padding and resizing.
pub const MODEL_SIDE: usize = 518;
/// Upper bound of predicted pathloss in dB.
pub const PATHLOSS_CEILING_DB: f64 = 160.0;

/// Paired reflectance/transmittance rasters of one building floor plan.
///
/// Both channels hold non-negative dB-scale material values, 0 meaning air.
#[derive(Clone, Debug, PartialEq)]
pub struct BuildingGrid {
    reflectance: Array2<f64>,
    transmittance: Array2<f64>,
}

impl BuildingGrid {
    pub fn new(reflectance: Array2<f64>, transmittance: Array2<f64>) -> Result<Self> {
        if reflectance.dim() != transmittance.dim() {
            return Err(Error::Shape(format!(
                "reflectance {:?} and transmittance {:?} differ in shape",
                reflectance.dim(),
                transmittance.dim()
            )));
        }
        let (h, w) = reflectance.dim();
        if h == 0 || w == 0 {
            bail_arg!("building grid must be non-empty");
        }
        for (name, plane) in [("reflectance", &reflectance), ("transmittance", &transmittance)] {
            if let Some(v) = plane.iter().find(|v| !v.is_finite() || **v < 0.0) {
                return Err(Error::Data(format!("{name} value {v} is not a finite non-negative number")));
            }
        }
        Ok(Self {
            reflectance,
            transmittance,
        })
    }

    /// An all-air grid.
    pub fn air(height: usize, width: usize) -> Self {
        Self {
            reflectance: Array2::zeros((height, width)),
            transmittance: Array2::zeros((height, width)),
        }
    }

    /// Builds a grid from a 2-channel raster (reflectance, transmittance).
    pub fn from_raster(raster: &Array3<f64>) -> Result<Self> {
        if raster.len_of(Axis(0)) != 2 {
            return Err(Error::Shape(format!(
                "building raster needs 2 channels, found {}",
                raster.len_of(Axis(0))
            )));
        }
        Self::new(
            raster.index_axis(Axis(0), 0).to_owned(),
            raster.index_axis(Axis(0), 1).to_owned(),
        )
    }

    pub fn to_raster(&self) -> Array3<f64> {
        ndarray::stack(Axis(0), &[self.reflectance.view(), self.transmittance.view()])
            .expect("channels share a shape")
    }

    pub fn height(&self) -> usize {
        self.reflectance.nrows()
    }

    pub fn width(&self) -> usize {
        self.reflectance.ncols()
    }

    pub fn dim(&self) -> (usize, usize) {
        self.reflectance.dim()
    }

    pub fn pixel_size_m(&self) -> f64 {
        PIXEL_SIZE_M
    }

    pub fn reflectance(&self) -> &Array2<f64> {
        &self.reflectance
    }

    pub fn transmittance(&self) -> &Array2<f64> {
        &self.transmittance
    }

    /// A pixel is wall iff either material channel is positive.
    #[inline]
    pub fn is_wall(&self, row: usize, col: usize) -> bool {
        self.reflectance[[row, col]] > 0.0 || self.transmittance[[row, col]] > 0.0
    }

    pub fn wall_mask(&self) -> Array2<bool> {
        ndarray::Zip::from(&self.reflectance)
            .and(&self.transmittance)
            .map_collect(|&r, &t| r > 0.0 || t > 0.0)
    }

    /// Sets one cell's material values.
    pub fn set_cell(&mut self, row: usize, col: usize, reflectance: f64, transmittance: f64) -> Result<()> {
        if !(reflectance.is_finite() && transmittance.is_finite() && reflectance >= 0.0 && transmittance >= 0.0) {
            return Err(Error::Data("material values must be finite and non-negative".into()));
        }
        self.reflectance[[row, col]] = reflectance;
        self.transmittance[[row, col]] = transmittance;
        Ok(())
    }

    /// Sub-grid with top-left corner `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, height: usize, width: usize) -> Result<Self> {
        if row + height > self.height() || col + width > self.width() || height == 0 || width == 0 {
            bail_arg!(
                "crop {height}x{width} at ({row},{col}) exceeds grid {}x{}",
                self.height(),
                self.width()
            );
        }
        let s = ndarray::s![row..row + height, col..col + width];
        Ok(Self {
            reflectance: self.reflectance.slice(s).to_owned(),
            transmittance: self.transmittance.slice(s).to_owned(),
        })
    }

    /// Applies the same plane transform to both channels.
    pub fn map_planes(&self, f: impl Fn(&Array2<f64>) -> Array2<f64>) -> Self {
        Self {
            reflectance: f(&self.reflectance),
            transmittance: f(&self.transmittance),
        }
    }
}

/// Antenna gain in dBi at each integer azimuth degree 0..359.
#[derive(Clone, PartialEq)]
pub struct AntennaPattern {
    gains_dbi: Box<[f64; 360]>,
}

impl fmt::Debug for AntennaPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_isotropic() {
            f.write_str("AntennaPattern(isotropic)")
        } else {
            let max = self.gains_dbi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            write!(f, "AntennaPattern(peak {max} dBi)")
        }
    }
}

impl Default for AntennaPattern {
    fn default() -> Self {
        Self::isotropic()
    }
}

impl AntennaPattern {
    pub fn isotropic() -> Self {
        Self {
            gains_dbi: Box::new([0.0; 360]),
        }
    }

    pub fn new(gains_dbi: Vec<f64>) -> Result<Self> {
        let gains: [f64; 360] = gains_dbi
            .try_into()
            .map_err(|v: Vec<f64>| Error::Data(format!("antenna pattern needs 360 gains, got {}", v.len())))?;
        if let Some(g) = gains.iter().find(|g| !g.is_finite()) {
            return Err(Error::Data(format!("antenna gain {g} is not finite")));
        }
        Ok(Self {
            gains_dbi: Box::new(gains),
        })
    }

    pub fn gains_dbi(&self) -> &[f64; 360] {
        &self.gains_dbi
    }

    pub fn is_isotropic(&self) -> bool {
        self.gains_dbi.iter().all(|&g| g == 0.0)
    }

    /// Gain at an arbitrary azimuth, linearly interpolated with wraparound.
    pub fn gain_at(&self, azimuth_deg: f64) -> f64 {
        let a = azimuth_deg.rem_euclid(360.0);
        let base = a.floor();
        // rem_euclid can return exactly 360.0 for tiny negative inputs
        let i0 = (base as usize) % 360;
        let i1 = (i0 + 1) % 360;
        crate::raster::lerp(self.gains_dbi[i0], self.gains_dbi[i1], a - base)
    }

    /// Parses `angle_deg,gain_dbi` lines, one per integer degree in any order.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut gains = [None; 360];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |what: &str| Error::Format(format!("pattern line {}: {what}: `{line}`", lineno + 1));
            let (angle, gain) = line.split_once(',').ok_or_else(|| bad("expected `angle,gain`"))?;
            let angle: usize = angle.trim().parse().map_err(|_| bad("angle is not an integer"))?;
            let gain: f64 = gain.trim().parse().map_err(|_| bad("gain is not a number"))?;
            if angle >= 360 {
                return Err(bad("angle outside 0..359"));
            }
            if gains[angle].replace(gain).is_some() {
                return Err(bad("duplicate angle"));
            }
        }
        let missing = gains.iter().filter(|g| g.is_none()).count();
        if missing > 0 {
            return Err(Error::Format(format!("antenna pattern is missing {missing} angles")));
        }
        Self::new(gains.iter().map(|g| g.unwrap()).collect())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn to_csv_string(&self) -> String {
        self.gains_dbi
            .iter()
            .enumerate()
            .map(|(a, g)| format!("{a},{g}\n"))
            .collect()
    }
}

/// Transmitter placement and radio parameters.
///
/// `row`/`col` are fractional pixel coordinates in which pixel `(i, j)` has
/// its center at `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TxConfig {
    pub row: f64,
    pub col: f64,
    pub height_m: f64,
    pub freq_mhz: f64,
    pub pattern: AntennaPattern,
    pub orientation_deg: f64,
}

impl TxConfig {
    /// Isotropic transmitter at the standard 1.5 m height.
    pub fn new(row: f64, col: f64, freq_mhz: f64) -> Self {
        Self {
            row,
            col,
            height_m: TX_HEIGHT_M,
            freq_mhz,
            pattern: AntennaPattern::isotropic(),
            orientation_deg: 0.0,
        }
    }

    pub fn with_pattern(mut self, pattern: AntennaPattern, orientation_deg: f64) -> Self {
        self.pattern = pattern;
        self.orientation_deg = orientation_deg;
        self
    }

    /// Checks the placement against a grid of the given size.
    pub fn validate(&self, height: usize, width: usize) -> Result<()> {
        if !(self.row >= 0.0 && self.row < height as f64 && self.col >= 0.0 && self.col < width as f64) {
            bail_arg!(
                "transmitter ({}, {}) lies outside the {height}x{width} grid",
                self.row,
                self.col
            );
        }
        if !(self.freq_mhz > 0.0 && self.freq_mhz.is_finite()) {
            bail_arg!("carrier frequency must be positive, got {} MHz", self.freq_mhz);
        }
        if !(self.height_m.is_finite() && self.orientation_deg.is_finite()) {
            bail_arg!("transmitter height and orientation must be finite");
        }
        Ok(())
    }

    /// The cell containing the transmitter (nearest pixel center).
    pub fn cell(&self, height: usize, width: usize) -> (usize, usize) {
        let r = ((self.row + 0.5).floor() as usize).min(height - 1);
        let c = ((self.col + 0.5).floor() as usize).min(width - 1);
        (r, c)
    }
}

/// Single-channel pathloss raster in dB.
#[derive(Clone, Debug, PartialEq)]
pub struct RadioMap {
    values: Array2<f64>,
}

impl RadioMap {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::Data(format!("radio map value {v} is not finite")));
        }
        Ok(Self { values })
    }

    pub fn from_raster(raster: &Array3<f64>) -> Result<Self> {
        if raster.len_of(Axis(0)) != 1 {
            return Err(Error::Shape(format!(
                "radio map raster needs 1 channel, found {}",
                raster.len_of(Axis(0))
            )));
        }
        Self::new(raster.index_axis(Axis(0), 0).to_owned())
    }

    pub fn to_raster(&self) -> Array3<f64> {
        self.values.clone().insert_axis(Axis(0))
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn dim(&self) -> (usize, usize) {
        self.values.dim()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

/// Whether each generalization axis of a sample was seen during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeenFlags {
    pub building: bool,
    pub frequency: bool,
    pub antenna: bool,
}

/// Identity of one (building, antenna, frequency, transmitter) sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub building_id: u32,
    pub antenna_id: u32,
    pub freq_mhz: f64,
    pub tx_index: u32,
    pub split: Split,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seen: Option<SeenFlags>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn grid_rejects_mismatched_channels() {
        let err = BuildingGrid::new(Array2::zeros((2, 3)), Array2::zeros((3, 2))).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn grid_rejects_negative_material() {
        let err = BuildingGrid::new(array![[0.0, -1.0]], array![[0.0, 0.0]]).unwrap_err();
        assert!(matches!(err, Error::Data(_)));
    }

    #[test]
    fn wall_is_either_channel_positive() {
        let g = BuildingGrid::new(array![[0.0, 3.0, 0.0, 2.0]], array![[0.0, 0.0, 4.0, 5.0]]).unwrap();
        let walls: Vec<bool> = (0..4).map(|c| g.is_wall(0, c)).collect();
        assert_eq!(walls, vec![false, true, true, true]);
        assert_eq!(g.wall_mask().row(0).to_vec(), walls);
    }

    #[test]
    fn pattern_interpolates_with_wraparound() {
        let mut gains = vec![0.0; 360];
        gains[45] = 4.0;
        gains[46] = 6.0;
        gains[359] = 2.0;
        let p = AntennaPattern::new(gains).unwrap();
        assert_eq!(p.gain_at(45.5), 5.0);
        assert_eq!(p.gain_at(359.5), 1.0);
        assert_eq!(p.gain_at(-0.5), 1.0);
        assert_eq!(p.gain_at(405.5), 5.0);
        assert_eq!(p.gain_at(-1e-20), 0.0);
    }

    #[test]
    fn pattern_needs_360_entries() {
        assert!(AntennaPattern::new(vec![0.0; 359]).is_err());
        assert!(AntennaPattern::new(vec![f64::NAN; 360]).is_err());
    }

    #[test]
    fn pattern_csv_any_order_round_trip() {
        let mut lines: Vec<String> = (0..360).map(|a| format!("{a},{}", a as f64 / 10.0)).collect();
        lines.reverse();
        let p = AntennaPattern::from_csv_str(&lines.join("\n")).unwrap();
        assert_eq!(p.gains_dbi()[123], 12.3);
        assert_eq!(AntennaPattern::from_csv_str(&p.to_csv_string()).unwrap(), p);
    }

    #[test]
    fn pattern_csv_rejects_duplicates_and_gaps() {
        let mut lines: Vec<String> = (0..360).map(|a| format!("{a},0")).collect();
        lines[5] = "4,0".into();
        assert!(matches!(AntennaPattern::from_csv_str(&lines.join("\n")), Err(Error::Format(_))));
        lines.truncate(300);
        assert!(AntennaPattern::from_csv_str(&lines.join("\n")).is_err());
    }

    #[test]
    fn tx_validation() {
        assert!(TxConfig::new(0.0, 0.0, 868.0).validate(4, 4).is_ok());
        assert!(TxConfig::new(4.0, 0.0, 868.0).validate(4, 4).is_err());
        assert!(TxConfig::new(-0.1, 0.0, 868.0).validate(4, 4).is_err());
        assert!(TxConfig::new(1.0, 1.0, 0.0).validate(4, 4).is_err());
        assert_eq!(TxConfig::new(3.9, 1.4, 868.0).cell(4, 4), (3, 1));
    }

    #[test]
    fn meta_json_round_trip() {
        let m = SampleMeta {
            building_id: 3,
            antenna_id: 1,
            freq_mhz: 868.0,
            tx_index: 7,
            split: Split::Train,
            seen: None,
        };
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"split\":\"train\""));
        assert_eq!(serde_json::from_str::<SampleMeta>(&s).unwrap(), m);
    }
}
