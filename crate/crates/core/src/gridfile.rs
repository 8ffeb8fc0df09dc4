//! RMG1 raster container and PNG export.
//!
//! Layout: `b"RMG1"`, then `u32` LE channel count, height and width, then
//! `C*H*W` little-endian `f32` values, channel-major then row-major.

use std::fs;
use std::path::Path;

use ndarray::{Array2, Array3};

use crate::error::{bail_arg, Error, Result};

pub const MAGIC: &[u8; 4] = b"RMG1";
/// Format version string, equal to the magic.
pub const FORMAT_VERSION: &str = "RMG1";
pub const HEADER_LEN: usize = 16;

/// Encodes a C×H×W raster. Values are narrowed to `f32`.
pub fn encode(raster: &Array3<f64>) -> Result<Vec<u8>> {
    let (c, h, w) = raster.dim();
    if c == 0 {
        bail_arg!("raster needs at least one channel");
    }
    let dims: Vec<u32> = [c, h, w]
        .iter()
        .map(|&d| u32::try_from(d).map_err(|_| Error::Argument(format!("dimension {d} exceeds u32"))))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * c * h * w);
    out.extend_from_slice(MAGIC);
    for d in dims {
        out.extend_from_slice(&d.to_le_bytes());
    }
    // iter() walks logical (standard) order regardless of memory layout
    for &v in raster.iter() {
        let narrowed = v as f32;
        if !narrowed.is_finite() {
            return Err(Error::Data(format!("value {v} is not representable as a finite f32")));
        }
        out.extend_from_slice(&narrowed.to_le_bytes());
    }
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<Array3<f64>> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(Error::Format("missing RMG1 magic".into()));
        }
        return Err(Error::Length {
            expected: HEADER_LEN,
            found: bytes.len(),
        });
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format(format!(
            "missing RMG1 magic (found {:?})",
            String::from_utf8_lossy(&bytes[..4])
        )));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap()) as usize;
    let (c, h, w) = (word(4), word(8), word(12));
    if c == 0 {
        return Err(Error::Format("channel count must be at least 1".into()));
    }
    let expected = c
        .checked_mul(h)
        .and_then(|n| n.checked_mul(w))
        .and_then(|n| n.checked_mul(4))
        .and_then(|n| n.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Format("header dimensions overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Length {
            expected,
            found: bytes.len(),
        });
    }
    let values: Vec<f64> = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .map(|v| {
            if v.is_finite() {
                Ok(v as f64)
            } else {
                Err(Error::Data(format!("stored value {v} is not finite")))
            }
        })
        .collect::<Result<_>>()?;
    Ok(Array3::from_shape_vec((c, h, w), values).expect("length checked against header"))
}

pub fn write_grid_file(raster: &Array3<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode(raster)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_grid_file(path: impl AsRef<Path>) -> Result<Array3<f64>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Maps `v` to `round(255 * clamp((v - min) / (max - min), 0, 1))`, ties up.
pub fn to_gray(plane: &Array2<f64>, min: f64, max: f64) -> Result<Vec<u8>> {
    if !(min < max) || !min.is_finite() || !max.is_finite() {
        bail_arg!("PNG range needs finite min < max, got [{min}, {max}]");
    }
    Ok(plane
        .iter()
        .map(|&v| {
            let x = ((v - min) / (max - min)).clamp(0.0, 1.0);
            (255.0 * x + 0.5).floor() as u8
        })
        .collect())
}

/// Writes one channel as an 8-bit grayscale PNG.
pub fn export_png(plane: &Array2<f64>, path: impl AsRef<Path>, min: f64, max: f64) -> Result<()> {
    let path = path.as_ref();
    let (h, w) = plane.dim();
    let pixels = to_gray(plane, min, max)?;
    let img = image::GrayImage::from_raw(w as u32, h as u32, pixels).expect("buffer sized from plane");
    img.save_with_format(path, image::ImageFormat::Png)
        .map_err(|e| Error::io(path, std::io::Error::other(e)))
}
