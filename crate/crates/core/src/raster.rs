//! Plane resampling shared by preprocessing, augmentation and the model stub.
//!
//! Coordinates follow the half-pixel convention: destination pixel `i` maps
//! to source coordinate `(i + 0.5) * src / dst - 0.5`, clamped to the source
//! extent. Equal sizes are therefore an exact identity.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Result};

/// Interpolation kernel used when resampling a plane.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Resample {
    #[default]
    Bilinear,
    Nearest,
}

impl std::str::FromStr for Resample {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "bilinear" => Ok(Resample::Bilinear),
            "nearest" => Ok(Resample::Nearest),
            other => Err(format!("unknown resampling kernel `{other}`")),
        }
    }
}

/// Two source taps and the weight of the second one.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Taps {
    pub i0: usize,
    pub i1: usize,
    pub t: f64,
}

pub(crate) fn axis_taps(src: usize, dst: usize) -> Vec<Taps> {
    let scale = src as f64 / dst as f64;
    let last = (src - 1) as f64;
    (0..dst)
        .map(|i| {
            let x = ((i as f64 + 0.5) * scale - 0.5).clamp(0.0, last);
            let i0 = x.floor() as usize;
            let i1 = (i0 + 1).min(src - 1);
            Taps { i0, i1, t: x - i0 as f64 }
        })
        .collect()
}

#[inline]
pub(crate) fn lerp(a: f64, b: f64, t: f64) -> f64 {
    // a + t(b - a) keeps constants exact, unlike (1 - t)a + tb
    if t == 0.0 {
        a
    } else {
        a + t * (b - a)
    }
}

/// Resamples `src` to `height`×`width`.
pub fn resize(src: &Array2<f64>, height: usize, width: usize, kernel: Resample) -> Result<Array2<f64>> {
    let (sh, sw) = src.dim();
    if height == 0 || width == 0 {
        bail_arg!("resize target must be non-empty, got {height}x{width}");
    }
    if sh == 0 || sw == 0 {
        bail_arg!("cannot resize an empty plane");
    }
    if (sh, sw) == (height, width) {
        return Ok(src.clone());
    }
    let rows = axis_taps(sh, height);
    let cols = axis_taps(sw, width);
    let out = match kernel {
        Resample::Bilinear => Array2::from_shape_fn((height, width), |(r, c)| {
            let (ry, cx) = (rows[r], cols[c]);
            let top = lerp(src[[ry.i0, cx.i0]], src[[ry.i0, cx.i1]], cx.t);
            let bottom = lerp(src[[ry.i1, cx.i0]], src[[ry.i1, cx.i1]], cx.t);
            lerp(top, bottom, ry.t)
        }),
        Resample::Nearest => {
            let pick = |src_len: usize, dst_len: usize, i: usize| {
                (((i as f64 + 0.5) * src_len as f64 / dst_len as f64) as usize).min(src_len - 1)
            };
            Array2::from_shape_fn((height, width), |(r, c)| {
                src[[pick(sh, height, r), pick(sw, width, c)]]
            })
        }
    };
    Ok(out)
}

/// Bilinear sample at fractional `(row, col)`; `None` outside the plane.
///
/// Points within 1e-9 px of the border are clamped onto it so that rotations
/// by exact multiples of 90° do not lose their edge pixels to rounding.
pub fn sample_bilinear(src: &Array2<f64>, row: f64, col: f64) -> Option<f64> {
    const SLACK: f64 = 1e-9;
    let (h, w) = src.dim();
    let (last_r, last_c) = ((h - 1) as f64, (w - 1) as f64);
    if !(row >= -SLACK && row <= last_r + SLACK && col >= -SLACK && col <= last_c + SLACK) {
        return None;
    }
    let (row, col) = (row.clamp(0.0, last_r), col.clamp(0.0, last_c));
    let (r0, c0) = (row.floor() as usize, col.floor() as usize);
    let (r1, c1) = ((r0 + 1).min(h - 1), (c0 + 1).min(w - 1));
    let (tr, tc) = (row - r0 as f64, col - c0 as f64);
    let top = lerp(src[[r0, c0]], src[[r0, c1]], tc);
    let bottom = lerp(src[[r1, c0]], src[[r1, c1]], tc);
    Some(lerp(top, bottom, tr))
}

/// Pairwise (cascade) summation. The reduction tree depends only on the
/// slice length, so results are bit-stable across runs and thread counts.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        values.iter().sum()
    } else {
        let mid = values.len() / 2;
        pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
    }
}
