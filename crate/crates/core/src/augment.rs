//! Training-time augmentations applied jointly to a feature stack and its
//! target map.
//!
//! The composed pipeline runs MixUp, then rotation, then flips, then
//! crop-and-resize. Every random decision is drawn up front into an
//! [`AugmentDraws`] record from per-augmentation streams of the sample seed
//! (see [`crate::rng`]), so a run can be replayed or logged exactly.

use ndarray::{s, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{bail_arg, Error, Result};
use crate::features::FeatureStack;
use crate::raster::{self, axis_taps, lerp, Resample};
use crate::rng::{sample_seed, stream_rng, Stream};
use crate::types::{RadioMap, MODEL_SIDE, PAD_VALUE};

/// Smallest crop side: half the model input.
pub const MIN_CROP_SIDE: usize = MODEL_SIDE / 2;
/// Share of samples rotated by an arbitrary angle when that mode is on.
pub const ARBITRARY_ROTATION_PROB: f64 = 0.75;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub seed: u64,
    pub mixup_prob: f64,
    pub crop_prob: f64,
    pub arbitrary_rotation: bool,
    /// Interpolate targets in linear power instead of dB.
    pub db_domain_resize: bool,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            mixup_prob: 0.75,
            crop_prob: 0.75,
            arbitrary_rotation: false,
            db_domain_resize: false,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("mixup_prob", self.mixup_prob), ("crop_prob", self.crop_prob)] {
            if !(0.0..=1.0).contains(&p) {
                bail_arg!("{name} must lie in [0, 1], got {p}");
            }
        }
        Ok(())
    }

    /// The same configuration keyed to sample `index`.
    pub fn for_sample(&self, index: u64) -> Self {
        Self {
            seed: sample_seed(self.seed, index),
            ..self.clone()
        }
    }
}

/// Square crop window in pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropWindow {
    pub row: usize,
    pub col: usize,
    pub side: usize,
}

/// Every random decision of one pipeline run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentDraws {
    /// MixUp weight of the primary sample, when MixUp fires.
    pub mixup_lambda: Option<f64>,
    pub rot90_k: u8,
    pub arbitrary_angle_deg: Option<f64>,
    pub flip_h: bool,
    pub flip_v: bool,
    pub crop: Option<CropWindow>,
}

impl AugmentDraws {
    /// Draws that leave a sample untouched.
    pub fn identity() -> Self {
        Self {
            mixup_lambda: None,
            rot90_k: 0,
            arbitrary_angle_deg: None,
            flip_h: false,
            flip_v: false,
            crop: None,
        }
    }
}

/// Draws a crop window with probability `prob` for an image of side `side`.
pub fn sample_crop<R: Rng>(rng: &mut R, side: usize, prob: f64) -> Option<CropWindow> {
    let fire = rng.gen::<f64>() < prob;
    let min = (side / 2).max(1);
    let s = rng.gen_range(min..=side);
    let row = rng.gen_range(0..=side - s);
    let col = rng.gen_range(0..=side - s);
    fire.then_some(CropWindow { row, col, side: s })
}

/// Draws all pipeline decisions for `cfg.seed`.
pub fn draw(cfg: &AugmentConfig) -> AugmentDraws {
    let mut mix = stream_rng(cfg.seed, Stream::Mixup);
    let mix_fire = mix.gen::<f64>() < cfg.mixup_prob;
    let lambda: f64 = mix.gen();

    let k = stream_rng(cfg.seed, Stream::Rotate).gen_range(0..4u8);

    let mut arb = stream_rng(cfg.seed, Stream::ArbitraryRotate);
    let arb_fire = arb.gen::<f64>() < ARBITRARY_ROTATION_PROB;
    let angle = arb.gen::<f64>() * 360.0;

    let mut flip_rng = stream_rng(cfg.seed, Stream::Flip);
    let (flip_h, flip_v) = (flip_rng.gen_bool(0.5), flip_rng.gen_bool(0.5));

    let crop = sample_crop(&mut stream_rng(cfg.seed, Stream::Crop), MODEL_SIDE, cfg.crop_prob);

    AugmentDraws {
        mixup_lambda: mix_fire.then_some(lambda),
        rot90_k: k,
        arbitrary_angle_deg: (cfg.arbitrary_rotation && arb_fire).then_some(angle),
        flip_h,
        flip_v,
        crop,
    }
}

fn check_pair(stack: &FeatureStack, target: &RadioMap) -> Result<(usize, usize)> {
    match stack.dim() {
        Some(d) if d == target.dim() => Ok(d),
        Some(d) => Err(Error::Argument(format!("stack {d:?} and target {:?} differ in shape", target.dim()))),
        None => bail_arg!("feature stack is empty"),
    }
}

fn map_pair(
    stack: &FeatureStack,
    target: &RadioMap,
    f: impl Fn(&Array2<f64>) -> Array2<f64>,
) -> Result<(FeatureStack, RadioMap)> {
    check_pair(stack, target)?;
    Ok((stack.map_planes(|_, p| f(p)), RadioMap::new(f(target.values()))?))
}

/// Mirrors columns (`horizontal`) and/or rows (`vertical`).
pub fn flip(stack: &FeatureStack, target: &RadioMap, horizontal: bool, vertical: bool) -> Result<(FeatureStack, RadioMap)> {
    map_pair(stack, target, |p| match (horizontal, vertical) {
        (false, false) => p.clone(),
        (true, false) => p.slice(s![.., ..;-1]).to_owned(),
        (false, true) => p.slice(s![..;-1, ..]).to_owned(),
        (true, true) => p.slice(s![..;-1, ..;-1]).to_owned(),
    })
}

fn rot90_plane(p: &Array2<f64>, k: u8) -> Array2<f64> {
    match k % 4 {
        0 => p.clone(),
        // out[i][j] = in[j][n-1-i]
        1 => p.slice(s![.., ..;-1]).reversed_axes().to_owned(),
        2 => p.slice(s![..;-1, ..;-1]).to_owned(),
        _ => p.slice(s![..;-1, ..]).reversed_axes().to_owned(),
    }
}

/// Rotates by `k`·90° counterclockwise (as displayed, rows downward).
pub fn rot90(stack: &FeatureStack, target: &RadioMap, k: u8) -> Result<(FeatureStack, RadioMap)> {
    let (h, w) = check_pair(stack, target)?;
    if h != w {
        bail_arg!("rot90 needs square inputs, got {h}x{w}");
    }
    if k > 3 {
        bail_arg!("rot90 k must be in 0..=3, got {k}");
    }
    map_pair(stack, target, |p| rot90_plane(p, k))
}

fn rotate_plane(p: &Array2<f64>, angle_deg: f64) -> Array2<f64> {
    let (h, w) = p.dim();
    let (cy, cx) = ((h as f64 - 1.0) / 2.0, (w as f64 - 1.0) / 2.0);
    let (sin, cos) = angle_deg.to_radians().sin_cos();
    Array2::from_shape_fn((h, w), |(r, c)| {
        let (y, x) = (r as f64 - cy, c as f64 - cx);
        let src_r = cy + y * cos + x * sin;
        let src_c = cx + x * cos - y * sin;
        raster::sample_bilinear(p, src_r, src_c).unwrap_or(PAD_VALUE)
    })
}

/// Linear power relative to `reference` dB, which keeps large dB values
/// from overflowing.
fn to_linear(p: &Array2<f64>, reference: f64) -> Array2<f64> {
    p.mapv(|v| 10f64.powf((v - reference) / 10.0))
}

fn max_value(p: &Array2<f64>) -> f64 {
    p.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
}

/// Rotates about the image center by an arbitrary counterclockwise angle
/// with bilinear sampling; uncovered pixels become −1.
pub fn rotate_arbitrary(
    stack: &FeatureStack,
    target: &RadioMap,
    angle_deg: f64,
    db_domain: bool,
) -> Result<(FeatureStack, RadioMap)> {
    let (h, w) = check_pair(stack, target)?;
    if h != w {
        bail_arg!("rotation needs square inputs, got {h}x{w}");
    }
    if !angle_deg.is_finite() {
        bail_arg!("rotation angle must be finite");
    }
    let out_stack = stack.map_planes(|_, p| rotate_plane(p, angle_deg));
    let out_target = if db_domain {
        let reference = max_value(target.values());
        let lin = rotate_plane(&to_linear(target.values(), reference), angle_deg);
        let back = Array2::from_shape_fn((h, w), |(r, c)| {
            let v = lin[[r, c]];
            // out-of-bounds fill is −1 in the output, not 10^(−1/10)
            if v == PAD_VALUE {
                PAD_VALUE
            } else {
                reference + 10.0 * v.log10()
            }
        });
        RadioMap::new(back)?
    } else {
        RadioMap::new(rotate_plane(target.values(), angle_deg))?
    };
    Ok((out_stack, out_target))
}

/// Resamples a dB map by interpolating linear power `10^(p/10)` and
/// converting back with `10·log10`.
pub fn resize_db_domain(map: &RadioMap, shape: (usize, usize)) -> Result<RadioMap> {
    let (h, w) = shape;
    let (sh, sw) = map.dim();
    if h == 0 || w == 0 || sh == 0 || sw == 0 {
        bail_arg!("dB-domain resize needs non-empty shapes");
    }
    if (sh, sw) == shape {
        return Ok(map.clone());
    }
    let db = map.values();
    let rows = axis_taps(sh, h);
    let cols = axis_taps(sw, w);
    let out = Array2::from_shape_fn(shape, |(r, c)| {
        let (ry, cx) = (rows[r], cols[c]);
        let taps = [db[[ry.i0, cx.i0]], db[[ry.i0, cx.i1]], db[[ry.i1, cx.i0]], db[[ry.i1, cx.i1]]];
        let lo = taps.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = taps.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lin = taps.map(|v| 10f64.powf((v - hi) / 10.0));
        let top = lerp(lin[0], lin[1], cx.t);
        let bottom = lerp(lin[2], lin[3], cx.t);
        let v = hi + 10.0 * lerp(top, bottom, ry.t).log10();
        // the exact value is a convex combination, so it lies inside the
        // envelope of its taps; clamping removes pow/log rounding
        v.clamp(lo, hi)
    });
    RadioMap::new(out)
}

/// Crops `window` from every plane and the target, then resizes back to the
/// model side.
pub fn crop_resize(
    stack: &FeatureStack,
    target: &RadioMap,
    window: CropWindow,
    db_domain: bool,
) -> Result<(FeatureStack, RadioMap)> {
    let (h, w) = check_pair(stack, target)?;
    if (h, w) != (MODEL_SIDE, MODEL_SIDE) {
        bail_arg!("crop_resize needs {MODEL_SIDE}x{MODEL_SIDE} inputs, got {h}x{w}");
    }
    let CropWindow { row, col, side } = window;
    if side < MIN_CROP_SIDE || side > MODEL_SIDE || row + side > h || col + side > w {
        bail_arg!("crop window {window:?} does not fit a {h}x{w} image");
    }
    let region = s![row..row + side, col..col + side];
    let out_stack = stack.try_map_planes(|_, p| {
        raster::resize(&p.slice(region).to_owned(), MODEL_SIDE, MODEL_SIDE, Resample::Bilinear)
    })?;
    let cropped = RadioMap::new(target.values().slice(region).to_owned())?;
    let out_target = if db_domain {
        resize_db_domain(&cropped, (MODEL_SIDE, MODEL_SIDE))?
    } else {
        RadioMap::new(raster::resize(cropped.values(), MODEL_SIDE, MODEL_SIDE, Resample::Bilinear)?)?
    };
    Ok((out_stack, out_target))
}

fn blend(a: f64, b: f64, lambda: f64) -> f64 {
    (lambda * a + (1.0 - lambda) * b).clamp(a.min(b), a.max(b))
}

/// MixUp: `λ·a + (1−λ)·b` on every channel and on the targets.
pub fn mixup(
    a: (&FeatureStack, &RadioMap),
    b: (&FeatureStack, &RadioMap),
    lambda: f64,
) -> Result<(FeatureStack, RadioMap)> {
    if !(0.0..=1.0).contains(&lambda) {
        bail_arg!("mixup weight must lie in [0, 1], got {lambda}");
    }
    let dim = check_pair(a.0, a.1)?;
    if check_pair(b.0, b.1)? != dim {
        bail_arg!("mixup partners differ in shape");
    }
    if a.0.kinds() != b.0.kinds() {
        bail_arg!("mixup channel sets differ: {:?} vs {:?}", a.0.kinds(), b.0.kinds());
    }
    if a.0.is_normalized() != b.0.is_normalized() {
        bail_arg!("cannot mix a normalized stack with a raw one");
    }
    let mix = |pa: &Array2<f64>, pb: &Array2<f64>| {
        ndarray::Zip::from(pa).and(pb).map_collect(|&x, &y| blend(x, y, lambda))
    };
    let planes = b.0.channels();
    let mut i = 0;
    let stack = a.0.map_planes(|_, pa| {
        let out = mix(pa, &planes[i].1);
        i += 1;
        out
    });
    Ok((stack, RadioMap::new(mix(a.1.values(), b.1.values()))?))
}

/// Applies pre-drawn decisions in pipeline order. MixUp is skipped when no
/// partner is supplied.
pub fn apply_draws(
    stack: &FeatureStack,
    target: &RadioMap,
    partner: Option<(&FeatureStack, &RadioMap)>,
    draws: &AugmentDraws,
    db_domain: bool,
) -> Result<(FeatureStack, RadioMap)> {
    let mut cur = (stack.clone(), target.clone());
    if let (Some(lambda), Some(p)) = (draws.mixup_lambda, partner) {
        cur = mixup((&cur.0, &cur.1), p, lambda)?;
    }
    if draws.rot90_k != 0 {
        cur = rot90(&cur.0, &cur.1, draws.rot90_k)?;
    }
    if let Some(angle) = draws.arbitrary_angle_deg {
        cur = rotate_arbitrary(&cur.0, &cur.1, angle, db_domain)?;
    }
    if draws.flip_h || draws.flip_v {
        cur = flip(&cur.0, &cur.1, draws.flip_h, draws.flip_v)?;
    }
    if let Some(window) = draws.crop {
        cur = crop_resize(&cur.0, &cur.1, window, db_domain)?;
    }
    Ok(cur)
}

/// Draws and applies the full pipeline for `cfg.seed`. The returned draws
/// record what was actually applied.
pub fn apply_pipeline(
    stack: &FeatureStack,
    target: &RadioMap,
    partner: Option<(&FeatureStack, &RadioMap)>,
    cfg: &AugmentConfig,
) -> Result<(FeatureStack, RadioMap, AugmentDraws)> {
    cfg.validate()?;
    let (h, w) = check_pair(stack, target)?;
    if (h, w) != (MODEL_SIDE, MODEL_SIDE) {
        bail_arg!("pipeline needs preprocessed {MODEL_SIDE}x{MODEL_SIDE} inputs, got {h}x{w}");
    }
    let mut draws = draw(cfg);
    if partner.is_none() {
        draws.mixup_lambda = None;
    }
    let (s, t) = apply_draws(stack, target, partner, &draws, cfg.db_domain_resize)?;
    Ok((s, t, draws))
}
