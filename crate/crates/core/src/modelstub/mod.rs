//! Forward-only model stub: input conv, patch embedding, a seeded elementwise
//! stand-in for the 14-layer encoder, shared projection, per-layer neck, and
//! a fusion head ending in `160 · sigmoid`.
//!
//! Everything here checks shapes and value ranges; nothing is trained.

mod ops;
mod weights;

pub use weights::{Conv, EncoderLayer, Linear, NeckLayer, StubWeights, MANIFEST_NAME};

use ndarray::{s, Array2, Array3, ArrayView2, ArrayView3, Axis, Zip};

use crate::error::{Error, Result};
use crate::features::{ChannelKind, FeatureStack};
use crate::types::{RadioMap, MODEL_SIDE, PATHLOSS_CEILING_DB};

pub const PATCH: usize = 14;
/// Patches per side: 518 / 14.
pub const GRID: usize = MODEL_SIDE / PATCH;
pub const EMBED_DIM: usize = 768;
pub const NUM_LAYERS: usize = 14;
pub const IMAGE_CHANNELS: usize = 3;
pub const HEAD_HIDDEN: usize = 8;
/// Logits are clamped so `160 · sigmoid` stays strictly inside (0, 160)
/// even after narrowing to f32.
pub const LOGIT_LIMIT: f64 = 15.0;

pub const SCALE_FACTORS: [usize; NUM_LAYERS] = [14, 14, 14, 8, 8, 8, 4, 4, 4, 2, 2, 2, 1, 1];
pub const DEPTHS_TASK1: [usize; NUM_LAYERS] = [16, 16, 16, 32, 32, 32, 64, 64, 64, 128, 128, 128, 256, 256];
/// As published: one entry short of the scale list.
pub const DEPTHS_TASK23_PRINTED: [usize; 13] = [32, 32, 32, 64, 64, 64, 128, 128, 128, 256, 256, 512, 512];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NeckSpec {
    pub scale_factors: [usize; NUM_LAYERS],
    pub depths: [usize; NUM_LAYERS],
    pub neck_in_dim: usize,
}

impl NeckSpec {
    /// Tasks 2 and 3 repeat the last printed depth to reach 14 layers.
    pub fn for_task(task: u8) -> Result<Self> {
        let (depths, neck_in_dim) = match task {
            1 => (DEPTHS_TASK1, 256),
            2 | 3 => {
                let mut d = [0; NUM_LAYERS];
                d[..13].copy_from_slice(&DEPTHS_TASK23_PRINTED);
                d[13] = DEPTHS_TASK23_PRINTED[12];
                (d, 512)
            }
            t => return Err(Error::Argument(format!("task must be 1, 2 or 3, got {t}"))),
        };
        Ok(Self { scale_factors: SCALE_FACTORS, depths, neck_in_dim })
    }

    pub fn output_sides(&self) -> [usize; NUM_LAYERS] {
        self.scale_factors.map(|s| GRID * s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale_factors.iter().chain(&self.depths).any(|&v| v == 0) || self.neck_in_dim == 0 {
            return Err(Error::Shape("neck scales, depths and input width must be positive".into()));
        }
        if let Some(&s) = self.scale_factors.iter().find(|&&s| GRID * s > MODEL_SIDE) {
            return Err(Error::Shape(format!("scale factor {s} gives a side above {MODEL_SIDE}")));
        }
        Ok(())
    }
}

/// Cuts a `C×518×518` image into 37×37 non-overlapping 14×14 patches.
/// Row `r·37 + c` holds patch (r, c) flattened channel, then row, then column.
pub fn patchify(image: ArrayView3<f32>) -> Result<Array2<f32>> {
    let (ch, h, w) = image.dim();
    if (h, w) != (MODEL_SIDE, MODEL_SIDE) {
        return Err(Error::Shape(format!("patchify needs {MODEL_SIDE}×{MODEL_SIDE}, got {h}×{w}")));
    }
    let mut tokens = Array2::<f32>::zeros((GRID * GRID, ch * PATCH * PATCH));
    for (t, mut row) in tokens.outer_iter_mut().enumerate() {
        let (pr, pc) = (t / GRID * PATCH, t % GRID * PATCH);
        let patch = image.slice(s![.., pr..pr + PATCH, pc..pc + PATCH]);
        row.iter_mut().zip(patch.iter()).for_each(|(d, &v)| *d = v);
    }
    Ok(tokens)
}

/// Seeded stand-in for the transformer: layer 0 is the patch embedding, each
/// later layer mixes every token with the token mean through `tanh`.
pub fn encode(tokens: ArrayView2<f32>, w: &StubWeights) -> Result<Vec<Array2<f32>>> {
    if tokens.ncols() != w.patch_embed.weight.nrows() {
        return Err(Error::Shape(format!(
            "token width {} does not match patch embedding input {}",
            tokens.ncols(),
            w.patch_embed.weight.nrows()
        )));
    }
    let mut h = tokens.dot(&w.patch_embed.weight) + &w.patch_embed.bias;
    let mut layers = Vec::with_capacity(NUM_LAYERS);
    for e in &w.encoder {
        let mean = h.mean_axis(Axis(0)).expect("tokens present");
        let next = Zip::from(&h)
            .and_broadcast(&e.scale)
            .and_broadcast(&e.mix)
            .and_broadcast(&mean)
            .and_broadcast(&e.bias)
            .map_collect(|&x, &a, &m, &mu, &b| (a * x + m * mu + b).tanh());
        layers.push(std::mem::replace(&mut h, next));
    }
    layers.push(h);
    Ok(layers)
}

/// Applies the shared linear map to each layer's tokens and folds the result
/// into `neck_in_dim × 37 × 37`.
pub fn project_embeddings(layers: &[Array2<f32>], proj: &Linear) -> Result<Vec<Array3<f32>>> {
    if layers.len() != NUM_LAYERS {
        return Err(Error::Shape(format!("expected {NUM_LAYERS} encoder layers, got {}", layers.len())));
    }
    let dim = proj.weight.ncols();
    layers
        .iter()
        .map(|l| {
            if l.dim() != (GRID * GRID, proj.weight.nrows()) {
                return Err(Error::Shape(format!(
                    "layer tensor {:?}, expected {:?}",
                    l.dim(),
                    (GRID * GRID, proj.weight.nrows())
                )));
            }
            let y = l.dot(&proj.weight) + &proj.bias;
            Ok(y.reversed_axes()
                .as_standard_layout()
                .into_owned()
                .into_shape_with_order((dim, GRID, GRID))
                .expect("token count is 37²"))
        })
        .collect()
}

/// Per layer: 1×1 conv to the layer depth, bilinear upscale by its scale
/// factor, 3×3 conv at that resolution.
pub fn neck_forward(maps: &[Array3<f32>], spec: &NeckSpec, layers: &[NeckLayer]) -> Result<Vec<Array3<f32>>> {
    spec.validate()?;
    if maps.len() != NUM_LAYERS || layers.len() != NUM_LAYERS {
        return Err(Error::Shape(format!(
            "neck needs {NUM_LAYERS} maps and layers, got {} and {}",
            maps.len(),
            layers.len()
        )));
    }
    let mut out = Vec::with_capacity(NUM_LAYERS);
    for (i, (m, l)) in maps.iter().zip(layers).enumerate() {
        let d = spec.depths[i];
        if m.dim() != (spec.neck_in_dim, GRID, GRID)
            || l.reduce.weight.dim() != (d, spec.neck_in_dim, 1, 1)
            || l.refine.weight.dim() != (d, d, 3, 3)
        {
            return Err(Error::Shape(format!("neck layer {i} does not match depth {d}")));
        }
        let reduce = l.reduce.weight.index_axis(Axis(3), 0);
        let z = ops::conv1x1(m.view(), reduce.index_axis(Axis(2), 0), l.reduce.bias.view());
        let side = GRID * spec.scale_factors[i];
        out.push(ops::upsampled_conv3x3(z.view(), side, l.refine.weight.view(), l.refine.bias.view()));
    }
    Ok(out)
}

/// `fuse` conv over `[upsample(features)…, reflectance, transmittance]`
/// without materializing the upsampled stack; taps are mixed at each native
/// resolution and summed before upsampling.
fn fuse_hidden(features: &[Array3<f32>], walls: ArrayView3<f32>, fuse: &Conv) -> Array3<f32> {
    let hidden = fuse.weight.dim().0;
    let mut acc = Array3::<f32>::zeros((hidden, MODEL_SIDE, MODEL_SIDE));
    let mut groups: Vec<(usize, Array2<f32>)> = vec![];
    let mut offset = 0;
    for f in features {
        let d = f.dim().0;
        let mixed = ops::tap_mix(f.view(), fuse.weight.slice(s![.., offset..offset + d, .., ..]));
        offset += d;
        match groups.iter_mut().find(|(side, _)| *side == f.dim().1) {
            Some((_, g)) => *g += &mixed,
            None => groups.push((f.dim().1, mixed)),
        }
    }
    for (side, mixed) in &groups {
        ops::scatter_taps(mixed, *side, &mut acc);
    }
    let wall_w = fuse.weight.slice(s![.., offset.., .., ..]);
    acc += &ops::conv3x3(walls, wall_w, Some(fuse.bias.view()));
    acc
}

/// Fusion head: upsample all neck outputs to 518, concatenate with the wall
/// channels, 3×3 conv, ReLU, 3×3 conv to one logit, `160 · sigmoid`.
pub fn decode_head(
    features: &[Array3<f32>],
    reflectance: ArrayView2<f32>,
    transmittance: ArrayView2<f32>,
    fuse: &Conv,
    output: &Conv,
) -> Result<RadioMap> {
    let side = (MODEL_SIDE, MODEL_SIDE);
    if reflectance.dim() != side || transmittance.dim() != side {
        return Err(Error::Shape(format!("wall channels must be {MODEL_SIDE}×{MODEL_SIDE}")));
    }
    let depth: usize = features.iter().map(|f| f.dim().0).sum();
    let hidden = fuse.weight.dim().0;
    if fuse.weight.dim() != (hidden, depth + 2, 3, 3) || output.weight.dim() != (1, hidden, 3, 3) {
        return Err(Error::Shape(format!(
            "head weights {:?}/{:?} do not fit {depth} feature channels",
            fuse.weight.dim(),
            output.weight.dim()
        )));
    }
    if let Some(f) = features.iter().find(|f| f.dim().1 != f.dim().2 || f.dim().1 > MODEL_SIDE || f.dim().1 == 0) {
        return Err(Error::Shape(format!("feature map {:?} is not a square up to {MODEL_SIDE}", f.dim())));
    }
    let walls = ndarray::stack(Axis(0), &[reflectance, transmittance]).expect("equal shapes");
    let mut h = fuse_hidden(features, walls.view(), fuse);
    h.mapv_inplace(|v| v.max(0.0));
    let logits = ops::conv3x3(h.view(), output.weight.view(), Some(output.bias.view()));
    let values = logits
        .index_axis(Axis(0), 0)
        .mapv(|z| PATHLOSS_CEILING_DB / (1.0 + (-f64::from(z).clamp(-LOGIT_LIMIT, LOGIT_LIMIT)).exp()));
    RadioMap::new(values)
}

/// Full stub forward on a normalized, padded 518×518 stack whose channels
/// are those of `task`.
pub fn forward(stack: &FeatureStack, weights: &StubWeights, task: u8) -> Result<RadioMap> {
    let kinds = ChannelKind::for_task(task)?;
    if weights.task != task {
        return Err(Error::Argument(format!("weights are for task {}, not task {task}", weights.task)));
    }
    if stack.kinds() != kinds {
        return Err(Error::Argument(format!(
            "task {task} expects {} channels ({}), stack has {}",
            kinds.len(),
            kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join(", "),
            stack.len()
        )));
    }
    if stack.dim() != Some((MODEL_SIDE, MODEL_SIDE)) {
        return Err(Error::Shape(format!("stub input must be {MODEL_SIDE}×{MODEL_SIDE}, got {:?}", stack.dim())));
    }
    let spec = NeckSpec::for_task(task)?;
    let input = stack.to_raster().mapv(|v| v as f32);
    let image = ops::conv3x3(input.view(), weights.input_conv.weight.view(), Some(weights.input_conv.bias.view()));
    let tokens = patchify(image.view())?;
    let layers = encode(tokens.view(), weights)?;
    let maps = project_embeddings(&layers, &weights.projection)?;
    let features = neck_forward(&maps, &spec, &weights.neck)?;
    decode_head(
        &features,
        input.index_axis(Axis(0), 0),
        input.index_axis(Axis(0), 1),
        &weights.fuse,
        &weights.output,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random3(c: usize, h: usize, w: usize, seed: u64) -> Array3<f32> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array3::from_shape_simple_fn((c, h, w), || rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn patch_grid() {
        let tokens = patchify(Array3::<f32>::zeros((3, 518, 518)).view()).unwrap();
        assert_eq!(tokens.dim(), (37 * 37, 588));
        let err = patchify(Array3::<f32>::zeros((3, 504, 504)).view()).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
    }

    #[test]
    fn constant_image_gives_identical_patches() {
        let tokens = patchify(Array3::from_elem((2, 518, 518), 0.3f32).view()).unwrap();
        let first = tokens.row(0).to_owned();
        assert!(tokens.outer_iter().all(|r| r == first));
    }

    #[test]
    fn patch_layout() {
        let img = Array3::from_shape_fn((1, 518, 518), |(_, r, c)| (r * 1000 + c) as f32);
        let t = patchify(img.view()).unwrap();
        // patch (1, 2), pixel (3, 4) within it
        assert_eq!(t[[GRID + 2, 3 * 14 + 4]], ((14 + 3) * 1000 + 28 + 4) as f32);
    }

    #[test]
    fn neck_specs() {
        let t1 = NeckSpec::for_task(1).unwrap();
        assert_eq!(t1.depths[0], 16);
        assert_eq!(t1.neck_in_dim, 256);
        let mut sides = t1.output_sides().to_vec();
        sides.dedup();
        assert_eq!(sides, [518, 296, 148, 74, 37]);
        let t2 = NeckSpec::for_task(2).unwrap();
        assert_eq!(t2.neck_in_dim, 512);
        assert_eq!(t2.depths[12..], [512, 512]);
        assert!(NeckSpec::for_task(0).is_err());
    }

    #[test]
    fn projection_is_affine() {
        let w = StubWeights::init(1, 1).unwrap();
        let layers: Vec<Array2<f32>> = (0..14).map(|i| random3(1, 1369, 768, i).index_axis_move(Axis(0), 0)).collect();
        let doubled: Vec<Array2<f32>> = layers.iter().map(|l| l * 2.0).collect();
        let zeros = vec![Array2::<f32>::zeros((1369, 768)); 14];
        let f1 = project_embeddings(&layers, &w.projection).unwrap();
        let f2 = project_embeddings(&doubled, &w.projection).unwrap();
        let f0 = project_embeddings(&zeros, &w.projection).unwrap();
        for ((a, b), z) in f1.iter().zip(&f2).zip(&f0) {
            assert_eq!(a.dim(), (256, 37, 37));
            for ((&x, &y), &b0) in a.iter().zip(b).zip(z) {
                assert!((y - (2.0 * x - b0)).abs() < 1e-4);
            }
        }
        assert_eq!(f0[0][[5, 0, 0]], w.projection.bias[5]);
        assert!(matches!(project_embeddings(&layers[..13], &w.projection), Err(Error::Shape(_))));
    }

    #[test]
    fn fused_head_matches_materialized_concat() {
        let features = vec![random3(2, 37, 37, 1), random3(1, 74, 74, 2), random3(2, 37, 37, 3)];
        let walls = random3(2, 518, 518, 4);
        let mut fuse_w = random3(3 * 7, 3, 3, 5).into_shape_with_order((3, 7, 3, 3)).unwrap();
        fuse_w.mapv_inplace(|v| v * 0.3);
        let fuse = Conv { weight: fuse_w, bias: ndarray::arr1(&[0.1, 0.2, -0.1]) };
        let got = fuse_hidden(&features, walls.view(), &fuse);
        let mut planes = vec![];
        for f in &features {
            planes.push(ops::upsample_channels(f.view(), 518, 518));
        }
        planes.push(walls.clone());
        let views: Vec<_> = planes.iter().map(|p| p.view()).collect();
        let cat = ndarray::concatenate(Axis(0), &views).unwrap();
        let want = ops::conv3x3(cat.view(), fuse.weight.view(), Some(fuse.bias.view()));
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() < 1e-4, "{g} vs {w}");
        }
    }

    #[test]
    fn zero_logits_give_eighty() {
        let features = vec![random3(2, 37, 37, 1)];
        let fuse = Conv { weight: random3(4 * 4, 3, 3, 2).into_shape_with_order((4, 4, 3, 3)).unwrap(), bias: ndarray::Array1::zeros(4) };
        let output = Conv { weight: ndarray::Array4::zeros((1, 4, 3, 3)), bias: ndarray::Array1::zeros(1) };
        let walls = Array2::<f32>::ones((518, 518));
        let map = decode_head(&features, walls.view(), walls.view(), &fuse, &output).unwrap();
        assert_eq!(map.dim(), (518, 518));
        assert!(map.values().iter().all(|&v| v == 80.0));
    }

    #[test]
    fn saturated_logits_stay_inside_range_after_narrowing() {
        let features = vec![random3(1, 37, 37, 1)];
        let fuse = Conv { weight: ndarray::Array4::zeros((1, 3, 3, 3)), bias: ndarray::arr1(&[1.0]) };
        for b in [1e6f32, -1e6] {
            let output = Conv { weight: ndarray::Array4::from_elem((1, 1, 3, 3), b), bias: ndarray::arr1(&[b]) };
            let walls = Array2::<f32>::zeros((518, 518));
            let map = decode_head(&features, walls.view(), walls.view(), &fuse, &output).unwrap();
            assert!(map.values().iter().all(|&v| v > 0.0 && v < 160.0 && (v as f32) < 160.0 && (v as f32) > 0.0));
        }
    }

    #[test]
    fn head_rejects_mismatched_depth() {
        let features = vec![random3(3, 37, 37, 1)];
        let fuse = Conv { weight: ndarray::Array4::zeros((2, 4, 3, 3)), bias: ndarray::Array1::zeros(2) };
        let output = Conv { weight: ndarray::Array4::zeros((1, 2, 3, 3)), bias: ndarray::Array1::zeros(1) };
        let walls = Array2::<f32>::zeros((518, 518));
        assert!(matches!(
            decode_head(&features, walls.view(), walls.view(), &fuse, &output),
            Err(Error::Shape(_))
        ));
    }
}
