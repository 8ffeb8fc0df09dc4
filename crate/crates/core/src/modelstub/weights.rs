//! Stub parameters: seeded initialization and per-tensor grid-file storage.

use std::path::{Path, PathBuf};

use ndarray::{Array1, Array2, Array4, ArrayD, ArrayViewD, ArrayViewMutD, IxDyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{NeckSpec, EMBED_DIM, HEAD_HIDDEN, IMAGE_CHANNELS, NUM_LAYERS, PATCH};
use crate::error::{bail_arg, Error, Result};
use crate::features::ChannelKind;
use crate::gridfile;

#[derive(Clone, Debug, PartialEq)]
pub struct Conv {
    /// `out × in × k × k`
    pub weight: Array4<f32>,
    pub bias: Array1<f32>,
}

impl Conv {
    fn zeros(out: usize, inp: usize, k: usize) -> Self {
        Self {
            weight: Array4::zeros((out, inp, k, k)),
            bias: Array1::zeros(out),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Linear {
    /// `in × out`
    pub weight: Array2<f32>,
    pub bias: Array1<f32>,
}

impl Linear {
    fn zeros(inp: usize, out: usize) -> Self {
        Self {
            weight: Array2::zeros((inp, out)),
            bias: Array1::zeros(out),
        }
    }
}

/// One elementwise stub-encoder block:
/// `h' = tanh(scale * h + mix * mean_tokens(h) + bias)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EncoderLayer {
    pub scale: Array1<f32>,
    pub mix: Array1<f32>,
    pub bias: Array1<f32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NeckLayer {
    /// 1×1, `neck_in_dim → depth`
    pub reduce: Conv,
    /// 3×3, `depth → depth`
    pub refine: Conv,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StubWeights {
    pub task: u8,
    /// `None` for weights loaded without a recorded seed.
    pub seed: Option<u64>,
    /// 3×3, task channels → 3
    pub input_conv: Conv,
    /// `3·14·14 → 768`
    pub patch_embed: Linear,
    /// Layers 1..14; layer 0 is the patch embedding.
    pub encoder: Vec<EncoderLayer>,
    /// Shared across layers, `768 → neck_in_dim`.
    pub projection: Linear,
    pub neck: Vec<NeckLayer>,
    /// 3×3 over the concatenated neck outputs followed by reflectance and
    /// transmittance.
    pub fuse: Conv,
    /// 3×3, hidden → 1 logit
    pub output: Conv,
}

impl StubWeights {
    /// All-zero parameters with the shapes for `task`.
    pub fn zeros(task: u8) -> Result<Self> {
        let spec = NeckSpec::for_task(task)?;
        let in_ch = ChannelKind::for_task(task)?.len();
        let vec = || Array1::<f32>::zeros(EMBED_DIM);
        Ok(Self {
            task,
            seed: None,
            input_conv: Conv::zeros(IMAGE_CHANNELS, in_ch, 3),
            patch_embed: Linear::zeros(IMAGE_CHANNELS * PATCH * PATCH, EMBED_DIM),
            encoder: (1..NUM_LAYERS)
                .map(|_| EncoderLayer { scale: vec(), mix: vec(), bias: vec() })
                .collect(),
            projection: Linear::zeros(EMBED_DIM, spec.neck_in_dim),
            neck: spec
                .depths
                .iter()
                .map(|&d| NeckLayer {
                    reduce: Conv::zeros(d, spec.neck_in_dim, 1),
                    refine: Conv::zeros(d, d, 3),
                })
                .collect(),
            fuse: Conv::zeros(HEAD_HIDDEN, spec.depths.iter().sum::<usize>() + 2, 3),
            output: Conv::zeros(1, HEAD_HIDDEN, 3),
        })
    }

    /// Seeded uniform initialization; weights get `±sqrt(3 / fan_in)`, biases
    /// `±0.05`. Each tensor draws from its own ChaCha stream.
    pub fn init(task: u8, seed: u64) -> Result<Self> {
        let mut w = Self::zeros(task)?;
        w.seed = Some(seed);
        for (stream, (name, mut t)) in w.tensors_mut().into_iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(stream as u64);
            let shape = t.shape().to_vec();
            let (lo, hi) = if name.ends_with(".scale") {
                (0.5, 1.0)
            } else if name.ends_with(".mix") {
                (-0.5, 0.5)
            } else if name.ends_with(".bias") {
                (-0.05, 0.05)
            } else {
                let fan_in: usize = match shape.len() {
                    4 => shape[1..].iter().product(),
                    _ => shape[0],
                };
                let a = (3.0 / fan_in as f64).sqrt() as f32;
                (-a, a)
            };
            t.mapv_inplace(|_| rng.gen_range(lo..hi));
        }
        Ok(w)
    }

    /// Named views in a fixed order.
    pub fn tensors(&self) -> Vec<(String, ArrayViewD<'_, f32>)> {
        let mut out = vec![];
        fn conv<'a>(out: &mut Vec<(String, ArrayViewD<'a, f32>)>, p: String, c: &'a Conv) {
            out.push((format!("{p}.weight"), c.weight.view().into_dyn()));
            out.push((format!("{p}.bias"), c.bias.view().into_dyn()));
        }
        conv(&mut out, "input_conv".into(), &self.input_conv);
        out.push(("patch_embed.weight".into(), self.patch_embed.weight.view().into_dyn()));
        out.push(("patch_embed.bias".into(), self.patch_embed.bias.view().into_dyn()));
        for (i, e) in self.encoder.iter().enumerate() {
            let l = i + 1;
            out.push((format!("encoder.{l}.scale"), e.scale.view().into_dyn()));
            out.push((format!("encoder.{l}.mix"), e.mix.view().into_dyn()));
            out.push((format!("encoder.{l}.bias"), e.bias.view().into_dyn()));
        }
        out.push(("projection.weight".into(), self.projection.weight.view().into_dyn()));
        out.push(("projection.bias".into(), self.projection.bias.view().into_dyn()));
        for (i, n) in self.neck.iter().enumerate() {
            conv(&mut out, format!("neck.{i}.reduce"), &n.reduce);
            conv(&mut out, format!("neck.{i}.refine"), &n.refine);
        }
        conv(&mut out, "fuse".into(), &self.fuse);
        conv(&mut out, "output".into(), &self.output);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, ArrayViewMutD<'_, f32>)> {
        let mut out = vec![];
        fn conv<'a>(out: &mut Vec<(String, ArrayViewMutD<'a, f32>)>, p: &str, c: &'a mut Conv) {
            out.push((format!("{p}.weight"), c.weight.view_mut().into_dyn()));
            out.push((format!("{p}.bias"), c.bias.view_mut().into_dyn()));
        }
        conv(&mut out, "input_conv", &mut self.input_conv);
        out.push(("patch_embed.weight".into(), self.patch_embed.weight.view_mut().into_dyn()));
        out.push(("patch_embed.bias".into(), self.patch_embed.bias.view_mut().into_dyn()));
        for (i, e) in self.encoder.iter_mut().enumerate() {
            let l = i + 1;
            out.push((format!("encoder.{l}.scale"), e.scale.view_mut().into_dyn()));
            out.push((format!("encoder.{l}.mix"), e.mix.view_mut().into_dyn()));
            out.push((format!("encoder.{l}.bias"), e.bias.view_mut().into_dyn()));
        }
        out.push(("projection.weight".into(), self.projection.weight.view_mut().into_dyn()));
        out.push(("projection.bias".into(), self.projection.bias.view_mut().into_dyn()));
        for (i, n) in self.neck.iter_mut().enumerate() {
            conv(&mut out, &format!("neck.{i}.reduce"), &mut n.reduce);
            conv(&mut out, &format!("neck.{i}.refine"), &mut n.refine);
        }
        conv(&mut out, "fuse", &mut self.fuse);
        conv(&mut out, "output", &mut self.output);
        out
    }

    /// Checks every tensor is finite.
    pub fn validate(&self) -> Result<()> {
        for (name, t) in self.tensors() {
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::Data(format!("weight tensor {name} has non-finite values")));
            }
        }
        Ok(())
    }

    /// Writes one grid file per tensor into `dir` plus `manifest.json`;
    /// returns the manifest path.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let mut entries = vec![];
        for (name, t) in self.tensors() {
            let file = format!("{name}.rmg");
            let raster = t
                .mapv(f64::from)
                .into_shape_with_order(grid_shape(t.shape()))
                .expect("element count preserved");
            gridfile::write_grid_file(&raster, dir.join(&file))?;
            entries.push(TensorEntry { name, file, shape: t.shape().to_vec() });
        }
        let manifest = Manifest {
            format: gridfile::FORMAT_VERSION.into(),
            task: self.task,
            seed: self.seed,
            tensors: entries,
        };
        let path = dir.join(MANIFEST_NAME);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Loads weights from a manifest written by [`StubWeights::save`] (or a
    /// directory containing one). Every tensor must be present with the
    /// shape the manifest's task requires.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut path = path.as_ref().to_path_buf();
        if path.is_dir() {
            path.push(MANIFEST_NAME);
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))?;
        if manifest.format != gridfile::FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported weight format {:?}", manifest.format)));
        }
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut w = Self::zeros(manifest.task)?;
        w.seed = manifest.seed;
        for (name, mut t) in w.tensors_mut() {
            let entry = manifest
                .tensors
                .iter()
                .find(|e| e.name == name)
                .ok_or_else(|| Error::Data(format!("weight manifest lacks tensor {name}")))?;
            if entry.shape != t.shape() {
                return Err(Error::Data(format!(
                    "tensor {name}: shape {:?}, expected {:?}",
                    entry.shape,
                    t.shape()
                )));
            }
            let raster = gridfile::read_grid_file(base.join(&entry.file))?;
            if raster.len() != t.len() {
                return Err(Error::Length { expected: t.len(), found: raster.len() });
            }
            let data = ArrayD::from_shape_vec(IxDyn(t.shape()), raster.iter().map(|&v| v as f32).collect())
                .expect("length checked");
            t.assign(&data);
        }
        if w.tensors().len() != manifest.tensors.len() {
            bail_arg!("weight manifest has {} tensors, expected {}", manifest.tensors.len(), w.tensors().len());
        }
        Ok(w)
    }
}

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    task: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    file: String,
    shape: Vec<usize>,
}

/// Leading axes fold into channels; the last two become rows and columns.
fn grid_shape(shape: &[usize]) -> (usize, usize, usize) {
    match shape {
        [n] => (1, 1, *n),
        [r, c] => (1, *r, *c),
        [lead @ .., r, c] => (lead.iter().product(), *r, *c),
        [] => (1, 1, 1),
    }
}
