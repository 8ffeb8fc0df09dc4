//! f32 tensor kernels for the stub: convolutions via im2col + gemm, bilinear
//! upsampling. Tensors are channel-major `C×H×W`.

use ndarray::{s, Array2, Array3, ArrayView1, ArrayView2, ArrayView3, ArrayView4, Axis};
use rayon::prelude::*;

use crate::raster::axis_taps;

/// Upper bound on im2col buffer entries per row block.
const IM2COL_BUDGET: usize = 1 << 22;

/// 3×3 convolution, stride 1, zero padding 1. `weight` is `O×C×3×3`.
pub(crate) fn conv3x3(input: ArrayView3<f32>, weight: ArrayView4<f32>, bias: Option<ArrayView1<f32>>) -> Array3<f32> {
    let (c, h, w) = input.dim();
    let o = weight.dim().0;
    debug_assert_eq!(weight.dim(), (o, c, 3, 3));
    let k = c * 9;
    let wmat = weight.to_shape((o, k)).expect("contiguous weight").t().to_owned();
    let block = (IM2COL_BUDGET / (w * k)).clamp(1, h);
    let starts: Vec<usize> = (0..h).step_by(block).collect();
    let blocks: Vec<Array2<f32>> = starts
        .par_iter()
        .map(|&r0| {
            let rows = block.min(h - r0);
            let mut cols = Array2::<f32>::zeros((rows * w, k));
            for ci in 0..c {
                let plane = input.index_axis(Axis(0), ci);
                for ky in 0..3 {
                    for kx in 0..3 {
                        let kk = ci * 9 + ky * 3 + kx;
                        for dy in 0..rows {
                            let Some(sy) = (r0 + dy + ky).checked_sub(1).filter(|&y| y < h) else {
                                continue;
                            };
                            let src = plane.row(sy);
                            for x in 0..w {
                                if let Some(sx) = (x + kx).checked_sub(1).filter(|&v| v < w) {
                                    cols[[dy * w + x, kk]] = src[sx];
                                }
                            }
                        }
                    }
                }
            }
            cols.dot(&wmat)
        })
        .collect();
    let mut out = Array3::<f32>::zeros((o, h, w));
    for (&r0, res) in starts.iter().zip(&blocks) {
        let rows = res.nrows() / w;
        for oi in 0..o {
            let b = bias.map_or(0.0, |b| b[oi]);
            let mut dst = out.slice_mut(s![oi, r0..r0 + rows, ..]);
            for (p, v) in dst.iter_mut().enumerate() {
                *v = res[[p, oi]] + b;
            }
        }
    }
    out
}

/// 1×1 convolution. `weight` is `O×C` (kernel axes dropped).
pub(crate) fn conv1x1(input: ArrayView3<f32>, weight: ArrayView2<f32>, bias: ArrayView1<f32>) -> Array3<f32> {
    let (c, h, w) = input.dim();
    let flat = input.to_shape((c, h * w)).expect("reshape");
    let mut out = weight.dot(&flat);
    out += &bias.insert_axis(Axis(1));
    out.into_shape_with_order((weight.nrows(), h, w)).expect("reshape")
}

/// Bilinear resize of one plane, half-pixel centers, edge clamped.
pub(crate) fn upsample(plane: ArrayView2<f32>, height: usize, width: usize) -> Array2<f32> {
    let (sh, sw) = plane.dim();
    if (sh, sw) == (height, width) {
        return plane.to_owned();
    }
    let ct = axis_taps(sw, width);
    let rt = axis_taps(sh, height);
    let mut tmp = Array2::<f32>::zeros((sh, width));
    for (src, mut dst) in plane.rows().into_iter().zip(tmp.rows_mut()) {
        for (d, t) in dst.iter_mut().zip(&ct) {
            let (a, b) = (src[t.i0], src[t.i1]);
            *d = a + t.t as f32 * (b - a);
        }
    }
    let mut out = Array2::<f32>::zeros((height, width));
    for (mut dst, t) in out.rows_mut().into_iter().zip(&rt) {
        let (a, b) = (tmp.row(t.i0), tmp.row(t.i1));
        let tt = t.t as f32;
        for ((d, &x), &y) in dst.iter_mut().zip(a).zip(b) {
            *d = x + tt * (y - x);
        }
    }
    out
}

/// Per-channel [`upsample`], parallel over channels.
#[cfg(test)]
pub(crate) fn upsample_channels(input: ArrayView3<f32>, height: usize, width: usize) -> Array3<f32> {
    let planes: Vec<Array2<f32>> = input
        .outer_iter()
        .into_par_iter()
        .map(|p| upsample(p, height, width))
        .collect();
    let views: Vec<ArrayView2<f32>> = planes.iter().map(|p| p.view()).collect();
    ndarray::stack(Axis(0), &views).expect("equal plane shapes")
}

/// Mixes channels of `z` (`C×h×w`) with each 3×3 tap of `weight`
/// (`O×C×3×3`). Row `k·O + o` of the result is tap `k`, output `o`.
pub(crate) fn tap_mix(z: ArrayView3<f32>, weight: ArrayView4<f32>) -> Array2<f32> {
    let (c, h, w) = z.dim();
    let o = weight.dim().0;
    let wmat = weight.permuted_axes([2, 3, 0, 1]).as_standard_layout().into_owned();
    let wmat = wmat.into_shape_with_order((9 * o, c)).expect("reshape");
    wmat.dot(&z.to_shape((c, h * w)).expect("reshape"))
}

/// Upsamples every tap plane from [`tap_mix`] to `acc`'s side and adds it at
/// its tap offset, completing a zero-padded 3×3 convolution of the
/// upsampled input. Exact because per-channel bilinear resampling commutes
/// with channel mixing.
pub(crate) fn scatter_taps(mixed: &Array2<f32>, side: usize, acc: &mut Array3<f32>) {
    let (o, h, w) = acc.dim();
    let taps = mixed.view().into_shape_with_order((9, o, side, side)).expect("reshape");
    acc.outer_iter_mut().into_par_iter().enumerate().for_each(|(oi, mut dst)| {
        for k in 0..9 {
            let up = upsample(taps.slice(s![k, oi, .., ..]), h, w);
            add_shifted(&mut dst, up.view(), k / 3, k % 3);
        }
    });
}

/// `upsample` to `side` followed by a zero-padded 3×3 conv, computed through
/// [`tap_mix`] and [`scatter_taps`].
pub(crate) fn upsampled_conv3x3(
    z: ArrayView3<f32>,
    side: usize,
    weight: ArrayView4<f32>,
    bias: ArrayView1<f32>,
) -> Array3<f32> {
    let mixed = tap_mix(z, weight);
    let mut out = Array3::<f32>::zeros((weight.dim().0, side, side));
    scatter_taps(&mixed, z.dim().1, &mut out);
    out += &bias.insert_axis(Axis(1)).insert_axis(Axis(2));
    out
}

/// `dst[y, x] += src[y + dy - 1, x + dx - 1]`, zero outside `src`.
pub(crate) fn add_shifted(dst: &mut ndarray::ArrayViewMut2<f32>, src: ArrayView2<f32>, dy: usize, dx: usize) {
    let (h, w) = src.dim();
    let ys = dy.saturating_sub(1)..h.min(h + dy - 1);
    let xs = dx.saturating_sub(1)..w.min(w + dx - 1);
    let (oy, ox) = (ys.start + 1 - dy, xs.start + 1 - dx);
    let n = (ys.len(), xs.len());
    let mut d = dst.slice_mut(s![oy..oy + n.0, ox..ox + n.1]);
    d += &src.slice(s![ys, xs]);
}
