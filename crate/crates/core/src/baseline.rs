//! Classical resampling and joint filtering operators: nearest-neighbour
//! decimation, bicubic resizing, joint bilateral upsampling and the guided
//! filter. Window operations clamp sample coordinates to the image border.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{Real, Tensor};

/// Keeps the top-left sample of every `scale × scale` block.
pub fn nearest_downsample<T: Real>(img: &Tensor<T>, scale: usize) -> Result<Tensor<T>> {
    if scale == 0 || !img.height().is_multiple_of(scale) || !img.width().is_multiple_of(scale) {
        return Err(Error::InvalidArgument(format!(
            "{}x{} is not divisible by scale {scale}",
            img.height(),
            img.width()
        )));
    }
    let (h, w) = (img.height() / scale, img.width() / scale);
    Ok(Tensor::from_fn(img.channels(), h, w, |c, y, x| {
        img.get(c, y * scale, x * scale)
    }))
}

/// Replicates every sample into a `scale × scale` block.
pub fn nearest_upsample<T: Real>(img: &Tensor<T>, scale: usize) -> Result<Tensor<T>> {
    if scale == 0 {
        return Err(Error::InvalidArgument("scale must be positive".into()));
    }
    Ok(Tensor::from_fn(
        img.channels(),
        img.height() * scale,
        img.width() * scale,
        |c, y, x| img.get(c, y / scale, x / scale),
    ))
}

/// Keys cubic convolution kernel with `a = -0.5`.
pub fn cubic_weight(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Source taps and weights for each output coordinate along one axis.
fn cubic_taps(in_len: usize, out_len: usize) -> Vec<([usize; 4], [f64; 4])> {
    let scale = out_len as f64 / in_len as f64;
    let last = in_len as isize - 1;
    (0..out_len)
        .map(|d| {
            let src = (d as f64 + 0.5) / scale - 0.5;
            let base = src.floor();
            let frac = src - base;
            let mut idx = [0usize; 4];
            let mut wts = [0.0; 4];
            for k in 0..4 {
                let i = base as isize - 1 + k as isize;
                idx[k] = i.clamp(0, last) as usize;
                wts[k] = cubic_weight(frac - (k as f64 - 1.0));
            }
            (idx, wts)
        })
        .collect()
}

/// Separable bicubic resize to `out_h × out_w` (half-pixel centres,
/// `src = (dst + 0.5) / s - 0.5`, edge-clamped taps).
pub fn bicubic_resize<T: Real>(img: &Tensor<T>, out_h: usize, out_w: usize) -> Result<Tensor<T>> {
    if out_h == 0 || out_w == 0 || img.height() == 0 || img.width() == 0 {
        return Err(Error::InvalidArgument(format!(
            "cannot resize {}x{} to {out_h}x{out_w}",
            img.height(),
            img.width()
        )));
    }
    let (c, h) = (img.channels(), img.height());
    let xt = cubic_taps(img.width(), out_w);
    let yt = cubic_taps(h, out_h);

    // horizontal pass, in f64
    let mut tmp = vec![0.0f64; c * h * out_w];
    tmp.par_chunks_mut(out_w).enumerate().for_each(|(r, row)| {
        let src = img.row(r / h, r % h);
        for (o, (idx, wts)) in row.iter_mut().zip(&xt) {
            *o = (0..4).map(|k| wts[k] * src[idx[k]].as_f64()).sum();
        }
    });

    let mut out = vec![T::zero(); c * out_h * out_w];
    out.par_chunks_mut(out_w).enumerate().for_each(|(r, row)| {
        let (ch, y) = (r / out_h, r % out_h);
        let (idx, wts) = &yt[y];
        let plane = &tmp[ch * h * out_w..(ch + 1) * h * out_w];
        for (x, o) in row.iter_mut().enumerate() {
            let v: f64 = (0..4).map(|k| wts[k] * plane[idx[k] * out_w + x]).sum();
            *o = T::lit(v);
        }
    });
    Tensor::new(c, out_h, out_w, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JbuParams {
    /// Spatial Gaussian width, in guidance (high-resolution) pixels.
    pub sigma_spatial: f64,
    /// Range Gaussian width on the [0, 1] intensity scale.
    pub sigma_range: f64,
    /// Half-width of the support window, in low-resolution pixels.
    pub window_radius: usize,
}

impl JbuParams {
    pub fn for_scale(scale: usize) -> Self {
        JbuParams {
            sigma_spatial: 0.5 * scale as f64,
            sigma_range: 0.1,
            window_radius: 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.sigma_spatial > 0.0 && self.sigma_range > 0.0 && self.window_radius > 0) {
            return Err(Error::InvalidArgument(format!(
                "JBU parameters must be positive: {self:?}"
            )));
        }
        Ok(())
    }
}

/// Joint bilateral upsampling of `low` to the resolution of `guidance`.
///
/// Low-resolution sample `p` sits at guidance pixel `p · s` (the same
/// top-left convention as [`nearest_downsample`]). Output pixel `q` averages
/// the low-resolution samples in a `(2r + 1)²` window around `round(q / s)`,
/// weighted by a spatial Gaussian of `‖q − p · s‖` and a range Gaussian of the
/// Euclidean guidance distance `‖G(q) − G(p · s)‖`. Window coordinates past
/// the border are clamped when sampling.
pub fn joint_bilateral_upsample<T: Real>(
    low: &Tensor<T>,
    guidance: &Tensor<T>,
    params: &JbuParams,
) -> Result<Tensor<T>> {
    params.validate()?;
    let (lh, lw) = (low.height(), low.width());
    let (gh, gw) = (guidance.height(), guidance.width());
    if lh == 0 || lw == 0 || gh % lh != 0 || gw % lw != 0 || gh / lh != gw / lw {
        return Err(Error::InvalidArgument(format!(
            "guidance {gh}x{gw} is not an integer multiple of {lh}x{lw}"
        )));
    }
    let s = gh / lh;
    let r = params.window_radius as isize;
    let inv_s = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
    let inv_r = 1.0 / (2.0 * params.sigma_range * params.sigma_range);
    let gc = guidance.channels();
    let lc = low.channels();

    let mut out = vec![T::zero(); lc * gh * gw];
    let plane = gh * gw;
    let rows: Vec<Vec<f64>> = (0..gh)
        .into_par_iter()
        .map(|qy| {
            let mut row = vec![0.0f64; lc * gw];
            let mut acc = vec![0.0f64; lc];
            let cy = (qy as f64 / s as f64).round() as isize;
            for qx in 0..gw {
                let cx = (qx as f64 / s as f64).round() as isize;
                acc.iter_mut().for_each(|a| *a = 0.0);
                let mut norm = 0.0;
                for py in cy - r..=cy + r {
                    let sy = py.clamp(0, lh as isize - 1) as usize;
                    let dy = qy as f64 - (py * s as isize) as f64;
                    for px in cx - r..=cx + r {
                        let sx = px.clamp(0, lw as isize - 1) as usize;
                        let dx = qx as f64 - (px * s as isize) as f64;
                        let mut dg = 0.0;
                        for ch in 0..gc {
                            let d = guidance.get(ch, qy, qx).as_f64()
                                - guidance.get(ch, sy * s, sx * s).as_f64();
                            dg += d * d;
                        }
                        let wgt = (-(dx * dx + dy * dy) * inv_s - dg * inv_r).exp();
                        norm += wgt;
                        for (ch, a) in acc.iter_mut().enumerate() {
                            *a += wgt * low.get(ch, sy, sx).as_f64();
                        }
                    }
                }
                for (ch, a) in acc.iter().enumerate() {
                    row[ch * gw + qx] = if norm > 0.0 { a / norm } else { 0.0 };
                }
            }
            row
        })
        .collect();
    for (qy, row) in rows.into_iter().enumerate() {
        for ch in 0..lc {
            for qx in 0..gw {
                out[ch * plane + qy * gw + qx] = T::lit(row[ch * gw + qx]);
            }
        }
    }
    Tensor::new(lc, gh, gw, out)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GfParams {
    pub radius: usize,
    pub epsilon: f64,
}

impl GfParams {
    pub fn for_scale(scale: usize) -> Self {
        GfParams {
            radius: scale.max(1),
            epsilon: 1e-4,
        }
    }
}

/// Sum over the `(2r + 1)²` window around each pixel of a single plane,
/// with edge-clamped coordinates. Separable running sums.
pub fn box_sum(plane: &[f64], height: usize, width: usize, radius: usize) -> Vec<f64> {
    let r = radius as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;
    let mut horiz = vec![0.0; plane.len()];
    for y in 0..height {
        let src = &plane[y * width..(y + 1) * width];
        let dst = &mut horiz[y * width..(y + 1) * width];
        let mut s: f64 = (-r..=r).map(|dx| src[clamp(dx, width)]).sum();
        dst[0] = s;
        for x in 1..width {
            s += src[clamp(x as isize + r, width)] - src[clamp(x as isize - r - 1, width)];
            dst[x] = s;
        }
    }
    let mut out = vec![0.0; plane.len()];
    for x in 0..width {
        let at = |y: isize| horiz[clamp(y, height) * width + x];
        let mut s: f64 = (-r..=r).map(at).sum();
        out[x] = s;
        for y in 1..height {
            s += at(y as isize + r) - at(y as isize - r - 1);
            out[y * width + x] = s;
        }
    }
    out
}

/// Window mean with edge clamping; every window holds `(2r + 1)²` samples.
pub fn box_mean(plane: &[f64], height: usize, width: usize, radius: usize) -> Vec<f64> {
    let n = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    box_sum(plane, height, width, radius)
        .into_iter()
        .map(|v| v / n)
        .collect()
}

/// Gray-scale guided filter: per window `a = cov(G, T) / (var(G) + ε)`,
/// `b = mean(T) − a · mean(G)`, output `mean(a) · G + mean(b)`.
pub fn guided_filter<T: Real>(target: &Tensor<T>, guidance: &Tensor<T>, params: &GfParams) -> Result<Tensor<T>> {
    if target.channels() != 1 || guidance.channels() != 1 {
        return Err(Error::shape(format!(
            "guided filter works on single-channel images, got {} and {}",
            target.channels(),
            guidance.channels()
        )));
    }
    target.expect_same_shape(guidance, "guided filter")?;
    if !(params.epsilon > 0.0) || params.radius == 0 {
        return Err(Error::InvalidArgument(format!(
            "guided filter needs radius >= 1 and epsilon > 0: {params:?}"
        )));
    }
    let (h, w, r) = (target.height(), target.width(), params.radius);
    if h == 0 || w == 0 {
        return Ok(target.clone());
    }
    let p: Vec<f64> = target.data().iter().map(|v| v.as_f64()).collect();
    let g: Vec<f64> = guidance.data().iter().map(|v| v.as_f64()).collect();
    let gg: Vec<f64> = g.iter().map(|v| v * v).collect();
    let gp: Vec<f64> = g.iter().zip(&p).map(|(a, b)| a * b).collect();
    let mean_g = box_mean(&g, h, w, r);
    let mean_p = box_mean(&p, h, w, r);
    let corr_gg = box_mean(&gg, h, w, r);
    let corr_gp = box_mean(&gp, h, w, r);
    let mut a = vec![0.0; h * w];
    let mut b = vec![0.0; h * w];
    for i in 0..h * w {
        let var = corr_gg[i] - mean_g[i] * mean_g[i];
        let cov = corr_gp[i] - mean_g[i] * mean_p[i];
        a[i] = cov / (var + params.epsilon);
        b[i] = mean_p[i] - a[i] * mean_g[i];
    }
    let mean_a = box_mean(&a, h, w, r);
    let mean_b = box_mean(&b, h, w, r);
    let out = (0..h * w)
        .map(|i| T::lit(mean_a[i] * g[i] + mean_b[i]))
        .collect();
    Tensor::new(1, h, w, out)
}
