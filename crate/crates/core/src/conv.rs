//! 2-D convolution (cross-correlation, no kernel flip), forward and backward.
//!
//! The kernels work row by row: every kernel tap becomes a shifted
//! multiply-add over a contiguous row span, which the compiler vectorises.
//! Work is split across threads by output row (forward), by `(out, in)`
//! kernel pair (weight gradient) and by input row (input gradient). Each
//! output element is accumulated by exactly one task in a fixed order, so
//! the result does not depend on the number of threads.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::tensor::{ConvLayer, PaddingMode, Real, Tensor};

/// Gradients of a convolution with respect to its input and parameters.
#[derive(Clone, Debug)]
pub struct ConvGrads<T = f32> {
    pub input: Tensor<T>,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

#[inline]
fn axpy<T: Real>(acc: &mut [T], a: T, x: &[T]) {
    for (yi, &xi) in acc.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

const LANES: usize = 8;

/// Dot product with a fixed eight-lane accumulation order.
#[inline]
pub(crate) fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [T::zero(); LANES];
    let ca = a.chunks_exact(LANES);
    let cb = b.chunks_exact(LANES);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (xa, xb) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += xa[l] * xb[l];
        }
    }
    let mut tail = T::zero();
    for (&x, &y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

#[inline]
fn lane_sum<T: Real>(a: &[T]) -> T {
    let mut acc = [T::zero(); LANES];
    let chunks = a.chunks_exact(LANES);
    let rest = chunks.remainder();
    for xs in chunks {
        for l in 0..LANES {
            acc[l] += xs[l];
        }
    }
    let tail = rest.iter().fold(T::zero(), |s, &v| s + v);
    ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7])) + tail
}

/// Output columns `x` for which `x + kx - pad` falls inside `[0, width)`.
#[inline]
fn tap_span(kx: usize, pad: usize, width: usize, out_width: usize) -> (usize, usize) {
    let x0 = pad.saturating_sub(kx);
    let x1 = out_width.min((width + pad).saturating_sub(kx));
    (x0, x1.max(x0))
}

fn check_input<T: Real>(input: &Tensor<T>, layer: &ConvLayer<T>) -> Result<()> {
    if input.channels() != layer.in_channels() {
        return Err(Error::shape(format!(
            "conv expects {} input channels, got {}",
            layer.in_channels(),
            input.channels()
        )));
    }
    Ok(())
}

// Rows per rayon task; keeps tiny patches from drowning in scheduling.
fn min_rows(width: usize) -> usize {
    (2048 / width.max(1)).max(1)
}

pub fn conv2d_forward<T: Real>(
    input: &Tensor<T>,
    layer: &ConvLayer<T>,
    pad: PaddingMode,
) -> Result<Tensor<T>> {
    check_input(input, layer)?;
    let k = layer.kernel_size();
    let p = pad.leading(k);
    let (h, w) = (input.height(), input.width());
    let (ho, wo) = pad.output_dims(h, w, k)?;
    let oc = layer.out_channels();
    let mut out = vec![T::zero(); oc * ho * wo];
    if out.is_empty() {
        return Tensor::new(oc, ho, wo, out);
    }
    let ic = layer.in_channels();

    out.par_chunks_mut(wo)
        .enumerate()
        .with_min_len(min_rows(wo))
        .for_each(|(r, out_row)| {
            let (o, y) = (r / ho, r % ho);
            out_row.fill(layer.biases[o]);
            for c in 0..ic {
                let ker = layer.kernel(o, c);
                for ky in 0..k {
                    let iy = y + ky;
                    if iy < p || iy - p >= h {
                        continue;
                    }
                    let in_row = input.row(c, iy - p);
                    for kx in 0..k {
                        let (x0, x1) = tap_span(kx, p, w, wo);
                        if x0 == x1 {
                            continue;
                        }
                        let s0 = x0 + kx - p;
                        axpy(
                            &mut out_row[x0..x1],
                            ker[ky * k + kx],
                            &in_row[s0..s0 + (x1 - x0)],
                        );
                    }
                }
            }
        });
    Tensor::new(oc, ho, wo, out)
}

/// Exact gradients of [`conv2d_forward`] given the gradient of its output.
pub fn conv2d_backward<T: Real>(
    input: &Tensor<T>,
    layer: &ConvLayer<T>,
    pad: PaddingMode,
    grad_output: &Tensor<T>,
) -> Result<ConvGrads<T>> {
    let (weights, biases) = conv2d_param_grads(input, layer, pad, grad_output)?;
    let input = conv2d_input_grad(input, layer, pad, grad_output)?;
    Ok(ConvGrads {
        input,
        weights,
        biases,
    })
}

fn check_grad_output<T: Real>(
    input: &Tensor<T>,
    layer: &ConvLayer<T>,
    pad: PaddingMode,
    grad_output: &Tensor<T>,
) -> Result<(usize, usize)> {
    check_input(input, layer)?;
    let k = layer.kernel_size();
    let (ho, wo) = pad.output_dims(input.height(), input.width(), k)?;
    if grad_output.shape() != (layer.out_channels(), ho, wo) {
        return Err(Error::shape(format!(
            "grad_output {:?} does not match forward output {:?}",
            grad_output.shape(),
            (layer.out_channels(), ho, wo)
        )));
    }
    Ok((ho, wo))
}

/// Weight and bias gradients only.
pub fn conv2d_param_grads<T: Real>(
    input: &Tensor<T>,
    layer: &ConvLayer<T>,
    pad: PaddingMode,
    grad_output: &Tensor<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let (ho, wo) = check_grad_output(input, layer, pad, grad_output)?;
    let k = layer.kernel_size();
    let p = pad.leading(k);
    let (h, w) = (input.height(), input.width());
    let (oc, ic) = (layer.out_channels(), layer.in_channels());

    let biases: Vec<T> = (0..oc)
        .into_par_iter()
        .map(|o| lane_sum(grad_output.channel(o)))
        .collect();

    let mut weights = vec![T::zero(); oc * ic * k * k];
    weights
        .par_chunks_mut(k * k)
        .enumerate()
        .for_each(|(pair, taps)| {
            let (o, c) = (pair / ic, pair % ic);
            for y in 0..ho {
                let g_row = grad_output.row(o, y);
                for ky in 0..k {
                    let iy = y + ky;
                    if iy < p || iy - p >= h {
                        continue;
                    }
                    let in_row = input.row(c, iy - p);
                    for kx in 0..k {
                        let (x0, x1) = tap_span(kx, p, w, wo);
                        if x0 == x1 {
                            continue;
                        }
                        let s0 = x0 + kx - p;
                        taps[ky * k + kx] +=
                            dot(&g_row[x0..x1], &in_row[s0..s0 + (x1 - x0)]);
                    }
                }
            }
        });
    Ok((weights, biases))
}

/// Input gradient only.
pub fn conv2d_input_grad<T: Real>(
    input: &Tensor<T>,
    layer: &ConvLayer<T>,
    pad: PaddingMode,
    grad_output: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (ho, wo) = check_grad_output(input, layer, pad, grad_output)?;
    let k = layer.kernel_size();
    let p = pad.leading(k);
    let (h, w) = (input.height(), input.width());
    let (oc, ic) = (layer.out_channels(), layer.in_channels());
    let mut grad = vec![T::zero(); ic * h * w];
    if grad.is_empty() {
        return Tensor::new(ic, h, w, grad);
    }

    grad.par_chunks_mut(w)
        .enumerate()
        .with_min_len(min_rows(w))
        .for_each(|(r, row)| {
            let (c, iy) = (r / h, r % h);
            for o in 0..oc {
                let ker = layer.kernel(o, c);
                for ky in 0..k {
                    // forward read input row iy from output row y = iy + p - ky
                    let yp = iy + p;
                    if yp < ky || yp - ky >= ho {
                        continue;
                    }
                    let g_row = grad_output.row(o, yp - ky);
                    for kx in 0..k {
                        let ix0 = kx.saturating_sub(p);
                        let ix1 = w.min((wo + kx).saturating_sub(p));
                        if ix0 >= ix1 {
                            continue;
                        }
                        let g0 = ix0 + p - kx;
                        axpy(
                            &mut row[ix0..ix1],
                            ker[ky * k + kx],
                            &g_row[g0..g0 + (ix1 - ix0)],
                        );
                    }
                }
            }
        });
    Tensor::new(ic, h, w, grad)
}
