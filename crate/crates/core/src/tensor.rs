//! Dense `channels × height × width` tensors, convolution layer parameters
//! and the ReLU nonlinearity.
//!
//! Samples are stored channel-major, then row-major: the sample at
//! `(c, y, x)` lives at `(c * height + y) * width + x`. Every tensor, layer
//! and file format in the crate uses this single layout.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, MulAssign, SubAssign};

use num_traits::Float;

use crate::error::{Error, Result};

/// Sample type. Production paths run in `f32`; gradient verification uses `f64`.
pub trait Real:
    Float + Default + Debug + Display + Sum + AddAssign + SubAssign + MulAssign + Send + Sync + 'static
{
    fn lit(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f32 {
    #[inline]
    fn lit(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Real for f64 {
    #[inline]
    fn lit(v: f64) -> Self {
        v
    }
    #[inline]
    fn as_f64(self) -> f64 {
        self
    }
}

#[derive(Clone, PartialEq)]
pub struct Tensor<T = f32> {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<T>,
}

impl<T> Debug for Tensor<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "Tensor({}x{}x{})",
            self.channels, self.height, self.width
        )
    }
}

impl<T: Real> Tensor<T> {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != channels * height * width {
            return Err(Error::shape(format!(
                "{} samples cannot fill a {channels}x{height}x{width} tensor",
                data.len()
            )));
        }
        Ok(Tensor {
            channels,
            height,
            width,
            data,
        })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        Self::filled(channels, height, width, T::zero())
    }

    pub fn filled(channels: usize, height: usize, width: usize, value: T) -> Self {
        Tensor {
            channels,
            height,
            width,
            data: vec![value; channels * height * width],
        }
    }

    pub fn from_fn(
        channels: usize,
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize, usize) -> T,
    ) -> Self {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Tensor {
            channels,
            height,
            width,
            data,
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.channels, self.height, self.width)
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// `(channels, height, width)`
    #[inline]
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    #[inline]
    pub fn data(&self) -> &[T] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn index(&self, c: usize, y: usize, x: usize) -> usize {
        debug_assert!(c < self.channels && y < self.height && x < self.width);
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> T {
        self.data[self.index(c, y, x)]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, value: T) {
        let i = self.index(c, y, x);
        self.data[i] = value;
    }

    pub fn channel(&self, c: usize) -> &[T] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn row(&self, c: usize, y: usize) -> &[T] {
        let start = (c * self.height + y) * self.width;
        &self.data[start..start + self.width]
    }

    /// A single channel copied out as a `1 × H × W` tensor.
    pub fn channel_tensor(&self, c: usize) -> Tensor<T> {
        Tensor {
            channels: 1,
            height: self.height,
            width: self.width,
            data: self.channel(c).to_vec(),
        }
    }

    /// Channels `[start, start + count)`.
    pub fn crop_channels(&self, start: usize, count: usize) -> Result<Tensor<T>> {
        if start + count > self.channels {
            return Err(Error::shape(format!(
                "channels {start}..{} of {}",
                start + count,
                self.channels
            )));
        }
        let p = self.plane_len();
        Ok(Tensor {
            channels: count,
            height: self.height,
            width: self.width,
            data: self.data[start * p..(start + count) * p].to_vec(),
        })
    }

    /// Spatial sub-window of every channel.
    pub fn crop(&self, y0: usize, x0: usize, height: usize, width: usize) -> Result<Tensor<T>> {
        if y0 + height > self.height || x0 + width > self.width {
            return Err(Error::shape(format!(
                "crop {height}x{width} at ({y0},{x0}) exceeds {}x{}",
                self.height, self.width
            )));
        }
        let mut data = Vec::with_capacity(self.channels * height * width);
        for c in 0..self.channels {
            for y in y0..y0 + height {
                let row = self.row(c, y);
                data.extend_from_slice(&row[x0..x0 + width]);
            }
        }
        Ok(Tensor {
            channels: self.channels,
            height,
            width,
            data,
        })
    }

    /// Stacks tensors of equal spatial size along the channel axis, in order.
    pub fn concat_channels(parts: &[&Tensor<T>]) -> Result<Tensor<T>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::shape("cannot concatenate zero tensors"))?;
        let (h, w) = (first.height, first.width);
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        let mut channels = 0;
        for p in parts {
            if p.height != h || p.width != w {
                return Err(Error::shape(format!(
                    "cannot concatenate {}x{} with {h}x{w}",
                    p.height, p.width
                )));
            }
            data.extend_from_slice(&p.data);
            channels += p.channels;
        }
        Ok(Tensor {
            channels,
            height: h,
            width: w,
            data,
        })
    }

    /// Splits off channels `[0, at)` and `[at, channels)`.
    pub fn split_channels(&self, at: usize) -> Result<(Tensor<T>, Tensor<T>)> {
        if at > self.channels {
            return Err(Error::shape(format!(
                "split at channel {at} of {}",
                self.channels
            )));
        }
        let n = at * self.plane_len();
        Ok((
            Tensor {
                channels: at,
                height: self.height,
                width: self.width,
                data: self.data[..n].to_vec(),
            },
            Tensor {
                channels: self.channels - at,
                height: self.height,
                width: self.width,
                data: self.data[n..].to_vec(),
            },
        ))
    }

    /// Repeats a single-channel tensor `times` along the channel axis.
    pub fn replicate_channel(&self, times: usize) -> Result<Tensor<T>> {
        if self.channels != 1 {
            return Err(Error::shape(format!(
                "replicate needs 1 channel, got {}",
                self.channels
            )));
        }
        Ok(Tensor {
            channels: times,
            height: self.height,
            width: self.width,
            data: self.data.repeat(times),
        })
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Tensor<T> {
        Tensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self.data.iter().map(|v| U::lit(v.as_f64())).collect(),
        }
    }

    pub fn same_shape(&self, other: &Tensor<T>) -> bool {
        self.shape() == other.shape()
    }

    pub(crate) fn expect_same_shape(&self, other: &Tensor<T>, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{what}: {:?} vs {:?}",
                self.shape(),
                other.shape()
            )))
        }
    }

    pub fn add(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.expect_same_shape(other, "add")?;
        let mut out = self.clone();
        out.add_assign(other)?;
        Ok(out)
    }

    pub fn add_assign(&mut self, other: &Tensor<T>) -> Result<()> {
        self.expect_same_shape(other, "add")?;
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Tensor<T>) -> Result<Tensor<T>> {
        self.expect_same_shape(other, "sub")?;
        Ok(Tensor {
            channels: self.channels,
            height: self.height,
            width: self.width,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a - b)
                .collect(),
        })
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn min_max(&self) -> (T, T) {
        self.data.iter().fold(
            (T::infinity(), T::neg_infinity()),
            |(lo, hi), &v| (lo.min(v), hi.max(v)),
        )
    }

    pub fn max_abs_diff(&self, other: &Tensor<T>) -> Result<T> {
        self.expect_same_shape(other, "compare")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }
}

/// Border policy of a convolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PaddingMode {
    /// Zero padding so the output has the input's spatial size. For a kernel
    /// of size `k` the top/left padding is `(k - 1) / 2`.
    #[default]
    Same,
    /// No padding; the output shrinks by `k - 1` in each dimension.
    Valid,
}

impl PaddingMode {
    /// Leading padding for a kernel of size `k`.
    #[inline]
    pub fn leading(self, k: usize) -> usize {
        match self {
            PaddingMode::Same => (k - 1) / 2,
            PaddingMode::Valid => 0,
        }
    }

    pub fn output_dims(self, height: usize, width: usize, k: usize) -> Result<(usize, usize)> {
        match self {
            PaddingMode::Same => Ok((height, width)),
            PaddingMode::Valid => {
                if height < k || width < k {
                    Err(Error::shape(format!(
                        "{height}x{width} input is smaller than a {k}x{k} kernel"
                    )))
                } else {
                    Ok((height - k + 1, width - k + 1))
                }
            }
        }
    }
}

/// Weights and biases of one square convolution layer. Weights are ordered
/// `(out, in, row, col)`.
#[derive(Clone, PartialEq)]
pub struct ConvLayer<T = f32> {
    out_channels: usize,
    in_channels: usize,
    kernel_size: usize,
    pub weights: Vec<T>,
    pub biases: Vec<T>,
}

impl<T> Debug for ConvLayer<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ConvLayer({}->{} @{}x{})",
            self.in_channels, self.out_channels, self.kernel_size, self.kernel_size
        )
    }
}

impl<T: Real> ConvLayer<T> {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        kernel_size: usize,
        weights: Vec<T>,
        biases: Vec<T>,
    ) -> Result<Self> {
        if kernel_size == 0 || out_channels == 0 || in_channels == 0 {
            return Err(Error::config("layer dimensions must be positive"));
        }
        let expected = out_channels * in_channels * kernel_size * kernel_size;
        if weights.len() != expected {
            return Err(Error::shape(format!(
                "{} weights for a {in_channels}->{out_channels} @{kernel_size} layer (expected {expected})",
                weights.len()
            )));
        }
        if biases.len() != out_channels {
            return Err(Error::shape(format!(
                "{} biases for {out_channels} output channels",
                biases.len()
            )));
        }
        Ok(ConvLayer {
            out_channels,
            in_channels,
            kernel_size,
            weights,
            biases,
        })
    }

    pub fn zeros(out_channels: usize, in_channels: usize, kernel_size: usize) -> Self {
        ConvLayer {
            out_channels,
            in_channels,
            kernel_size,
            weights: vec![T::zero(); out_channels * in_channels * kernel_size * kernel_size],
            biases: vec![T::zero(); out_channels],
        }
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.out_channels, self.in_channels, self.kernel_size)
    }

    #[inline]
    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    #[inline]
    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    #[inline]
    pub fn kernel_size(&self) -> usize {
        self.kernel_size
    }

    pub fn param_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    #[inline]
    pub fn weight(&self, o: usize, c: usize, ky: usize, kx: usize) -> T {
        let k = self.kernel_size;
        self.weights[((o * self.in_channels + c) * k + ky) * k + kx]
    }

    /// Kernel taps of output channel `o` over input channel `c`.
    #[inline]
    pub fn kernel(&self, o: usize, c: usize) -> &[T] {
        let kk = self.kernel_size * self.kernel_size;
        let start = (o * self.in_channels + c) * kk;
        &self.weights[start..start + kk]
    }

    pub fn same_structure(&self, other: &ConvLayer<T>) -> bool {
        self.out_channels == other.out_channels
            && self.in_channels == other.in_channels
            && self.kernel_size == other.kernel_size
    }

    pub fn cast<U: Real>(&self) -> ConvLayer<U> {
        ConvLayer {
            out_channels: self.out_channels,
            in_channels: self.in_channels,
            kernel_size: self.kernel_size,
            weights: self.weights.iter().map(|w| U::lit(w.as_f64())).collect(),
            biases: self.biases.iter().map(|b| U::lit(b.as_f64())).collect(),
        }
    }

    /// Weights then biases.
    pub fn params(&self) -> impl Iterator<Item = &T> {
        self.weights.iter().chain(self.biases.iter())
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> {
        self.weights.iter_mut().chain(self.biases.iter_mut())
    }
}

pub fn relu_forward<T: Real>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

pub(crate) fn relu_in_place<T: Real>(t: &mut Tensor<T>) {
    for v in t.data_mut() {
        if !(*v > T::zero()) {
            *v = T::zero();
        }
    }
}

/// Passes `grad_output` where `input > 0`; the subgradient at exactly zero is 0.
pub fn relu_backward<T: Real>(input: &Tensor<T>, grad_output: &Tensor<T>) -> Result<Tensor<T>> {
    input.expect_same_shape(grad_output, "relu_backward")?;
    let data = input
        .data()
        .iter()
        .zip(grad_output.data())
        .map(|(&x, &g)| if x > T::zero() { g } else { T::zero() })
        .collect();
    Tensor::new(input.channels, input.height, input.width, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: &[f64]) -> Tensor<f64> {
        Tensor::new(1, 1, v.len(), v.to_vec()).unwrap()
    }

    #[test]
    fn layout_is_channel_major_row_major() {
        let t = Tensor::<f32>::from_fn(2, 3, 4, |c, y, x| (c * 100 + y * 10 + x) as f32);
        assert_eq!(t.data()[t.index(1, 2, 3)], 123.0);
        assert_eq!(t.data()[(3 + 2) * 4 + 3], 123.0);
        assert_eq!(t.row(1, 0), &[100.0, 101.0, 102.0, 103.0]);
    }

    #[test]
    fn new_rejects_wrong_length() {
        assert!(Tensor::<f32>::new(1, 2, 2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn relu_examples() {
        assert_eq!(relu_forward(&row(&[-1.0, 0.0, 2.0])).data(), &[0.0, 0.0, 2.0]);
        assert_eq!(relu_forward(&row(&[1.0, 2.0, 3.0])).data(), &[1.0, 2.0, 3.0]);
        assert_eq!(relu_forward(&row(&[-1.0, -2.0, -3.0])).data(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn relu_backward_examples() {
        let g = relu_backward(&row(&[-1.0, 0.0, 2.0]), &row(&[5.0, 5.0, 5.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 5.0]);
        let g = relu_backward(&row(&[-1.0, 0.0, 2.0]), &row(&[0.0, 0.0, 0.0])).unwrap();
        assert_eq!(g.data(), &[0.0, 0.0, 0.0]);
        let g = relu_backward(&row(&[1.0, 3.0, 2.0]), &row(&[7.0, -1.0, 4.0])).unwrap();
        assert_eq!(g.data(), &[7.0, -1.0, 4.0]);
        assert!(relu_backward(&row(&[1.0]), &row(&[1.0, 2.0])).is_err());
    }

    #[test]
    fn concat_then_split_restores_parts() {
        let a = Tensor::<f32>::from_fn(1, 2, 2, |_, y, x| (y * 2 + x) as f32);
        let b = Tensor::<f32>::from_fn(2, 2, 2, |c, y, x| (10 * c + y * 2 + x) as f32);
        let cat = Tensor::concat_channels(&[&a, &b]).unwrap();
        assert_eq!(cat.channels(), 3);
        let (l, r) = cat.split_channels(1).unwrap();
        assert_eq!(l, a);
        assert_eq!(r, b);
    }

    #[test]
    fn conv_layer_validates_lengths() {
        assert!(ConvLayer::<f32>::new(2, 1, 3, vec![0.0; 18], vec![0.0; 2]).is_ok());
        assert!(ConvLayer::<f32>::new(2, 1, 3, vec![0.0; 17], vec![0.0; 2]).is_err());
        assert!(ConvLayer::<f32>::new(2, 1, 3, vec![0.0; 18], vec![0.0; 1]).is_err());
    }

    #[test]
    fn valid_padding_requires_kernel_sized_input() {
        assert!(PaddingMode::Valid.output_dims(2, 5, 3).is_err());
        assert_eq!(PaddingMode::Valid.output_dims(5, 6, 3).unwrap(), (3, 4));
        assert_eq!(PaddingMode::Same.output_dims(5, 6, 9).unwrap(), (5, 6));
    }

    proptest::proptest! {
        #[test]
        fn relu_is_idempotent(v in proptest::collection::vec(-10.0f64..10.0, 1..64)) {
            let t = row(&v);
            let once = relu_forward(&t);
            proptest::prop_assert_eq!(relu_forward(&once), once);
        }
    }
}
