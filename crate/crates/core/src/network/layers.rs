//! Layer primitives with explicit backward passes.
//!
//! Convolutions are 3×3 with zero padding 1 and stride 1 or 2, lowered to a
//! GEMM over an im2col matrix. Weights are laid out `[out][in][ky][kx]`.

use super::scalar::{matmul, Scalar};
use super::tensor::Tensor;

pub const LEAKY_SLOPE: f64 = 0.2;
pub const KSIZE: usize = 3;

/// Static description of one convolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub stride: usize,
}

impl ConvSpec {
    pub fn weight_len(&self) -> usize {
        self.out_channels * self.in_channels * KSIZE * KSIZE
    }

    pub fn output_size(&self, h: usize, w: usize) -> (usize, usize) {
        ((h - 1) / self.stride + 1, (w - 1) / self.stride + 1)
    }
}

/// Values kept from a convolution forward pass.
#[derive(Debug, Clone)]
pub struct ConvCache<T> {
    pub cols: Vec<T>,
    pub in_height: usize,
    pub in_width: usize,
}

fn im2col<T: Scalar>(x: &Tensor<T>, stride: usize, oh: usize, ow: usize) -> Vec<T> {
    let (c, h, w) = x.shape();
    let p = oh * ow;
    let mut cols = vec![T::zero(); c * KSIZE * KSIZE * p];
    for ci in 0..c {
        let plane = &x.data[ci * h * w..(ci + 1) * h * w];
        for ky in 0..KSIZE {
            for kx in 0..KSIZE {
                let row = &mut cols[((ci * KSIZE + ky) * KSIZE + kx) * p..][..p];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let src = &plane[iy as usize * w..(iy as usize + 1) * w];
                    let dst = &mut row[oy * ow..(oy + 1) * ow];
                    for (ox, d) in dst.iter_mut().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        if ix >= 0 && ix < w as isize {
                            *d = src[ix as usize];
                        }
                    }
                }
            }
        }
    }
    cols
}

fn col2im<T: Scalar>(cols: &[T], c: usize, h: usize, w: usize, stride: usize, oh: usize, ow: usize) -> Tensor<T> {
    let p = oh * ow;
    let mut out = Tensor::zeros(c, h, w);
    for ci in 0..c {
        let plane = &mut out.data[ci * h * w..(ci + 1) * h * w];
        for ky in 0..KSIZE {
            for kx in 0..KSIZE {
                let row = &cols[((ci * KSIZE + ky) * KSIZE + kx) * p..][..p];
                for oy in 0..oh {
                    let iy = (oy * stride + ky) as isize - 1;
                    if iy < 0 || iy >= h as isize {
                        continue;
                    }
                    let dst = &mut plane[iy as usize * w..(iy as usize + 1) * w];
                    for (ox, &g) in row[oy * ow..(oy + 1) * ow].iter().enumerate() {
                        let ix = (ox * stride + kx) as isize - 1;
                        if ix >= 0 && ix < w as isize {
                            dst[ix as usize] += g;
                        }
                    }
                }
            }
        }
    }
    out
}

pub fn conv_forward<T: Scalar>(
    spec: &ConvSpec,
    weight: &[T],
    bias: &[T],
    x: &Tensor<T>,
) -> (Tensor<T>, ConvCache<T>) {
    assert_eq!(x.channels, spec.in_channels, "conv input channels");
    let (oh, ow) = spec.output_size(x.height, x.width);
    let p = oh * ow;
    let k = spec.in_channels * KSIZE * KSIZE;
    let cols = im2col(x, spec.stride, oh, ow);
    let mut out = Tensor::zeros(spec.out_channels, oh, ow);
    for (co, b) in bias.iter().enumerate() {
        out.data[co * p..(co + 1) * p].fill(*b);
    }
    matmul(weight, false, &cols, false, &mut out.data, spec.out_channels, k, p, true);
    (
        out,
        ConvCache {
            cols,
            in_height: x.height,
            in_width: x.width,
        },
    )
}

/// Accumulates weight and bias gradients and returns the input gradient.
pub fn conv_backward<T: Scalar>(
    spec: &ConvSpec,
    weight: &[T],
    cache: &ConvCache<T>,
    grad_out: &Tensor<T>,
    grad_weight: &mut [T],
    grad_bias: &mut [T],
) -> Tensor<T> {
    let (oh, ow) = (grad_out.height, grad_out.width);
    let p = oh * ow;
    let k = spec.in_channels * KSIZE * KSIZE;
    for (co, gb) in grad_bias.iter_mut().enumerate() {
        *gb += grad_out.data[co * p..(co + 1) * p].iter().copied().sum::<T>();
    }
    // dW (cout × k) += dY (cout × p) · colsᵀ (p × k)
    matmul(&grad_out.data, false, &cache.cols, true, grad_weight, spec.out_channels, p, k, true);
    // dcols (k × p) = Wᵀ (k × cout) · dY (cout × p)
    let mut dcols = vec![T::zero(); k * p];
    matmul(weight, true, &grad_out.data, false, &mut dcols, k, spec.out_channels, p, false);
    col2im(&dcols, spec.in_channels, cache.in_height, cache.in_width, spec.stride, oh, ow)
}

pub fn leaky_relu<T: Scalar>(x: &mut Tensor<T>) {
    let slope = T::from_f64(LEAKY_SLOPE);
    for v in &mut x.data {
        if *v <= T::zero() {
            *v *= slope;
        }
    }
}

/// Backward of [`leaky_relu`] given its output (the slope is positive, so the
/// output sign equals the input sign).
pub fn leaky_relu_backward<T: Scalar>(output: &Tensor<T>, grad: &mut Tensor<T>) {
    let slope = T::from_f64(LEAKY_SLOPE);
    for (g, y) in grad.data.iter_mut().zip(&output.data) {
        if *y <= T::zero() {
            *g *= slope;
        }
    }
}

/// Nearest-neighbour ×2 upsampling.
pub fn upsample2<T: Scalar>(x: &Tensor<T>) -> Tensor<T> {
    let (c, h, w) = x.shape();
    let (oh, ow) = (2 * h, 2 * w);
    let mut out = Tensor::zeros(c, oh, ow);
    for ci in 0..c {
        for y in 0..oh {
            let src = &x.data[(ci * h + y / 2) * w..][..w];
            let dst = &mut out.data[(ci * oh + y) * ow..][..ow];
            for (xo, d) in dst.iter_mut().enumerate() {
                *d = src[xo / 2];
            }
        }
    }
    out
}

pub fn upsample2_backward<T: Scalar>(grad: &Tensor<T>) -> Tensor<T> {
    let (c, oh, ow) = grad.shape();
    let (h, w) = (oh / 2, ow / 2);
    let mut out = Tensor::zeros(c, h, w);
    for ci in 0..c {
        for y in 0..oh {
            let src = &grad.data[(ci * oh + y) * ow..][..ow];
            let dst = &mut out.data[(ci * h + y / 2) * w..][..w];
            for (xo, g) in src.iter().enumerate() {
                dst[xo / 2] += *g;
            }
        }
    }
    out
}

/// Channel concatenation `[a; b]`.
pub fn concat<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Tensor<T> {
    assert_eq!((a.height, a.width), (b.height, b.width), "concat spatial sizes");
    let mut data = Vec::with_capacity(a.data.len() + b.data.len());
    data.extend_from_slice(&a.data);
    data.extend_from_slice(&b.data);
    Tensor {
        channels: a.channels + b.channels,
        height: a.height,
        width: a.width,
        data,
    }
}

pub fn concat_backward<T: Scalar>(grad: &Tensor<T>, a_channels: usize) -> (Tensor<T>, Tensor<T>) {
    let split = a_channels * grad.plane_len();
    let ga = Tensor {
        channels: a_channels,
        height: grad.height,
        width: grad.width,
        data: grad.data[..split].to_vec(),
    };
    let gb = Tensor {
        channels: grad.channels - a_channels,
        height: grad.height,
        width: grad.width,
        data: grad.data[split..].to_vec(),
    };
    (ga, gb)
}
