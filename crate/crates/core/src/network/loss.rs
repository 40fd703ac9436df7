//! Mean-reduced squared-error losses of the cascade.

use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::Result;
use crate::image::Image;
use crate::metrics::mse;

/// Weight of the deblurring term in the joint loss.
pub const JOINT_DEBLUR_WEIGHT: f64 = 0.5;

/// `‖B − B₁‖²` divided by the element count.
pub fn loss_denoiser(b_hat: &Image, b: &Image) -> Result<f64> {
    mse(b_hat, b)
}

/// `‖I − Net2(B)‖²` divided by the element count.
pub fn loss_deblurring(i_hat: &Image, i: &Image) -> Result<f64> {
    mse(i_hat, i)
}

/// `‖B − B₁‖² + 0.5 · ‖I − I₁‖²`, both terms mean-reduced.
pub fn loss_joint(b1: &Image, b: &Image, i1: &Image, i: &Image) -> Result<f64> {
    Ok(loss_denoiser(b1, b)? + JOINT_DEBLUR_WEIGHT * loss_deblurring(i1, i)?)
}

/// Mean squared error and its gradient `2(pred − target)/n · weight`.
pub fn mse_with_grad<T: Scalar>(pred: &Tensor<T>, target: &Tensor<T>, weight: f64) -> (f64, Tensor<T>) {
    assert_eq!(pred.shape(), target.shape(), "loss operands differ in shape");
    let n = pred.data.len() as f64;
    let scale = T::from_f64(2.0 * weight / n);
    let mut sum = 0.0;
    let data = pred
        .data
        .iter()
        .zip(&target.data)
        .map(|(p, t)| {
            let d = *p - *t;
            sum += d.as_f64() * d.as_f64();
            d * scale
        })
        .collect();
    (
        sum / n,
        Tensor {
            channels: pred.channels,
            height: pred.height,
            width: pred.width,
            data,
        },
    )
}
