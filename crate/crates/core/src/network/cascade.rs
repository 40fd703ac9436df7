//! The denoiser → deblurrer cascade and its per-sample gradients.

use super::arch::NetParams;
use super::loss::{mse_with_grad, JOINT_DEBLUR_WEIGHT};
use super::scalar::Scalar;
use super::tensor::Tensor;
use super::unet::{backward, forward, predict};
use crate::error::Result;

/// `B₁ = Net1(N)`, `I₁ = Net2(B₁)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cascade<T> {
    pub denoiser: NetParams<T>,
    pub deblurrer: NetParams<T>,
}

impl<T: Scalar> Cascade<T> {
    pub fn run(&self, noisy: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let b1 = predict(&self.denoiser, noisy)?;
        let i1 = predict(&self.deblurrer, &b1)?;
        Ok((b1, i1))
    }

    pub fn cast<U: Scalar>(&self) -> Cascade<U> {
        Cascade {
            denoiser: self.denoiser.cast(),
            deblurrer: self.deblurrer.cast(),
        }
    }
}

/// Loss and gradients of `‖Net1(N) − B‖²`.
pub fn denoise_gradients<T: Scalar>(
    net1: &NetParams<T>,
    noisy: &Tensor<T>,
    blurry: &Tensor<T>,
) -> Result<(f64, NetParams<T>)> {
    let (b1, tape) = forward(net1, noisy)?;
    let (loss, g) = mse_with_grad(&b1, blurry, 1.0);
    let (grads, _) = backward(net1, &tape, &g)?;
    Ok((loss, grads))
}

/// Loss and gradients of `‖Net2(B) − I‖²`.
pub fn deblur_gradients<T: Scalar>(
    net2: &NetParams<T>,
    blurry: &Tensor<T>,
    sharp: &Tensor<T>,
) -> Result<(f64, NetParams<T>)> {
    denoise_gradients(net2, blurry, sharp)
}

/// Loss and gradients of the joint objective for both subnets.
///
/// The deblurring term back-propagates through Net2 into Net1 via `B₁`; no
/// stop-gradient is applied anywhere.
pub fn joint_gradients<T: Scalar>(
    cascade: &Cascade<T>,
    noisy: &Tensor<T>,
    blurry: &Tensor<T>,
    sharp: &Tensor<T>,
) -> Result<(f64, Cascade<T>)> {
    let (b1, tape1) = forward(&cascade.denoiser, noisy)?;
    let (i1, tape2) = forward(&cascade.deblurrer, &b1)?;
    let (l1, mut g_b1) = mse_with_grad(&b1, blurry, 1.0);
    let (l2, g_i1) = mse_with_grad(&i1, sharp, JOINT_DEBLUR_WEIGHT);
    let (grads2, through) = backward(&cascade.deblurrer, &tape2, &g_i1)?;
    g_b1.add_assign(&through);
    let (grads1, _) = backward(&cascade.denoiser, &tape1, &g_b1)?;
    Ok((
        l1 + JOINT_DEBLUR_WEIGHT * l2,
        Cascade {
            denoiser: grads1,
            deblurrer: grads2,
        },
    ))
}
