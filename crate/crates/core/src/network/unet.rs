//! Forward and backward passes of one encoder-decoder.

use super::arch::NetParams;
use super::layers::{
    concat, concat_backward, conv_backward, conv_forward, leaky_relu, leaky_relu_backward,
    upsample2, upsample2_backward, ConvCache,
};
use super::scalar::Scalar;
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Everything a backward pass needs from the matching forward pass.
#[derive(Debug, Clone)]
pub struct ActivationTape<T> {
    generation: u64,
    input_shape: (usize, usize, usize),
    caches: Vec<ConvCache<T>>,
    /// Post-activation outputs of every activated convolution.
    activations: Vec<Option<Tensor<T>>>,
}

struct Recorder<'a, T> {
    params: &'a NetParams<T>,
    tape: ActivationTape<T>,
}

impl<T: Scalar> Recorder<'_, T> {
    fn conv(&mut self, idx: usize, x: &Tensor<T>, activate: bool) -> Tensor<T> {
        debug_assert_eq!(idx, self.tape.caches.len(), "convolutions run in declaration order");
        let p = &self.params.convs[idx];
        let (mut y, cache) = conv_forward(&p.spec, &p.weight, &p.bias, x);
        self.tape.caches.push(cache);
        if activate {
            leaky_relu(&mut y);
            self.tape.activations.push(Some(y.clone()));
        } else {
            self.tape.activations.push(None);
        }
        y
    }
}

/// Runs the network; the tape retains all intermediates for [`backward`].
pub fn forward<T: Scalar>(
    params: &NetParams<T>,
    input: &Tensor<T>,
) -> Result<(Tensor<T>, ActivationTape<T>)> {
    let arch = params.arch;
    arch.check_input(input.channels, input.height, input.width)?;
    let n = params.convs.len();
    let mut rec = Recorder {
        params,
        tape: ActivationTape {
            generation: params.generation,
            input_shape: input.shape(),
            caches: Vec::with_capacity(n),
            activations: Vec::with_capacity(n),
        },
    };

    let mut skips = Vec::with_capacity(arch.levels);
    let x = rec.conv(0, input, true);
    let mut cur = rec.conv(1, &x, true);
    for k in 1..=arch.levels {
        let d = arch.down_index(k);
        let x = rec.conv(d, &cur, true);
        let x = rec.conv(d + 1, &x, true);
        let x = rec.conv(d + 2, &x, true);
        skips.push(std::mem::replace(&mut cur, x));
    }
    for k in (0..arch.levels).rev() {
        let u = arch.up_index(k);
        let x = rec.conv(u, &upsample2(&cur), true);
        let x = rec.conv(u + 1, &concat(&x, &skips[k]), true);
        cur = rec.conv(u + 2, &x, true);
    }
    let mut out = rec.conv(arch.final_index(), &cur, false);
    if arch.residual {
        out.add_assign(input);
    }
    Ok((out, rec.tape))
}

/// Convenience wrapper discarding the tape.
pub fn predict<T: Scalar>(params: &NetParams<T>, input: &Tensor<T>) -> Result<Tensor<T>> {
    forward(params, input).map(|(y, _)| y)
}

/// Exact gradients of a scalar loss with respect to every parameter and to
/// the network input, given `grad_output = ∂loss/∂output`.
pub fn backward<T: Scalar>(
    params: &NetParams<T>,
    tape: &ActivationTape<T>,
    grad_output: &Tensor<T>,
) -> Result<(NetParams<T>, Tensor<T>)> {
    let arch = params.arch;
    if tape.generation != params.generation || tape.caches.len() != params.convs.len() {
        return Err(Error::invalid("stale activation tape: parameters changed since forward"));
    }
    let (c, h, w) = tape.input_shape;
    if grad_output.shape() != (arch.out_channels, h, w) {
        return Err(Error::DimensionMismatch("output gradient does not match the tape".into()));
    }
    let mut grads = NetParams::zeros(arch);
    let mut back = |idx: usize, mut g: Tensor<T>| -> Tensor<T> {
        if let Some(y) = &tape.activations[idx] {
            leaky_relu_backward(y, &mut g);
        }
        let p = &params.convs[idx];
        let gp = &mut grads.convs[idx];
        conv_backward(&p.spec, &p.weight, &tape.caches[idx], &g, &mut gp.weight, &mut gp.bias)
    };

    let mut g = back(arch.final_index(), grad_output.clone());
    let mut skip_grads = Vec::with_capacity(arch.levels);
    for k in 0..arch.levels {
        let u = arch.up_index(k);
        g = back(u + 2, g);
        g = back(u + 1, g);
        let (gu, gs) = concat_backward(&g, arch.level_channels(k));
        skip_grads.push(gs);
        g = upsample2_backward(&back(u, gu));
    }
    for k in (1..=arch.levels).rev() {
        if k < arch.levels {
            g.add_assign(&skip_grads[k]);
        }
        let d = arch.down_index(k);
        g = back(d + 2, g);
        g = back(d + 1, g);
        g = back(d, g);
    }
    g.add_assign(&skip_grads[0]);
    g = back(1, g);
    let mut grad_input = back(0, g);
    debug_assert_eq!(grad_input.shape(), (c, h, w));
    if arch.residual {
        grad_input.add_assign(grad_output);
    }
    Ok((grads, grad_input))
}
