//! Bias-corrected Adam.

use super::arch::NetParams;
use super::scalar::Scalar;
use crate::error::{Error, Result};

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

/// First/second moment estimates mirroring a [`NetParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<T> {
    pub m: Vec<Vec<T>>,
    pub v: Vec<Vec<T>>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(params: &NetParams<T>) -> Self {
        let zeros: Vec<Vec<T>> = params.tensors().map(|t| vec![T::zero(); t.len()]).collect();
        Self {
            m: zeros.clone(),
            v: zeros,
            t: 0,
        }
    }
}

/// One update `p ← p − lr · m̂ / (√v̂ + ε)`.
pub fn adam_step<T: Scalar>(
    params: &mut NetParams<T>,
    grads: &NetParams<T>,
    state: &mut AdamState<T>,
    lr: f64,
) -> Result<()> {
    if params.arch != grads.arch || state.m.len() != params.convs.len() * 2 {
        return Err(Error::DimensionMismatch("adam operands disagree in shape".into()));
    }
    state.t += 1;
    let t = state.t as i32;
    let c1 = 1.0 - BETA1.powi(t);
    let c2 = 1.0 - BETA2.powi(t);
    let (b1, b2) = (T::from_f64(BETA1), T::from_f64(BETA2));
    let (one_b1, one_b2) = (T::from_f64(1.0 - BETA1), T::from_f64(1.0 - BETA2));
    let (c1, c2) = (T::from_f64(c1), T::from_f64(c2));
    let (lr, eps) = (T::from_f64(lr), T::from_f64(EPSILON));
    for (((p, g), m), v) in params
        .tensors_mut()
        .zip(grads.tensors())
        .zip(state.m.iter_mut())
        .zip(state.v.iter_mut())
    {
        for i in 0..p.len() {
            m[i] = b1 * m[i] + one_b1 * g[i];
            v[i] = b2 * v[i] + one_b2 * g[i] * g[i];
            let mh = m[i] / c1;
            let vh = v[i] / c2;
            p[i] -= lr * mh / (vh.sqrt() + eps);
        }
    }
    params.touch();
    Ok(())
}
