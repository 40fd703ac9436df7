use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::layers::{ConvSpec, KSIZE, LEAKY_SLOPE};
use super::scalar::Scalar;
use crate::error::{Error, Result};
use crate::rng::rng_from;

/// Shape of one U-shaped encoder-decoder.
///
/// Level `k` has `base_channels · 2^k` features. Every level applies two
/// conv + leaky-ReLU pairs; levels are joined by stride-2 convolutions on the
/// way down and by nearest ×2 upsampling followed by a convolution on the way
/// up, with encoder features concatenated into the matching decoder level. A
/// final linear convolution projects to `out_channels`; in residual mode the
/// input is added to it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetArch {
    pub levels: usize,
    pub base_channels: usize,
    pub in_channels: usize,
    pub out_channels: usize,
    pub residual: bool,
}

impl Default for NetArch {
    fn default() -> Self {
        Self {
            levels: 2,
            base_channels: 8,
            in_channels: 1,
            out_channels: 1,
            residual: true,
        }
    }
}

/// Limits that keep tensor allocations bounded when reading untrusted files.
pub const MAX_LEVELS: usize = 6;
pub const MAX_BASE_CHANNELS: usize = 256;

/// Gain of the linear output layer relative to fan-in scaling; small so a
/// residual net starts close to the identity.
pub const FINAL_INIT_GAIN: f64 = 0.1;

impl NetArch {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_LEVELS).contains(&self.levels) {
            return Err(Error::Config(format!("levels must be in 1..={MAX_LEVELS}")));
        }
        if !(1..=MAX_BASE_CHANNELS).contains(&self.base_channels) {
            return Err(Error::Config(format!(
                "base_channels must be in 1..={MAX_BASE_CHANNELS}"
            )));
        }
        for c in [self.in_channels, self.out_channels] {
            if c != 1 && c != 3 {
                return Err(Error::Config("image channels must be 1 or 3".into()));
            }
        }
        if self.residual && self.in_channels != self.out_channels {
            return Err(Error::Config(
                "residual mode needs equal input and output channels".into(),
            ));
        }
        Ok(())
    }

    /// Checks that an input of this spatial size can pass through the net.
    pub fn check_input(&self, channels: usize, height: usize, width: usize) -> Result<()> {
        let unit = 1usize << self.levels;
        if channels != self.in_channels {
            return Err(Error::DimensionMismatch(format!(
                "network expects {} channels, got {channels}",
                self.in_channels
            )));
        }
        if height == 0 || width == 0 || height % unit != 0 || width % unit != 0 {
            return Err(Error::DimensionMismatch(format!(
                "{height}x{width} is not divisible by 2^{} = {unit}",
                self.levels
            )));
        }
        Ok(())
    }

    pub fn level_channels(&self, k: usize) -> usize {
        self.base_channels << k
    }

    /// Convolutions in declaration order.
    ///
    /// Encoder: `enc0a, enc0b`, then per level `k = 1..=L`: `down_k, enc_k_a,
    /// enc_k_b`. Decoder for `k = L−1` down to `0`: `up_k, dec_k_a, dec_k_b`.
    /// Last: `final`.
    pub fn conv_specs(&self) -> Vec<ConvSpec> {
        let c = |k| self.level_channels(k);
        let s1 = |i, o| ConvSpec { in_channels: i, out_channels: o, stride: 1 };
        let mut specs = vec![s1(self.in_channels, c(0)), s1(c(0), c(0))];
        for k in 1..=self.levels {
            specs.push(ConvSpec { in_channels: c(k - 1), out_channels: c(k), stride: 2 });
            specs.push(s1(c(k), c(k)));
            specs.push(s1(c(k), c(k)));
        }
        for k in (0..self.levels).rev() {
            specs.push(s1(c(k + 1), c(k)));
            specs.push(s1(2 * c(k), c(k)));
            specs.push(s1(c(k), c(k)));
        }
        specs.push(s1(c(0), self.out_channels));
        specs
    }

    pub(crate) fn down_index(&self, k: usize) -> usize {
        2 + 3 * (k - 1)
    }

    pub(crate) fn up_index(&self, k: usize) -> usize {
        2 + 3 * self.levels + 3 * (self.levels - 1 - k)
    }

    pub(crate) fn final_index(&self) -> usize {
        2 + 6 * self.levels
    }

    pub fn param_count(&self) -> usize {
        self.conv_specs()
            .iter()
            .map(|s| s.weight_len() + s.out_channels)
            .sum()
    }
}

/// Weights and bias of one convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvParams<T> {
    pub spec: ConvSpec,
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

/// All learnable tensors of one subnet.
#[derive(Debug, Clone, PartialEq)]
pub struct NetParams<T> {
    pub arch: NetArch,
    pub convs: Vec<ConvParams<T>>,
    /// Bumped on every update; forward tapes remember the value they saw.
    pub(crate) generation: u64,
}

impl<T: Scalar> NetParams<T> {
    pub fn zeros(arch: NetArch) -> Self {
        let convs = arch
            .conv_specs()
            .into_iter()
            .map(|spec| ConvParams {
                spec,
                weight: vec![T::zero(); spec.weight_len()],
                bias: vec![T::zero(); spec.out_channels],
            })
            .collect();
        Self { arch, convs, generation: 0 }
    }

    /// He (fan-in) initialization adjusted for the leaky slope,
    /// `w ~ N(0, 2 / ((1 + 0.2²) · 9 · in_channels))`, for the rectified
    /// layers; the linear output layer draws `N(0, (FINAL_INIT_GAIN)² / fan_in)`.
    /// Biases start at zero.
    pub fn init(arch: NetArch, seed: u64) -> Self {
        let mut params = Self::zeros(arch);
        let mut rng = rng_from(seed);
        let last = params.convs.len() - 1;
        for (i, conv) in params.convs.iter_mut().enumerate() {
            let fan_in = (conv.spec.in_channels * KSIZE * KSIZE) as f64;
            let std = if i == last {
                FINAL_INIT_GAIN * fan_in.recip().sqrt()
            } else {
                (2.0 / ((1.0 + LEAKY_SLOPE * LEAKY_SLOPE) * fan_in)).sqrt()
            };
            for w in &mut conv.weight {
                let g: f64 = rng.sample(StandardNormal);
                *w = T::from_f64(std * g);
            }
        }
        params
    }

    /// Parameter tensors in declaration order (weight then bias per conv).
    pub fn tensors(&self) -> impl Iterator<Item = &[T]> {
        self.convs
            .iter()
            .flat_map(|c| [c.weight.as_slice(), c.bias.as_slice()])
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Vec<T>> {
        self.convs.iter_mut().flat_map(|c| [&mut c.weight, &mut c.bias])
    }

    pub fn flat(&self) -> Vec<T> {
        self.tensors().flat_map(|t| t.iter().copied()).collect()
    }

    pub fn from_flat(arch: NetArch, values: &[T]) -> Result<Self> {
        let mut params = Self::zeros(arch);
        if values.len() != arch.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                arch.param_count(),
                values.len()
            )));
        }
        let mut offset = 0;
        for t in params.tensors_mut() {
            let n = t.len();
            t.copy_from_slice(&values[offset..offset + n]);
            offset += n;
        }
        Ok(params)
    }

    pub fn len(&self) -> usize {
        self.arch.param_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().all(|t| t.iter().all(|v| v.is_finite()))
    }

    pub fn cast<U: Scalar>(&self) -> NetParams<U> {
        let flat: Vec<U> = self.flat().into_iter().map(|v| U::from_f64(v.as_f64())).collect();
        NetParams::from_flat(self.arch, &flat).expect("same architecture")
    }

    /// `self += other`, used for gradient accumulation.
    pub fn add_assign(&mut self, other: &NetParams<T>) {
        for (a, b) in self.tensors_mut().zip(other.tensors()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    pub fn scale(&mut self, s: T) {
        for t in self.tensors_mut() {
            for x in t.iter_mut() {
                *x *= s;
            }
        }
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Marks the parameters as modified; outstanding tapes become stale.
    pub fn touch(&mut self) {
        self.generation += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_layout() {
        let arch = NetArch { levels: 2, base_channels: 4, ..Default::default() };
        let specs = arch.conv_specs();
        assert_eq!(specs.len(), 3 + 6 * 2);
        assert_eq!(specs[arch.down_index(1)].stride, 2);
        assert_eq!(specs[arch.down_index(2)].out_channels, 16);
        assert_eq!(specs[arch.up_index(1)].in_channels, 16);
        assert_eq!(specs[arch.up_index(1) + 1].in_channels, 16);
        assert_eq!(specs[arch.up_index(0)].out_channels, 4);
        assert_eq!(arch.final_index(), specs.len() - 1);
    }

    #[test]
    fn init_is_seeded() {
        let arch = NetArch::default();
        let a = NetParams::<f32>::init(arch, 3);
        assert_eq!(a, NetParams::<f32>::init(arch, 3));
        assert_ne!(a, NetParams::<f32>::init(arch, 4));
        assert_eq!(a.flat().len(), arch.param_count());
        assert!(a.convs.iter().all(|c| c.bias.iter().all(|b| *b == 0.0)));
    }

    #[test]
    fn input_divisibility() {
        let arch = NetArch::default();
        assert!(arch.check_input(1, 8, 12).is_ok());
        assert!(arch.check_input(1, 6, 8).is_err());
        assert!(arch.check_input(3, 8, 8).is_err());
    }
}
