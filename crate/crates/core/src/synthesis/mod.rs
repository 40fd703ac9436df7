//! Blur-kernel synthesis and degraded-dataset generation (`N = I * P + n`).

mod dataset;
mod noise;
mod walk;

pub use dataset::{
    build_dataset, noise_seed, sample_seed, synthesize_sample, DatasetConfig, DatasetMeta, Manifest,
    ManifestRow, SynthSample, MANIFEST_HEADER, SIGMA_LEVELS,
};
pub use noise::{add_noise, NoiseSpec};
pub use walk::{random_walk_psf, WalkParams, MAX_HALF_SIDE, MIN_HALF_SIDE};

use crate::conv::fft_convolve;
use crate::error::Result;
use crate::image::Image;
use crate::psf::Psf;

/// `B = I * P` with circular boundaries, the convention shared with kernel
/// recovery.
pub fn blur(img: &Image, psf: &Psf) -> Result<Image> {
    fft_convolve(img, psf)
}
