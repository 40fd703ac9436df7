//! Blind deblurring of noisy images.
//!
//! The crate provides
//! - an imaging core ([`Image`], [`Psf`], convolution, gradients, metrics),
//! - blur/noise synthesis and dataset building ([`synthesis`]),
//! - a cascaded denoise → deblur pair of U-shaped networks trained with a
//!   joint loss ([`network`]),
//! - blur-kernel estimation from the cascade outputs ([`estimate`]),
//! - an evaluation harness and run configuration ([`eval`], [`config`]).

pub mod config;
pub mod conv;
pub mod error;
pub mod estimate;
pub mod eval;
pub mod fft;
pub mod fixtures;
pub mod gradient;
pub mod image;
pub mod io;
pub mod metrics;
pub mod network;
pub mod psf;
pub mod rng;
pub mod synthesis;

pub use conv::{convolve, fft_convolve, BoundaryMode};
pub use error::{Error, Result};
pub use gradient::{gradient, GradientField};
pub use image::Image;
pub use metrics::{kernel_similarity, psnr, ssim};
pub use psf::Psf;
