//! Blur-kernel estimation from the cascade outputs `(B₁, I₁)`.
//!
//! Two paths: a direct regularized spectral division ([`fft_deconv`]) and an
//! ℓ0-gradient, exemplar-guided alternation solved by half-quadratic
//! splitting ([`estimate_psf_exemplar`]). Everything works on one luminance
//! plane with circular boundaries, so every subproblem is diagonal in the
//! Fourier basis.

mod config;
mod deconv;
mod hqs;
mod kernel;

pub use config::HqsConfig;
pub use deconv::fft_deconv;
pub use hqs::{
    estimate_psf_exemplar, latent_g_step, latent_image_step, objective, LatentState, ObjectiveParts, TraceRow,
    TRACE_HEADER,
};
pub use kernel::{kernel_least_squares, kernel_step, project_kernel};

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::image::Image;

/// Spectra of the two circular forward-difference operators on one grid.
pub(crate) struct Operators {
    pub fft: Fft2,
    pub dh: Vec<Complex64>,
    pub dv: Vec<Complex64>,
}

impl Operators {
    pub fn new(h: usize, w: usize) -> Self {
        let fft = Fft2::new(h, w);
        // (D * I)(y, x) = I(y, x+1) − I(y, x): taps −1 at the origin and +1 at
        // offset −1, which wraps to the last column (row).
        let mut dh = vec![0.0; h * w];
        dh[0] -= 1.0;
        dh[w - 1] += 1.0;
        let mut dv = vec![0.0; h * w];
        dv[0] -= 1.0;
        dv[(h - 1) * w] += 1.0;
        Self {
            dh: fft.forward_real(&dh),
            dv: fft.forward_real(&dv),
            fft,
        }
    }
}

/// Single-plane view of an estimation input; colour is reduced to luminance.
pub(crate) fn luminance_plane(img: &Image) -> Image {
    if img.channels() == 1 {
        img.clone()
    } else {
        img.luminance()
    }
}

pub(crate) fn require_gray(img: &Image, what: &str) -> Result<()> {
    if img.channels() != 1 {
        return Err(Error::invalid(format!("{what} must be a single luminance plane")));
    }
    Ok(())
}

pub(crate) fn check_side(side: usize, h: usize, w: usize) -> Result<()> {
    if side % 2 == 0 || side == 0 {
        return Err(Error::invalid(format!("kernel side {side} must be odd")));
    }
    if side > h.min(w) {
        return Err(Error::DimensionMismatch(format!(
            "kernel side {side} exceeds the {h}x{w} image"
        )));
    }
    Ok(())
}
