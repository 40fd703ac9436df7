//! Spatial and FFT convolution of images with point spread functions.
//!
//! Convolution is the true (flipped) convolution:
//! `out(y, x) = Σ k(dy, dx) · img(y − dy, x − dx)` over kernel offsets
//! `dy, dx ∈ [−l, l]`.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft::{embed_centered, Fft2};
use crate::image::Image;
use crate::psf::Psf;

/// How samples outside the image are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryMode {
    /// Wrap around; diagonalized by the DFT.
    #[default]
    Circular,
    /// Repeat the nearest edge sample.
    Replicate,
}

fn check_fits(img: &Image, psf: &Psf) -> Result<()> {
    let limit = 2 * img.height().min(img.width());
    if psf.side() > limit {
        return Err(Error::DimensionMismatch(format!(
            "psf side {} exceeds twice the smaller image side ({limit})",
            psf.side()
        )));
    }
    Ok(())
}

#[inline]
fn resolve(i: isize, n: usize, mode: BoundaryMode) -> usize {
    match mode {
        BoundaryMode::Circular => i.rem_euclid(n as isize) as usize,
        BoundaryMode::Replicate => i.clamp(0, n as isize - 1) as usize,
    }
}

/// Direct spatial convolution, applied per channel.
pub fn convolve(img: &Image, psf: &Psf, mode: BoundaryMode) -> Result<Image> {
    check_fits(img, psf)?;
    let (h, w) = (img.height(), img.width());
    let side = psf.side();
    let l = psf.half() as isize;
    // Nonzero taps only; motion kernels are sparse.
    let taps: Vec<(isize, isize, f64)> = (0..side)
        .flat_map(|ky| (0..side).map(move |kx| (ky, kx)))
        .filter_map(|(ky, kx)| {
            let v = psf.at(ky, kx);
            (v != 0.0).then_some((ky as isize - l, kx as isize - l, v))
        })
        .collect();
    Ok(img.map_planes(|plane| {
        let mut out = vec![0.0; h * w];
        for &(dy, dx, v) in &taps {
            for y in 0..h {
                let sy = resolve(y as isize - dy, h, mode);
                let src = &plane[sy * w..(sy + 1) * w];
                let dst = &mut out[y * w..(y + 1) * w];
                for (x, o) in dst.iter_mut().enumerate() {
                    *o += v * src[resolve(x as isize - dx, w, mode)];
                }
            }
        }
        out
    }))
}

/// Circular convolution through the DFT; equals
/// `convolve(img, psf, BoundaryMode::Circular)` up to rounding.
pub fn fft_convolve(img: &Image, psf: &Psf) -> Result<Image> {
    check_fits(img, psf)?;
    let (h, w) = (img.height(), img.width());
    let fft = Fft2::new(h, w);
    let kernel = fft.forward_real(&embed_centered(psf.weights(), psf.side(), h, w));
    Ok(img.map_planes(|plane| {
        let spec = fft.forward_real(plane);
        let prod: Vec<Complex64> = spec.iter().zip(&kernel).map(|(a, b)| a * b).collect();
        fft.inverse_real(prod)
    }))
}
