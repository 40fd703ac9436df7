//! Direct kernel estimate by regularized spectral division.

use rustfft::num_complex::Complex64;

use super::kernel::project_kernel;
use super::{check_side, luminance_plane};
use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::image::Image;
use crate::psf::Psf;

/// `P̂ = IDFT(B̂₁ · conj(Î₁) / (|Î₁|² + eps))`, recentered on its mass
/// centroid, cropped to `side`, negatives zeroed and renormalized.
///
/// With `eps = 0`, frequencies where `Î₁` vanishes contribute nothing.
pub fn fft_deconv(b1: &Image, i1: &Image, eps: f64, side: usize) -> Result<Psf> {
    b1.check_same_shape(i1)?;
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(Error::invalid(format!("spectral floor {eps} must be >= 0")));
    }
    let (h, w) = (b1.height(), b1.width());
    check_side(side, h, w)?;
    let b = luminance_plane(b1);
    let i = luminance_plane(i1);
    if i.data().iter().all(|&v| v == 0.0) {
        return Err(Error::invalid("cannot deconvolve by an all-zero image"));
    }
    let fft = Fft2::new(h, w);
    let bh = fft.forward_real(b.data());
    let ih = fft.forward_real(i.data());
    let ratio: Vec<Complex64> = bh
        .iter()
        .zip(&ih)
        .map(|(bu, iu)| {
            let den = iu.norm_sqr() + eps;
            if den > 0.0 {
                bu * iu.conj() / den
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    project_kernel(&fft.inverse_real(ratio), h, w, side, 0.0)
}
