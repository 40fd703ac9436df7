//! Least-squares kernel update and projection onto valid PSFs.

use rustfft::num_complex::Complex64;

use super::{check_side, require_gray, HqsConfig, Operators};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::psf::Psf;

const SPECTRAL_FLOOR: f64 = 1e-12;

/// Minimizer of `Σ_d ‖k * A_d − B_d‖² + ridge · ‖k‖²` on the full grid, where
/// `(A_d, B_d)` are the horizontal and vertical differences of
/// `(latent, b1)` in gradient-domain mode and `(latent, b1)` otherwise.
///
/// The result is `height × width`, row-major, with the kernel center at the
/// origin and negative offsets wrapped.
pub fn kernel_least_squares(latent: &Image, b1: &Image, ridge: f64, gradient_domain: bool) -> Result<Vec<f64>> {
    require_gray(latent, "latent image")?;
    require_gray(b1, "blurred estimate")?;
    latent.check_same_shape(b1)?;
    let data = latent.data();
    let lo = data.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Err(Error::invalid("kernel solve needs a non-constant latent image"));
    }
    let ops = Operators::new(latent.height(), latent.width());
    let a = ops.fft.forward_real(latent.data());
    let b = ops.fft.forward_real(b1.data());
    let one = [Complex64::new(1.0, 0.0)];
    let spectrum: Vec<Complex64> = (0..a.len())
        .map(|u| {
            let ops_u: &[Complex64] = if gradient_domain { &[ops.dh[u], ops.dv[u]] } else { &one };
            let mut num = Complex64::new(0.0, 0.0);
            let mut den = ridge;
            for d in ops_u {
                let ad = d * a[u];
                let bd = d * b[u];
                num += ad.conj() * bd;
                den += ad.norm_sqr();
            }
            num / den.max(SPECTRAL_FLOOR)
        })
        .collect();
    Ok(ops.fft.inverse_real(spectrum))
}

/// Least-squares kernel followed by [`project_kernel`].
pub fn kernel_step(latent: &Image, b1: &Image, side: usize, cfg: &HqsConfig) -> Result<Psf> {
    check_side(side, latent.height(), latent.width())?;
    let full = kernel_least_squares(latent, b1, cfg.kernel_ridge, cfg.gradient_domain)?;
    project_kernel(&full, latent.height(), latent.width(), side, cfg.kernel_prune)
}

/// Turns an origin-centered `h × w` kernel estimate into a `side × side` PSF:
/// the window is centered on the positive-mass centroid around the peak,
/// negatives are zeroed, weights below `prune × max` are zeroed, and the rest
/// is normalized.
pub fn project_kernel(full: &[f64], h: usize, w: usize, side: usize, prune: f64) -> Result<Psf> {
    check_side(side, h, w)?;
    if full.len() != h * w {
        return Err(Error::DimensionMismatch(format!(
            "kernel estimate has {} values, grid is {h}x{w}",
            full.len()
        )));
    }
    let l = (side / 2) as isize;
    let at = |cy: usize, cx: usize, dy: isize, dx: isize| {
        let y = (cy as isize + dy).rem_euclid(h as isize) as usize;
        let x = (cx as isize + dx).rem_euclid(w as isize) as usize;
        full[y * w + x]
    };
    let peak = full
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    if !(peak.1 > 0.0) {
        return Err(Error::invalid("kernel estimate has no positive mass"));
    }
    let (py, px) = (peak.0 / w, peak.0 % w);
    // A kernel that fits in `side` reaches at most `side − 1` from its peak,
    // so the centroid is taken over twice the window.
    let ry = (2 * l).min((h as isize - 1) / 2);
    let rx = (2 * l).min((w as isize - 1) / 2);
    let (mut mass, mut my, mut mx) = (0.0, 0.0, 0.0);
    for dy in -ry..=ry {
        for dx in -rx..=rx {
            let v = at(py, px, dy, dx).max(0.0);
            mass += v;
            my += v * dy as f64;
            mx += v * dx as f64;
        }
    }
    let cy = (py as isize + (my / mass).round() as isize).rem_euclid(h as isize) as usize;
    let cx = (px as isize + (mx / mass).round() as isize).rem_euclid(w as isize) as usize;

    let mut weights: Vec<f64> = Vec::with_capacity(side * side);
    for dy in -l..=l {
        for dx in -l..=l {
            weights.push(at(cy, cx, dy, dx).max(0.0));
        }
    }
    let max = weights.iter().cloned().fold(0.0, f64::max);
    for v in &mut weights {
        if *v < prune * max {
            *v = 0.0;
        }
    }
    Psf::from_unnormalized(side, weights)
}
