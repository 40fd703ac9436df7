//! PSNR, SSIM and kernel similarity.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::psf::Psf;

/// PSNR reported for identical images.
pub const PSNR_CAP_DB: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

/// Mean squared error pooled over every sample of every channel.
pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let sum: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.data().len() as f64)
}

/// Peak signal-to-noise ratio with peak 1.0. Channel errors are pooled into
/// one MSE. Values are capped at [`PSNR_CAP_DB`], which identical images
/// reach exactly; rounding-level differences (e.g. a round trip through
/// 32-bit floats) land on the same cap.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / m).log10()).min(PSNR_CAP_DB))
}

/// Normalized 1-D Gaussian taps of the SSIM window.
pub fn ssim_taps() -> [f64; SSIM_WINDOW] {
    let mut taps = [0.0; SSIM_WINDOW];
    let c = (SSIM_WINDOW / 2) as f64;
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - c;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let s: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= s);
    taps
}

/// Separable "valid" filtering: output is `(h − 10) × (w − 10)`.
fn filter_valid(plane: &[f64], h: usize, w: usize, taps: &[f64; SSIM_WINDOW]) -> Vec<f64> {
    let ow = w - SSIM_WINDOW + 1;
    let oh = h - SSIM_WINDOW + 1;
    let mut rows = vec![0.0; h * ow];
    for y in 0..h {
        for x in 0..ow {
            rows[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * plane[y * w + x + k])
                .sum();
        }
    }
    let mut out = vec![0.0; oh * ow];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = taps
                .iter()
                .enumerate()
                .map(|(k, t)| t * rows[(y + k) * ow + x])
                .sum();
        }
    }
    out
}

/// Mean structural similarity over all fully contained 11×11 Gaussian windows
/// (σ = 1.5). Colour inputs are reduced to luminance first.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let (h, w) = (a.height(), a.width());
    if h.min(w) < SSIM_WINDOW {
        return Err(Error::invalid(format!(
            "ssim needs images at least {SSIM_WINDOW} pixels on each side, got {h}x{w}"
        )));
    }
    let (la, lb) = (a.luminance(), b.luminance());
    let (x, y) = (la.data(), lb.data());
    let taps = ssim_taps();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();
    let mx = filter_valid(x, h, w, &taps);
    let my = filter_valid(y, h, w, &taps);
    let sxx = filter_valid(&xx, h, w, &taps);
    let syy = filter_valid(&yy, h, w, &taps);
    let sxy = filter_valid(&xy, h, w, &taps);
    let n = mx.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cxy = sxy[i] - ux * uy;
            ((2.0 * ux * uy + SSIM_C1) * (2.0 * cxy + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2))
        })
        .sum();
    Ok(total / n as f64)
}

/// Maximum normalized cross-correlation between two kernels over every
/// integer translation at which they overlap.
///
/// Returns 1 exactly when one kernel is a translated, positively scaled copy
/// of the other.
pub fn kernel_similarity(p: &Psf, q: &Psf) -> Result<f64> {
    let np = l2(p.weights());
    let nq = l2(q.weights());
    if np == 0.0 || nq == 0.0 {
        return Err(Error::invalid("kernel similarity of an all-zero kernel"));
    }
    let (sp, sq) = (p.side() as isize, q.side() as isize);
    let mut best = f64::NEG_INFINITY;
    for dy in -(sq - 1)..sp {
        for dx in -(sq - 1)..sp {
            // Σ p(y, x) q(y − dy, x − dx)
            let mut acc = 0.0;
            for y in dy.max(0)..sp.min(sq + dy) {
                for x in dx.max(0)..sp.min(sq + dx) {
                    acc += p.at(y as usize, x as usize) * q.at((y - dy) as usize, (x - dx) as usize);
                }
            }
            best = best.max(acc);
        }
    }
    Ok((best / (np * nq)).min(1.0))
}

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psnr_fixtures() {
        let a = Image::filled(8, 8, 1, 0.3).unwrap();
        assert_eq!(psnr(&a, &a).unwrap(), PSNR_CAP_DB);
        let b = Image::filled(8, 8, 1, 0.4).unwrap();
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
        let c = Image::filled(8, 8, 1, 0.8).unwrap();
        assert!((psnr(&a, &c).unwrap() - 6.020599913279624).abs() < 1e-9);
        assert!(psnr(&a, &Image::filled(8, 9, 1, 0.3).unwrap()).is_err());
    }

    #[test]
    fn ssim_identity_and_constant_patches() {
        let img = Image::from_fn(16, 20, |y, x| ((y * 31 + x * 17) % 13) as f64 / 12.0).unwrap();
        assert!((ssim(&img, &img).unwrap() - 1.0).abs() < 1e-12);
        let (c, d) = (0.4, 0.1);
        let a = Image::filled(12, 12, 1, c).unwrap();
        let b = Image::filled(12, 12, 1, c + d).unwrap();
        let e = c + d;
        let want = (2.0 * c * e + SSIM_C1) / (c * c + e * e + SSIM_C1);
        assert!((ssim(&a, &b).unwrap() - want).abs() < 1e-12);
        assert!(ssim(&Image::filled(10, 12, 1, 0.0).unwrap(), &Image::filled(10, 12, 1, 0.0).unwrap()).is_err());
    }

    #[test]
    fn ks_fixtures() {
        let u = Psf::uniform(3).unwrap();
        let d = Psf::delta(3).unwrap();
        assert!((kernel_similarity(&u, &d).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((kernel_similarity(&u, &u).unwrap() - 1.0).abs() < 1e-12);
        // Shifted delta in a larger canvas.
        let mut w = vec![0.0; 25];
        w[3 * 5 + 3] = 1.0;
        let shifted = Psf::new(5, w).unwrap();
        assert!((kernel_similarity(&d, &shifted).unwrap() - 1.0).abs() < 1e-12);
    }
}
