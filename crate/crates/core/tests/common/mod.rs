#![allow(dead_code)]

pub mod gradcheck;
pub mod oracle;

use deblur_core::image::Image;
use deblur_core::network::Tensor;
use deblur_core::rng::mix64;

/// Deterministic values in `[-1, 1)`.
pub fn pseudo(n: usize, salt: u64) -> Vec<f64> {
    (0..n)
        .map(|i| (mix64(i as u64 ^ salt.rotate_left(29)) % 1_000_000) as f64 / 500_000.0 - 1.0)
        .collect()
}

pub fn pseudo_tensor(c: usize, h: usize, w: usize, salt: u64) -> Tensor<f64> {
    Tensor::from_vec(c, h, w, pseudo(c * h * w, salt)).unwrap()
}

pub fn pseudo_image(h: usize, w: usize, salt: u64) -> Image {
    Image::gray(h, w, pseudo(h * w, salt).into_iter().map(|v| 0.5 + 0.5 * v).collect()).unwrap()
}

/// Central difference of `f` at `x` along coordinate `i`.
pub fn central_difference(x: &mut [f64], i: usize, h: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + h;
    let plus = f(x);
    x[i] = orig - h;
    let minus = f(x);
    x[i] = orig;
    (plus - minus) / (2.0 * h)
}

/// Element-wise relative error, measured only where |fd| > floor.
/// Returns (worst relative error, number of checked entries).
pub fn worst_relative_error(analytic: &[f64], fd: &[f64], floor: f64) -> (f64, usize) {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (a, n) in analytic.iter().zip(fd) {
        if n.abs() > floor {
            checked += 1;
            worst = worst.max((a - n).abs() / a.abs().max(n.abs()));
        }
    }
    (worst, checked)
}

/// An image-range triple (noisy, blurry, sharp) as 64-bit tensors.
pub fn scene_triple(side: usize, seed: u64) -> (Tensor<f64>, Tensor<f64>, Tensor<f64>) {
    use deblur_core::fixtures::textured_scene;
    use deblur_core::synthesis::{add_noise, blur, NoiseSpec};
    use deblur_core::Psf;
    let sharp = textured_scene(side, side, seed);
    let psf = Psf::from_unnormalized(3, vec![0.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 0.0]).unwrap();
    let blurry = blur(&sharp, &psf).unwrap();
    let noisy = add_noise(&blurry, &NoiseSpec { sigma: 20.0, seed }).unwrap();
    (
        Tensor::from_image(&noisy),
        Tensor::from_image(&blurry),
        Tensor::from_image(&sharp),
    )
}
