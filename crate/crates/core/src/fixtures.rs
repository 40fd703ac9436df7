//! Procedural sharp scenes used for demos, tests and toy datasets.
//!
//! Scenes are piecewise-smooth: a shaded background, overlapping flat and
//! shaded ellipses and rectangles, and a faint high-frequency texture so that
//! the spectrum has no empty bins.

use rand::Rng;

use crate::image::Image;
use crate::rng::rng_from;

/// Deterministic `height × width` grayscale scene in `[0, 1]`.
pub fn textured_scene(height: usize, width: usize, seed: u64) -> Image {
    let mut rng = rng_from(seed);
    let (hf, wf) = (height as f64, width as f64);
    let base = rng.random_range(0.2..0.6);
    let gy = rng.random_range(-0.3..0.3);
    let gx = rng.random_range(-0.3..0.3);
    let mut data: Vec<f64> = (0..height * width)
        .map(|i| {
            let (y, x) = ((i / width) as f64 / hf, (i % width) as f64 / wf);
            base + gy * (y - 0.5) + gx * (x - 0.5)
        })
        .collect();

    let shapes = rng.random_range(5..10);
    for _ in 0..shapes {
        let cy = rng.random_range(0.0..hf);
        let cx = rng.random_range(0.0..wf);
        let ry = rng.random_range(0.08..0.35) * hf;
        let rx = rng.random_range(0.08..0.35) * wf;
        let level = rng.random_range(0.0..1.0);
        let shade = rng.random_range(-0.15..0.15);
        let ellipse = rng.random_bool(0.5);
        for y in 0..height {
            for x in 0..width {
                let dy = (y as f64 - cy) / ry;
                let dx = (x as f64 - cx) / rx;
                let inside = if ellipse {
                    dy * dy + dx * dx <= 1.0
                } else {
                    dy.abs() <= 1.0 && dx.abs() <= 1.0
                };
                if inside {
                    data[y * width + x] = level + shade * dy;
                }
            }
        }
    }

    let fy = rng.random_range(0.6..1.4);
    let fx = rng.random_range(0.6..1.4);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    for y in 0..height {
        for x in 0..width {
            let t = 0.03 * (fy * y as f64 + phase).sin() * (fx * x as f64).cos();
            let v = &mut data[y * width + x];
            *v = (*v + t).clamp(0.0, 1.0);
        }
    }
    Image::gray(height, width, data).expect("dimensions are consistent")
}
