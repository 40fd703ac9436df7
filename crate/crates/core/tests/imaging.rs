mod common;

use common::oracle::{circ_conv, embed};
use common::{pseudo, pseudo_image};
use deblur_core::metrics::{ssim_taps, SSIM_C1, SSIM_C2, SSIM_WINDOW};
use deblur_core::{convolve, fft_convolve, kernel_similarity, psnr, ssim, BoundaryMode, Image, Psf};
use proptest::prelude::*;

fn positive_psf(side: usize, salt: u64) -> Psf {
    Psf::from_unnormalized(side, pseudo(side * side, salt).iter().map(|v| v.abs() + 1e-3).collect()).unwrap()
}

#[test]
fn circular_convolution_matches_spatial_oracle() {
    let img = pseudo_image(16, 16, 1);
    let psf = positive_psf(5, 2);
    let want = circ_conv(img.data(), &embed(psf.weights(), 5, 16, 16), 16, 16);
    for got in [convolve(&img, &psf, BoundaryMode::Circular).unwrap(), fft_convolve(&img, &psf).unwrap()] {
        let d = got.data().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d <= 1e-12, "max abs difference {d:e}");
    }
}

#[test]
fn ssim_of_constant_pair_is_luminance_term() {
    let (c, d) = (0.3, 0.25);
    let a = Image::filled(16, 16, 1, c).unwrap();
    let b = Image::filled(16, 16, 1, c + d).unwrap();
    let want = (2.0 * c * (c + d) + SSIM_C1) / (c * c + (c + d) * (c + d) + SSIM_C1);
    assert!((ssim(&a, &b).unwrap() - want).abs() <= 1e-12);
}

/// Direct per-window SSIM with the 2-D Gaussian weights.
fn ssim_oracle(a: &Image, b: &Image) -> f64 {
    let (h, w) = (a.height(), a.width());
    let t = ssim_taps();
    let mut total = 0.0;
    let mut count = 0;
    for y0 in 0..=h - SSIM_WINDOW {
        for x0 in 0..=w - SSIM_WINDOW {
            let (mut ux, mut uy) = (0.0, 0.0);
            for i in 0..SSIM_WINDOW {
                for j in 0..SSIM_WINDOW {
                    let k = t[i] * t[j];
                    ux += k * a.get(0, y0 + i, x0 + j);
                    uy += k * b.get(0, y0 + i, x0 + j);
                }
            }
            let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
            for i in 0..SSIM_WINDOW {
                for j in 0..SSIM_WINDOW {
                    let k = t[i] * t[j];
                    let (p, q) = (a.get(0, y0 + i, x0 + j) - ux, b.get(0, y0 + i, x0 + j) - uy);
                    vx += k * p * p;
                    vy += k * q * q;
                    cxy += k * p * q;
                }
            }
            total += ((2.0 * ux * uy + SSIM_C1) * (2.0 * cxy + SSIM_C2))
                / ((ux * ux + uy * uy + SSIM_C1) * (vx + vy + SSIM_C2));
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn ssim_matches_window_oracle_on_reflected_contrast() {
    let a = pseudo_image(20, 23, 3);
    let mean = a.mean();
    let b = a.map_planes(|p| p.iter().map(|v| 2.0 * mean - v).collect());
    let got = ssim(&a, &b).unwrap();
    let want = ssim_oracle(&a, &b);
    assert!(got < 0.0, "reflected contrast should anti-correlate: {got}");
    assert!((got - want).abs() <= 1e-10, "{got} vs {want}");
}

fn kernel_strategy() -> impl Strategy<Value = Psf> {
    (0usize..4).prop_flat_map(|half| {
        let side = 2 * half + 1;
        prop::collection::vec(0.0f64..1.0, side * side).prop_filter_map("non-zero", move |w| {
            Psf::from_unnormalized(side, w).ok()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fft_and_direct_convolution_agree(h in 4usize..=64, w in 4usize..=64, half in 0usize..6, salt in any::<u64>()) {
        let side = (2 * half + 1).min(2 * ((h.min(w) - 1) / 2) + 1);
        let img = pseudo_image(h, w, salt);
        let psf = positive_psf(side, salt ^ 0x5a);
        let direct = convolve(&img, &psf, BoundaryMode::Circular).unwrap();
        let fast = fft_convolve(&img, &psf).unwrap();
        prop_assert!(direct.max_abs_diff(&fast) <= 1e-6);
    }

    #[test]
    fn circular_convolution_preserves_mean(h in 4usize..=24, w in 4usize..=24, salt in any::<u64>()) {
        let img = pseudo_image(h, w, salt);
        let psf = positive_psf(3, salt.wrapping_add(1));
        let out = convolve(&img, &psf, BoundaryMode::Circular).unwrap();
        prop_assert!((out.mean() - img.mean()).abs() <= 1e-12);
    }

    #[test]
    fn psnr_and_ssim_are_symmetric(h in 11usize..=24, w in 11usize..=24, salt in any::<u64>()) {
        let a = pseudo_image(h, w, salt);
        let b = pseudo_image(h, w, salt.wrapping_add(7));
        prop_assert_eq!(psnr(&a, &b).unwrap(), psnr(&b, &a).unwrap());
        prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() <= 1e-12);
    }

    #[test]
    fn kernel_similarity_is_symmetric_and_bounded(p in kernel_strategy(), q in kernel_strategy()) {
        let pq = kernel_similarity(&p, &q).unwrap();
        let qp = kernel_similarity(&q, &p).unwrap();
        prop_assert!((pq - qp).abs() <= 1e-12);
        prop_assert!((0.0..=1.0).contains(&pq));
        prop_assert!((kernel_similarity(&p, &p).unwrap() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn kernel_similarity_ignores_translation(p in kernel_strategy(), pad in 1usize..3, oy in 0usize..5, ox in 0usize..5) {
        let side = p.side() + 2 * pad;
        let room = 2 * pad;
        let (oy, ox) = (oy % (room + 1), ox % (room + 1));
        let mut canvas = vec![0.0; side * side];
        for y in 0..p.side() {
            for x in 0..p.side() {
                canvas[(y + oy) * side + x + ox] = p.at(y, x);
            }
        }
        let moved = Psf::from_unnormalized(side, canvas).unwrap();
        prop_assert!((kernel_similarity(&p, &moved).unwrap() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn psf_text_round_trips(p in kernel_strategy()) {
        let back = Psf::parse_text(&p.to_text()).unwrap();
        prop_assert_eq!(back, p);
    }
}
