//! Circular forward-difference gradient operator.

use crate::image::Image;

/// Horizontal and vertical forward differences of an image.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub horizontal: Image,
    pub vertical: Image,
}

impl GradientField {
    pub fn zeros_like(img: &Image) -> Self {
        Self {
            horizontal: Image::zeros_like(img),
            vertical: Image::zeros_like(img),
        }
    }

    pub fn height(&self) -> usize {
        self.horizontal.height()
    }

    pub fn width(&self) -> usize {
        self.horizontal.width()
    }

    /// Number of sites where either component is nonzero.
    pub fn nonzero_sites(&self) -> usize {
        self.horizontal
            .data()
            .iter()
            .zip(self.vertical.data())
            .filter(|(h, v)| **h != 0.0 || **v != 0.0)
            .count()
    }
}

/// `h(y,x) = I(y, x+1) − I(y, x)` and `v(y,x) = I(y+1, x) − I(y, x)`, with
/// indices wrapping so the operator is diagonal in the Fourier basis.
pub fn gradient(img: &Image) -> GradientField {
    let (h, w) = (img.height(), img.width());
    let horizontal = img.map_planes(|p| {
        let mut out = vec![0.0; h * w];
        for y in 0..h {
            for x in 0..w {
                out[y * w + x] = p[y * w + (x + 1) % w] - p[y * w + x];
            }
        }
        out
    });
    let vertical = img.map_planes(|p| {
        let mut out = vec![0.0; h * w];
        for y in 0..h {
            let yn = (y + 1) % h;
            for x in 0..w {
                out[y * w + x] = p[yn * w + x] - p[y * w + x];
            }
        }
        out
    });
    GradientField {
        horizontal,
        vertical,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_has_zero_gradient() {
        let g = gradient(&Image::filled(4, 6, 3, 0.7).unwrap());
        assert!(g.horizontal.data().iter().all(|v| *v == 0.0));
        assert!(g.vertical.data().iter().all(|v| *v == 0.0));
        assert_eq!(g.nonzero_sites(), 0);
    }

    #[test]
    fn horizontal_ramp() {
        let s = 0.125;
        let img = Image::from_fn(3, 5, |_, x| x as f64 * s).unwrap();
        let g = gradient(&img);
        for y in 0..3 {
            for x in 0..4 {
                assert!((g.horizontal.get(0, y, x) - s).abs() < 1e-15);
            }
            assert!((g.horizontal.get(0, y, 4) + 4.0 * s).abs() < 1e-15);
        }
        assert!(g.vertical.data().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn arbitrary_3x3_matches_elementwise_differences() {
        let vals = [0.1, 0.9, 0.4, 0.3, 0.0, 0.8, 0.5, 0.2, 0.6];
        let img = Image::gray(3, 3, vals.to_vec()).unwrap();
        let g = gradient(&img);
        let at = |y: usize, x: usize| vals[(y % 3) * 3 + (x % 3)];
        for y in 0..3 {
            for x in 0..3 {
                assert_eq!(g.horizontal.get(0, y, x), at(y, x + 1) - at(y, x));
                assert_eq!(g.vertical.get(0, y, x), at(y + 1, x) - at(y, x));
            }
        }
    }

    #[test]
    fn wrapped_differences_sum_to_zero() {
        let img = Image::from_fn(5, 4, |y, x| ((y * 7 + x * 3) % 5) as f64 / 4.0).unwrap();
        let g = gradient(&img);
        for y in 0..5 {
            let s: f64 = (0..4).map(|x| g.horizontal.get(0, y, x)).sum();
            assert!(s.abs() < 1e-14);
        }
        for x in 0..4 {
            let s: f64 = (0..5).map(|y| g.vertical.get(0, y, x)).sum();
            assert!(s.abs() < 1e-14);
        }
    }
}
