//! Floating-point raster container.

use crate::error::{Error, Result};

/// Luminance weights applied to RGB planes.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// A planar floating-point image.
///
/// Samples are stored channel-major: each channel is a contiguous row-major
/// `height × width` plane. Values are nominally in `[0, 1]` but may leave that
/// range inside solvers; clamping happens only when exporting to 8-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "image must be non-empty, got {height}x{width}"
            )));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::invalid(format!(
                "image must have 1 or 3 channels, got {channels}"
            )));
        }
        if data.len() != height * width * channels {
            return Err(Error::invalid(format!(
                "data length {} does not match {height}x{width}x{channels}",
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    /// Single-channel image from row-major samples.
    pub fn gray(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        Self::new(height, width, 1, data)
    }

    pub fn filled(height: usize, width: usize, channels: usize, value: f64) -> Result<Self> {
        Self::new(height, width, channels, vec![value; height * width * channels])
    }

    pub fn zeros_like(other: &Image) -> Self {
        Self {
            data: vec![0.0; other.data.len()],
            ..*other
        }
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(height * width);
        for y in 0..height {
            for x in 0..width {
                data.push(f(y, x));
            }
        }
        Self::gray(height, width, data)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn plane_len(&self) -> usize {
        self.height * self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn plane(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, c: usize, y: usize, x: usize, v: f64) {
        self.data[(c * self.height + y) * self.width + x] = v;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.height == other.height && self.width == other.width && self.channels == other.channels
    }

    pub(crate) fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch(format!(
                "{}x{}x{} vs {}x{}x{}",
                self.height, self.width, self.channels, other.height, other.width, other.channels
            )))
        }
    }

    /// Builds a new image with the same shape from a per-plane transform.
    pub fn map_planes(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Image {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.channels {
            let out = f(self.plane(c));
            debug_assert_eq!(out.len(), self.plane_len());
            data.extend(out);
        }
        Image { data, ..*self }
    }

    /// Fixed-weight luminance; single-channel images are returned unchanged.
    pub fn luminance(&self) -> Image {
        if self.channels == 1 {
            return self.clone();
        }
        let n = self.plane_len();
        let data = (0..n)
            .map(|i| {
                LUMA_WEIGHTS
                    .iter()
                    .enumerate()
                    .map(|(c, w)| w * self.data[c * n + i])
                    .sum()
            })
            .collect();
        Image {
            height: self.height,
            width: self.width,
            channels: 1,
            data,
        }
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn clamped(&self) -> Image {
        Image {
            data: self.data.iter().map(|v| v.clamp(0.0, 1.0)).collect(),
            ..*self
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &Image) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// One of the eight symmetries of the pixel grid: bit 2 transposes, then
    /// bit 0 mirrors columns and bit 1 mirrors rows of the result. `t` is
    /// taken mod 8; transposing swaps height and width.
    pub fn dihedral(&self, t: usize) -> Image {
        let (h, w) = (self.height, self.width);
        let transpose = t & 4 != 0;
        let (oh, ow) = if transpose { (w, h) } else { (h, w) };
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.channels {
            let plane = self.plane(c);
            for y in 0..oh {
                for x in 0..ow {
                    let a = if t & 2 != 0 { oh - 1 - y } else { y };
                    let b = if t & 1 != 0 { ow - 1 - x } else { x };
                    let (sy, sx) = if transpose { (b, a) } else { (a, b) };
                    data.push(plane[sy * w + sx]);
                }
            }
        }
        Image { height: oh, width: ow, channels: self.channels, data }
    }
}
