//! 8-bit PNG import and export.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::image::Image;

/// Decodes PNG bytes. Grayscale sources give one channel, everything else
/// three (alpha is dropped). Samples are divided by 255.
pub fn decode_png(bytes: &[u8]) -> Result<Image> {
    let dynimg = image::load_from_memory_with_format(bytes, ImageFormat::Png)?;
    from_dynamic(dynimg)
}

pub fn read_png(path: &Path) -> Result<Image> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_png(&bytes)
}

fn from_dynamic(dynimg: DynamicImage) -> Result<Image> {
    let (w, h) = (dynimg.width() as usize, dynimg.height() as usize);
    let gray = matches!(
        dynimg,
        DynamicImage::ImageLuma8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLumaA16(_)
    );
    if gray {
        let buf = dynimg.into_luma8();
        let data = buf.as_raw().iter().map(|&v| v as f64 / 255.0).collect();
        return Image::new(h, w, 1, data);
    }
    let buf = dynimg.into_rgb8();
    let raw = buf.as_raw();
    let n = w * h;
    let mut data = vec![0.0; 3 * n];
    for i in 0..n {
        for c in 0..3 {
            data[c * n + i] = raw[3 * i + c] as f64 / 255.0;
        }
    }
    Image::new(h, w, 3, data)
}

#[inline]
fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Encodes an image as 8-bit PNG, clamping to `[0, 1]`.
pub fn encode_png(img: &Image) -> Result<Vec<u8>> {
    let (w, h) = (img.width() as u32, img.height() as u32);
    let n = img.plane_len();
    let dynimg = if img.channels() == 1 {
        let raw = img.data().iter().map(|&v| quantize(v)).collect();
        DynamicImage::ImageLuma8(GrayImage::from_raw(w, h, raw).expect("buffer size matches"))
    } else {
        let d = img.data();
        let raw = (0..n)
            .flat_map(|i| (0..3).map(move |c| quantize(d[c * n + i])))
            .collect();
        DynamicImage::ImageRgb8(RgbImage::from_raw(w, h, raw).expect("buffer size matches"))
    };
    let mut out = Cursor::new(Vec::new());
    dynimg.write_to(&mut out, ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn write_png(img: &Image, path: &Path) -> Result<()> {
    let bytes = encode_png(img)?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Resizes with a triangle (bilinear) filter; a no-op when already `size × size`.
pub fn resize_square(img: &Image, size: usize) -> Result<Image> {
    if img.height() == size && img.width() == size {
        return Ok(img.clone());
    }
    let n = img.plane_len();
    let (w, h) = (img.width() as u32, img.height() as u32);
    let mut data = Vec::with_capacity(size * size * img.channels());
    for c in 0..img.channels() {
        let plane: Vec<f32> = img.data()[c * n..(c + 1) * n].iter().map(|&v| v as f32).collect();
        let buf = image::ImageBuffer::<image::Luma<f32>, Vec<f32>>::from_raw(w, h, plane)
            .expect("buffer size matches");
        let resized = image::imageops::resize(
            &buf,
            size as u32,
            size as u32,
            image::imageops::FilterType::Triangle,
        );
        data.extend(resized.into_raw().into_iter().map(f64::from));
    }
    Image::new(size, size, img.channels(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_roundtrip_quantizes() {
        let img = Image::new(2, 3, 3, (0..18).map(|i| i as f64 / 17.0).collect()).unwrap();
        let back = decode_png(&encode_png(&img).unwrap()).unwrap();
        assert!(back.same_shape(&img));
        assert!(back.max_abs_diff(&img) <= 0.5 / 255.0 + 1e-12);
        let gray = Image::gray(2, 2, vec![-0.5, 0.0, 0.5, 2.0]).unwrap();
        let back = decode_png(&encode_png(&gray).unwrap()).unwrap();
        assert_eq!(back.channels(), 1);
        assert_eq!(back.data(), &[0.0, 0.0, 128.0 / 255.0, 1.0]);
    }

    #[test]
    fn garbage_is_an_error() {
        assert!(decode_png(b"not a png").is_err());
    }
}
