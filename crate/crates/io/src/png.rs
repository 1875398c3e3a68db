//! PNG in and out. Only 8- and 16-bit PNGs are read; alpha is ignored.

use std::io::Cursor;
use std::path::Path;

use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{DynamicImage, ImageFormat, ImageReader};
use pigment_core::RgbImage;

use crate::error::{file_err, IoError, Result};
use crate::fs::atomic_write;

pub fn load_image(path: &Path) -> Result<RgbImage> {
    let bytes = std::fs::read(path).map_err(file_err(path))?;
    decode_png(&bytes)
}

pub fn decode_png(bytes: &[u8]) -> Result<RgbImage> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| IoError::Decode(e.to_string()))?;
    if reader.format() != Some(ImageFormat::Png) {
        return Err(IoError::UnsupportedImage("not a PNG file".into()));
    }
    let img = reader.decode().map_err(|e| IoError::Decode(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<[f64; 3]> = match img {
        DynamicImage::ImageLuma8(_) | DynamicImage::ImageLumaA8(_) | DynamicImage::ImageRgb8(_) | DynamicImage::ImageRgba8(_) => img
            .to_rgb8()
            .pixels()
            .map(|p| p.0.map(|v| f64::from(v) / 255.0))
            .collect(),
        DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)
        | DynamicImage::ImageRgb16(_)
        | DynamicImage::ImageRgba16(_) => img
            .to_rgb16()
            .pixels()
            .map(|p| p.0.map(|v| f64::from(v) / 65535.0))
            .collect(),
        other => {
            return Err(IoError::UnsupportedImage(format!("pixel format {:?}", other.color())));
        }
    };
    Ok(RgbImage::new(w, h, pixels)?)
}

fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// 8-bit RGB PNG bytes.
pub fn encode_png(img: &RgbImage) -> Result<Vec<u8>> {
    let raw: Vec<u8> = img.pixels().iter().flat_map(|p| p.map(quantize)).collect();
    let buf = image::RgbImage::from_raw(img.width() as u32, img.height() as u32, raw)
        .expect("buffer length matches the image size");
    write_png(DynamicImage::ImageRgb8(buf))
}

/// 8-bit grayscale PNG bytes of values in `[0, 1]`.
pub fn encode_gray_png(values: &[f64], width: usize, height: usize) -> Result<Vec<u8>> {
    let raw: Vec<u8> = values.iter().map(|&v| quantize(v)).collect();
    let buf = image::GrayImage::from_raw(width as u32, height as u32, raw)
        .ok_or_else(|| IoError::UnsupportedImage("gray buffer does not match its size".into()))?;
    write_png(DynamicImage::ImageLuma8(buf))
}

fn write_png(img: DynamicImage) -> Result<Vec<u8>> {
    // Fast compression: previews are re-encoded on every edit.
    let mut out = Vec::new();
    let enc = PngEncoder::new_with_quality(&mut out, CompressionType::Fast, FilterType::Adaptive);
    img.write_with_encoder(enc)
        .map_err(|e| IoError::Decode(e.to_string()))?;
    Ok(out)
}

pub fn save_image(img: &RgbImage, path: &Path) -> Result<()> {
    atomic_write(path, &encode_png(img)?)
}

pub fn save_gray(values: &[f64], width: usize, height: usize, path: &Path) -> Result<()> {
    atomic_write(path, &encode_gray_png(values, width, height)?)
}
