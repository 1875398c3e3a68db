//! In-memory float images and resampling helpers.

use crate::error::{invalid, Result};
use crate::spectral::Rgb;

/// Row-major sRGB image with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<Rgb>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("image must be non-empty"));
        }
        if pixels.len() != width * height {
            return Err(invalid(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if pixels.iter().flatten().any(|c| !c.is_finite()) {
            return Err(invalid("non-finite pixel value"));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color; width * height])
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn len(&self) -> usize {
        self.pixels.len()
    }
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }
    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }
    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    /// Halve both dimensions (rounding up) by averaging 2×2 blocks.
    pub fn downsample_box(&self) -> RgbImage {
        let (w, h) = (self.width.div_ceil(2), self.height.div_ceil(2));
        let channels: Vec<f64> = self.pixels.iter().flatten().copied().collect();
        let out = box_downsample(&channels, 3, self.width, self.height);
        let pixels = out.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        RgbImage { width: w, height: h, pixels }
    }

    /// Root mean square difference over all pixels and the three channels.
    pub fn rmse(&self, other: &RgbImage) -> Result<f64> {
        if self.width != other.width || self.height != other.height {
            return Err(invalid("image dimensions differ"));
        }
        Ok(rmse(&self.pixels, &other.pixels))
    }
}

pub fn rmse(a: &[Rgb], b: &[Rgb]) -> f64 {
    let sq: f64 = a
        .iter()
        .zip(b)
        .map(|(p, q)| (0..3).map(|c| (p[c] - q[c]).powi(2)).sum::<f64>())
        .sum();
    (sq / (3 * a.len().max(1)) as f64).sqrt()
}

/// 2×2 box average of an interleaved `channels`-channel map. Odd trailing
/// rows/columns average the pixels that exist.
pub fn box_downsample(data: &[f64], channels: usize, width: usize, height: usize) -> Vec<f64> {
    let (w, h) = (width.div_ceil(2), height.div_ceil(2));
    let mut out = vec![0.0; w * h * channels];
    for y in 0..h {
        for x in 0..w {
            let mut count = 0.0;
            let dst = &mut out[(y * w + x) * channels..(y * w + x + 1) * channels];
            for sy in 2 * y..(2 * y + 2).min(height) {
                for sx in 2 * x..(2 * x + 2).min(width) {
                    let src = &data[(sy * width + sx) * channels..(sy * width + sx + 1) * channels];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += s;
                    }
                    count += 1.0;
                }
            }
            dst.iter_mut().for_each(|v| *v /= count);
        }
    }
    out
}

/// Bilinear resize of an interleaved multi-channel map, sampling at pixel
/// centres.
pub fn bilinear_resize(
    data: &[f64],
    channels: usize,
    (src_w, src_h): (usize, usize),
    (dst_w, dst_h): (usize, usize),
) -> Vec<f64> {
    let mut out = vec![0.0; dst_w * dst_h * channels];
    let sx = src_w as f64 / dst_w as f64;
    let sy = src_h as f64 / dst_h as f64;
    for y in 0..dst_h {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (src_h - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(src_h - 1);
        let ty = fy - y0 as f64;
        for x in 0..dst_w {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (src_w - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(src_w - 1);
            let tx = fx - x0 as f64;
            for c in 0..channels {
                let at = |xx: usize, yy: usize| data[(yy * src_w + xx) * channels + c];
                let top = at(x0, y0) * (1.0 - tx) + at(x1, y0) * tx;
                let bot = at(x0, y1) * (1.0 - tx) + at(x1, y1) * tx;
                out[(y * dst_w + x) * channels + c] = top * (1.0 - ty) + bot * ty;
            }
        }
    }
    out
}
