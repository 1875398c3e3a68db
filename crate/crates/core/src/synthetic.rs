//! Synthetic test scenes: known pigments mixed by smooth random weight fields.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dictionary::PigmentDictionary;
use crate::error::{invalid, Result};
use crate::image::RgbImage;
use crate::model::{render_pixel, Palette, WeightMap};
use crate::spectral::{RenderContext, WavelengthGrid};

/// Row-stochastic weights that vary smoothly over a `width × height` image.
///
/// Each pigment gets a sum of a few random Gaussian bumps; a softmax across
/// pigments turns the bump heights into weights, so every pigment dominates
/// somewhere while transitions stay smooth.
pub fn smooth_weight_field(width: usize, height: usize, m: usize, seed: u64) -> WeightMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = width.max(height) as f64;
    let bumps: Vec<Vec<(f64, f64, f64, f64)>> = (0..m)
        .map(|_| {
            (0..3)
                .map(|_| {
                    (
                        rng.gen_range(0.0..width as f64),
                        rng.gen_range(0.0..height as f64),
                        rng.gen_range(0.12..0.3) * scale,
                        rng.gen_range(0.6..1.0),
                    )
                })
                .collect()
        })
        .collect();
    const SHARPNESS: f64 = 6.0;
    let mut values = Vec::with_capacity(width * height * m);
    let mut row = vec![0.0; m];
    for y in 0..height {
        for x in 0..width {
            for (i, bs) in bumps.iter().enumerate() {
                row[i] = bs
                    .iter()
                    .map(|&(cx, cy, s, a)| {
                        let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                        a * (-d2 / (2.0 * s * s)).exp()
                    })
                    .sum::<f64>();
            }
            let peak = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (SHARPNESS * (v - peak)).exp()).collect();
            let total: f64 = exps.iter().sum();
            values.extend(exps.iter().map(|e| e / total));
        }
    }
    WeightMap::new(m, values).expect("softmax weights lie in [0, 1]")
}

/// A rendered scene together with its ground truth.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub image: RgbImage,
    pub palette: Palette,
    pub weights: WeightMap,
    pub names: Vec<String>,
}

/// Render the named dictionary pigments (resampled to `grid`) mixed by
/// [`smooth_weight_field`] in the standard context of `grid`.
pub fn synthetic_scene(
    dict: &PigmentDictionary,
    names: &[&str],
    grid: WavelengthGrid,
    width: usize,
    height: usize,
    seed: u64,
) -> Result<SyntheticScene> {
    let pigments = names
        .iter()
        .map(|n| {
            let i = dict
                .entries()
                .iter()
                .position(|e| e.name == *n)
                .ok_or_else(|| invalid(format!("no pigment named {n}")))?;
            dict.pigment_on(i, grid)
        })
        .collect::<Result<Vec<_>>>()?;
    let palette = Palette::from_pigments(grid, &pigments)?;
    let weights = smooth_weight_field(width, height, names.len(), seed);
    let ctx = RenderContext::standard(grid);
    let pixels = weights
        .rows()
        .map(|r| render_pixel(r, &palette, &ctx))
        .collect::<Result<Vec<_>>>()?;
    Ok(SyntheticScene {
        image: RgbImage::new(width, height, pixels)?,
        palette,
        weights,
        names: names.iter().map(|s| s.to_string()).collect(),
    })
}
