//! The persisted decomposition that every edit transforms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::image::RgbImage;
use crate::model::{Palette, WeightMap};
use crate::solver::SolverConfig;
use crate::spectral::km::km_scalar;
use crate::spectral::{encode_linear, RenderContext, Rgb, COEFF_FLOOR};

/// Samples of the finest grid; sizes stack buffers.
const MAX_BANDS: usize = 33;

/// Where a decomposition came from.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// Hex SHA-256 of the source image file.
    pub source_sha256: Option<String>,
    pub config: Option<SolverConfig>,
}

/// Paint pasted on top of the image: at each listed pixel, a film of the
/// given mixture (same palette) and thickness is laid over the pixel's
/// current reflectance.
#[derive(Debug, Clone, PartialEq)]
pub struct PasteLayer {
    pub thickness: f64,
    pub pixels: Vec<usize>,
    /// `pixels.len() × M` mixing weights of the film.
    pub weights: Vec<f64>,
}

/// Image size, palette, weights and render settings.
///
/// Weights, palette and layer values are kept exactly representable in
/// `f32`, the on-disk precision, so saving and loading is lossless.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionBundle {
    width: usize,
    height: usize,
    palette: Palette,
    weights: WeightMap,
    context: RenderContext,
    layers: Vec<PasteLayer>,
    provenance: Provenance,
}

fn round_weight(v: f64) -> f64 {
    (v as f32) as f64
}

fn round_coeff(v: f64) -> f64 {
    let r = v as f32;
    if (r as f64) < COEFF_FLOOR {
        let mut up = COEFF_FLOOR as f32;
        while (up as f64) < COEFF_FLOOR {
            up = f32::from_bits(up.to_bits() + 1);
        }
        return up as f64;
    }
    r as f64
}

impl DecompositionBundle {
    pub fn new(width: usize, height: usize, palette: Palette, weights: WeightMap, context: RenderContext) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(invalid("bundle dimensions must be positive"));
        }
        if weights.pixels() != width * height {
            return Err(invalid(format!(
                "{} weight rows for a {width}x{height} image",
                weights.pixels()
            )));
        }
        if weights.pigments() != palette.len() {
            return Err(invalid("weight columns do not match the palette size"));
        }
        if palette.grid() != context.grid() {
            return Err(invalid("palette and render context use different grids"));
        }
        let palette = Palette::new(palette.grid(), palette.coeffs().iter().map(|&v| round_coeff(v)).collect())?;
        let m = weights.pigments();
        let weights = WeightMap::new(m, weights.values().iter().map(|&v| round_weight(v)).collect())?;
        Ok(Self {
            width,
            height,
            palette,
            weights,
            context,
            layers: Vec::new(),
            provenance: Provenance::default(),
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn with_weights(&self, weights: WeightMap) -> Result<Self> {
        let mut b = Self::new(self.width, self.height, self.palette.clone(), weights, self.context.clone())?;
        b.layers = self.layers.clone();
        b.provenance = self.provenance.clone();
        Ok(b)
    }

    pub fn with_palette(&self, palette: Palette) -> Result<Self> {
        let mut b = Self::new(self.width, self.height, palette, self.weights.clone(), self.context.clone())?;
        b.layers = self.layers.clone();
        b.provenance = self.provenance.clone();
        Ok(b)
    }

    /// Replace the paste layers (validated against the bundle).
    pub fn with_layers(&self, layers: Vec<PasteLayer>) -> Result<Self> {
        let m = self.palette.len();
        let n = self.pixels();
        let mut rounded = Vec::with_capacity(layers.len());
        for layer in layers {
            if !(layer.thickness.is_finite() && layer.thickness >= 0.0) {
                return Err(invalid("layer thickness must be finite and non-negative"));
            }
            if layer.weights.len() != layer.pixels.len() * m {
                return Err(invalid("layer weights do not match its pixels"));
            }
            if layer.pixels.iter().any(|&p| p >= n) {
                return Err(invalid("layer pixel out of range"));
            }
            if layer.weights.iter().any(|w| !w.is_finite() || !(0.0..=1.0).contains(w)) {
                return Err(invalid("layer weights must lie in [0, 1]"));
            }
            if layer.weights.chunks_exact(m).any(|r| r.iter().sum::<f64>() <= 0.0) {
                return Err(invalid("layer has an all-zero weight row"));
            }
            rounded.push(PasteLayer {
                thickness: round_weight(layer.thickness),
                pixels: layer.pixels,
                weights: layer.weights.iter().map(|&v| round_weight(v)).collect(),
            });
        }
        let mut b = self.clone();
        b.layers = rounded;
        Ok(b)
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }
    pub fn palette(&self) -> &Palette {
        &self.palette
    }
    pub fn weights(&self) -> &WeightMap {
        &self.weights
    }
    pub fn context(&self) -> &RenderContext {
        &self.context
    }
    pub fn layers(&self) -> &[PasteLayer] {
        &self.layers
    }
    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Reflectance of the weighted mixture at pixel `p`, before any paste
    /// layers. All-zero rows show the bare substrate.
    pub fn mixture_spectrum(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.context.len()];
        let ctx = &self.context;
        self.spectrum_into(self.weights.row(p), ctx.substrate(), ctx.thickness(), &mut out);
        out
    }

    /// KM reflectance of the mixture `row` over `substrate`, written to `out`
    /// (which may alias nothing the caller still needs).
    fn spectrum_into(&self, row: &[f64], substrate: &[f64], t: f64, out: &mut [f64]) {
        let l = self.context.len();
        let mut k = [0.0; 2 * MAX_BANDS];
        if self.palette.mix_into(row, &mut k[..2 * l]).is_err() {
            out.copy_from_slice(substrate);
            return;
        }
        for j in 0..l {
            out[j] = km_scalar(k[j], k[l + j], substrate[j], t).clamp(0.0, 1.0);
        }
    }

    /// Pixel `p`'s final reflectance, paste layers included, into `out`.
    fn pixel_spectrum(&self, p: usize, on_top: &[(usize, usize)], out: &mut [f64]) {
        let ctx = &self.context;
        self.spectrum_into(self.weights.row(p), ctx.substrate(), ctx.thickness(), out);
        let m = self.palette.len();
        let l = ctx.len();
        let mut under = [0.0; MAX_BANDS];
        for &(li, k) in on_top {
            let layer = &self.layers[li];
            under[..l].copy_from_slice(out);
            self.spectrum_into(&layer.weights[k * m..(k + 1) * m], &under[..l], layer.thickness, out);
        }
    }

    /// `(layer, row)` pairs covering each pixel, in paste order.
    fn layers_by_pixel(&self) -> Vec<Vec<(usize, usize)>> {
        let mut on_top: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.pixels()];
        for (li, layer) in self.layers.iter().enumerate() {
            for (k, &p) in layer.pixels.iter().enumerate() {
                on_top[p].push((li, k));
            }
        }
        on_top
    }

    /// Final reflectance at every pixel, paste layers included.
    pub fn spectra(&self) -> Vec<Vec<f64>> {
        let on_top = self.layers_by_pixel();
        let l = self.context.len();
        (0..self.pixels())
            .into_par_iter()
            .map(|p| {
                let mut r = vec![0.0; l];
                self.pixel_spectrum(p, &on_top[p], &mut r);
                r
            })
            .collect()
    }

    /// sRGB rendering of the bundle.
    pub fn render(&self) -> RgbImage {
        let on_top = self.layers_by_pixel();
        let l = self.context.len();
        let pixels: Vec<Rgb> = (0..self.pixels())
            .into_par_iter()
            .with_min_len(1024)
            .map(|p| {
                let mut r = [0.0; MAX_BANDS];
                self.pixel_spectrum(p, &on_top[p], &mut r[..l]);
                encode_linear(self.context.linear_rgb(&r[..l]))
            })
            .collect();
        RgbImage::new(self.width, self.height, pixels).expect("rendered image has bundle dimensions")
    }
}
