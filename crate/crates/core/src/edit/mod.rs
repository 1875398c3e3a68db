//! Pigment-space edits. Every edit takes a bundle by reference and returns a
//! new one; the input is never modified.

mod edges;
mod inpaint;

pub use edges::{edge_enhance, mask_from_weights, weight_edges, EdgeMap};
pub use inpaint::{cut_inpaint, cut_inpaint_with_radius, DEFAULT_INPAINT_RADIUS};

use serde::{Deserialize, Serialize};

use crate::bundle::{DecompositionBundle, PasteLayer};
use crate::error::{invalid, Result};
use crate::model::WeightMap;
use crate::spectral::{PigmentKm, COEFF_FLOOR};

/// Per-pixel boolean selection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelMask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl PixelMask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(invalid("mask size does not match its dimensions"));
        }
        Ok(Self { width, height, bits })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    /// Axis-aligned rectangle `[x0, x1) × [y0, y1)`, clipped to the image.
    pub fn rect(width: usize, height: usize, x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        let mut m = Self::empty(width, height);
        for y in y0.min(height)..y1.min(height) {
            for x in x0.min(width)..x1.min(width) {
                m.bits[y * width + x] = true;
            }
        }
        m
    }

    pub fn width(&self) -> usize {
        self.width
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }
    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }
    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    fn check(&self, bundle: &DecompositionBundle) -> Result<()> {
        if self.width != bundle.width() || self.height != bundle.height() {
            return Err(invalid("mask dimensions do not match the bundle"));
        }
        Ok(())
    }
}

fn check_index(bundle: &DecompositionBundle, i: usize) -> Result<()> {
    if i >= bundle.palette().len() {
        return Err(invalid(format!(
            "pigment index {i} out of range for {} pigments",
            bundle.palette().len()
        )));
    }
    Ok(())
}

/// Rescale `row` in place to sum to `target`; all-zero rows are left alone.
fn renormalize_row(row: &mut [f64], target: f64) {
    let s: f64 = row.iter().sum();
    if s > 0.0 {
        let f = target / s;
        row.iter_mut().for_each(|v| *v = (*v * f).clamp(0.0, 1.0));
    }
}

/// Multiply weight column `i` by `factor` (clamped to `[0, 1]`), optionally
/// rescaling each row to sum to one.
pub fn scale_weight(bundle: &DecompositionBundle, i: usize, factor: f64, renormalize: bool) -> Result<DecompositionBundle> {
    check_index(bundle, i)?;
    if !(factor.is_finite() && factor >= 0.0) {
        return Err(invalid("weight factor must be finite and non-negative"));
    }
    let m = bundle.palette().len();
    let mut values = bundle.weights().values().to_vec();
    for row in values.chunks_exact_mut(m) {
        row[i] = (row[i] * factor).clamp(0.0, 1.0);
        if renormalize {
            renormalize_row(row, 1.0);
        }
    }
    bundle.with_weights(WeightMap::new(m, values)?)
}

/// Replace pigment `i`; weights are untouched.
pub fn swap_pigment(bundle: &DecompositionBundle, i: usize, replacement: &PigmentKm) -> Result<DecompositionBundle> {
    check_index(bundle, i)?;
    if replacement.len() != bundle.palette().grid().len() {
        return Err(invalid(format!(
            "replacement has {} wavelengths, bundle uses {}",
            replacement.len(),
            bundle.palette().grid().len()
        )));
    }
    let mut palette = bundle.palette().clone();
    palette.replace(i, replacement)?;
    bundle.with_palette(palette)
}

/// Multiply pigment `i`'s scattering by `factors` (one value, or one per
/// wavelength), keeping absorption fixed. Results are floored at the
/// coefficient floor.
pub fn scale_scattering(bundle: &DecompositionBundle, i: usize, factors: &[f64]) -> Result<DecompositionBundle> {
    check_index(bundle, i)?;
    let l = bundle.palette().grid().len();
    if factors.len() != 1 && factors.len() != l {
        return Err(invalid(format!("expected 1 or {l} scattering factors")));
    }
    if factors.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
        return Err(invalid("scattering factors must be positive"));
    }
    let mut p = bundle.palette().pigment(i);
    for (j, s) in p.s.iter_mut().enumerate() {
        let f = if factors.len() == 1 { factors[0] } else { factors[j] };
        *s = (*s * f).max(COEFF_FLOOR);
    }
    let mut palette = bundle.palette().clone();
    palette.replace(i, &p)?;
    bundle.with_palette(palette)
}

/// How copied paint is applied at the destination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum PasteMode {
    /// A new film of the copied mixture at `thickness`, over the pixel's
    /// current reflectance.
    Layer { thickness: f64 },
    /// Copied weights scaled by `scale` are added to the destination row,
    /// which is then rescaled back to its previous total.
    Mix { scale: f64 },
}

/// Copy the weights of `pigments` under `mask` and paste them displaced by
/// `offset`. The whole displaced mask must fit inside the image. An empty
/// mask leaves the bundle unchanged.
pub fn copy_paste(
    bundle: &DecompositionBundle,
    mask: &PixelMask,
    pigments: &[usize],
    offset: (i64, i64),
    mode: PasteMode,
) -> Result<DecompositionBundle> {
    mask.check(bundle)?;
    for &i in pigments {
        check_index(bundle, i)?;
    }
    match mode {
        PasteMode::Layer { thickness } if !(thickness.is_finite() && thickness >= 0.0) => {
            return Err(invalid("paste thickness must be finite and non-negative"))
        }
        PasteMode::Mix { scale } if !(scale.is_finite() && scale >= 0.0) => {
            return Err(invalid("paste scale must be finite and non-negative"))
        }
        _ => {}
    }
    if mask.is_empty() {
        log::warn!("copy_paste: empty mask, nothing to paste");
        return Ok(bundle.clone());
    }
    let (w, h) = (bundle.width() as i64, bundle.height() as i64);
    let m = bundle.palette().len();
    let mut pairs = Vec::with_capacity(mask.count());
    for (p, _) in mask.bits.iter().enumerate().filter(|(_, b)| **b) {
        let (x, y) = ((p as i64) % w, (p as i64) / w);
        let (dx, dy) = (x + offset.0, y + offset.1);
        if dx < 0 || dy < 0 || dx >= w || dy >= h {
            return Err(invalid("pasted region falls outside the image"));
        }
        pairs.push((p, (dy * w + dx) as usize));
    }
    let copied = |src: usize| -> Vec<f64> {
        let row = bundle.weights().row(src);
        (0..m).map(|k| if pigments.contains(&k) { row[k] } else { 0.0 }).collect()
    };

    match mode {
        PasteMode::Mix { scale } => {
            let mut values = bundle.weights().values().to_vec();
            let original = bundle.weights();
            for &(src, dst) in &pairs {
                let add = copied(src);
                let row = &mut values[dst * m..(dst + 1) * m];
                let before: f64 = original.row(dst).iter().sum();
                for k in 0..m {
                    row[k] = original.row(dst)[k] + scale * add[k];
                }
                renormalize_row(row, if before > 0.0 { before } else { 1.0 });
            }
            bundle.with_weights(WeightMap::new(m, values)?)
        }
        PasteMode::Layer { thickness } => {
            let mut pixels = Vec::with_capacity(pairs.len());
            let mut weights = Vec::with_capacity(pairs.len() * m);
            for &(src, dst) in &pairs {
                let row = copied(src);
                if row.iter().sum::<f64>() > 0.0 {
                    pixels.push(dst);
                    weights.extend(row);
                }
            }
            if pixels.is_empty() {
                log::warn!("copy_paste: copied pigments have no weight under the mask");
                return Ok(bundle.clone());
            }
            let mut layers = bundle.layers().to_vec();
            layers.push(PasteLayer { thickness, pixels, weights });
            bundle.with_layers(layers)
        }
    }
}


#[cfg(test)]
mod tests {
    use super::fixtures::bundle_from;
    use super::*;

    fn luminance(img: &crate::image::RgbImage) -> f64 {
        img.pixels()
            .iter()
            .map(|c| 0.2126 * c[0] + 0.7152 * c[1] + 0.0722 * c[2])
            .sum::<f64>()
            / img.len() as f64
    }

    fn gradient_bundle() -> DecompositionBundle {
        bundle_from(&["cadmium_yellow", "ultramarine_blue", "ivory_black"], 8, 6, |x, y| {
            let a = x as f64 / 7.0;
            let b = y as f64 / 5.0;
            vec![(1.0 - a) * 0.8, a * 0.8, 0.2 * b]
        })
    }

    #[test]
    fn scale_weight_identity_and_removal() {
        let b = gradient_bundle();
        assert_eq!(scale_weight(&b, 1, 1.0, false).unwrap(), b);
        let gone = scale_weight(&b, 1, 0.0, true).unwrap();
        for row in gone.weights().rows() {
            assert_eq!(row[1], 0.0);
            let s: f64 = row.iter().sum();
            assert!(s == 0.0 || (s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn more_black_is_darker() {
        let b = gradient_bundle();
        let before = luminance(&b.render());
        let after = luminance(&scale_weight(&b, 2, 3.0, false).unwrap().render());
        assert!(after < before, "{after} vs {before}");
    }

    #[test]
    fn swap_changes_only_supported_pixels() {
        let b = bundle_from(&["ultramarine_blue", "cadmium_yellow"], 6, 4, |x, _| {
            if x < 3 {
                vec![0.0, 1.0]
            } else {
                vec![0.6, 0.4]
            }
        });
        let green = {
            let dict = crate::dictionary::PigmentDictionary::bundled();
            let i = dict.entries().iter().position(|e| e.name == "phthalo_green").unwrap();
            dict.pigment_on(i, crate::spectral::WavelengthGrid::Bands8).unwrap()
        };
        let before = b.render();
        let same = swap_pigment(&b, 0, &b.palette().pigment(0)).unwrap();
        assert_eq!(same.render(), before);
        let after = swap_pigment(&b, 0, &green).unwrap().render();
        for p in 0..b.pixels() {
            let changed = (0..3).any(|c| (before.pixels()[p][c] - after.pixels()[p][c]).abs() > 1e-6);
            assert_eq!(changed, b.weights().row(p)[0] > 1e-3, "pixel {p}");
        }
        let wrong = PigmentKm::constant(3, 1.0, 1.0).unwrap();
        assert!(swap_pigment(&b, 0, &wrong).is_err());
    }

    #[test]
    fn scattering_brightens_mid_gray() {
        let b = bundle_from(&["payne_gray", "titanium_white"], 1, 1, |_, _| vec![1.0, 0.0]);
        let lum = |b: &DecompositionBundle| luminance(&b.render());
        let base = lum(&b);
        assert_eq!(scale_scattering(&b, 0, &[1.0]).unwrap(), b);
        assert!(lum(&scale_scattering(&b, 0, &[3.0]).unwrap()) > base);
        assert!(lum(&scale_scattering(&b, 0, &[1e-3]).unwrap()) < base);
    }

    #[test]
    fn mix_paste_identity_and_support() {
        let b = bundle_from(&["cadmium_red", "cerulean_blue"], 8, 4, |x, _| {
            if x < 4 {
                vec![0.9, 0.1]
            } else {
                vec![0.0, 1.0]
            }
        });
        let mask = PixelMask::rect(8, 4, 0, 1, 2, 3);
        let same = copy_paste(&b, &mask, &[0], (5, 0), PasteMode::Mix { scale: 0.0 }).unwrap();
        assert_eq!(same, b);
        let pasted = copy_paste(&b, &mask, &[0], (5, 0), PasteMode::Mix { scale: 1.0 }).unwrap();
        let dst = PixelMask::rect(8, 4, 5, 1, 7, 3);
        for p in 0..b.pixels() {
            if p % 8 >= 4 {
                assert_eq!(pasted.weights().row(p)[0] > 0.0, dst.bits()[p], "pixel {p}");
            }
        }
        assert!(copy_paste(&b, &mask, &[0], (7, 0), PasteMode::Mix { scale: 1.0 }).is_err());
        let empty = PixelMask::empty(8, 4);
        assert_eq!(copy_paste(&b, &empty, &[0], (1, 0), PasteMode::Mix { scale: 1.0 }).unwrap(), b);
    }

    #[test]
    fn thick_layer_hides_what_is_underneath() {
        let b = bundle_from(&["ultramarine_blue", "cadmium_yellow"], 4, 1, |x, _| match x {
            0 => vec![1.0, 0.0],
            1 => vec![0.0, 1.0],
            _ => vec![0.5, 0.5],
        });
        let mask = PixelMask::rect(4, 1, 0, 0, 1, 1);
        let one = copy_paste(&b, &mask, &[0], (1, 0), PasteMode::Layer { thickness: 1e4 }).unwrap();
        let two = copy_paste(&b, &mask, &[0], (2, 0), PasteMode::Layer { thickness: 1e4 }).unwrap();
        let (c1, c2) = (one.render().get(1, 0), two.render().get(2, 0));
        let thick = b.context().clone().with_thickness(1e4).unwrap();
        let masstone = crate::spectral::render_pigment(&b.palette().pigment(0), &thick).unwrap();
        for k in 0..3 {
            assert!((c1[k] - c2[k]).abs() < 1e-6);
            assert!((c1[k] - masstone[k]).abs() < 1e-6);
        }
        assert_eq!(one.render().get(3, 0), b.render().get(3, 0));
    }
}
