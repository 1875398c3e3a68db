//! Edges of the weight maps, edge-driven thickening and weight-threshold masks.

use crate::bundle::DecompositionBundle;
use crate::error::{invalid, Result};
use crate::model::WeightMap;

use super::{check_index, PixelMask};

/// Per-pixel edge strength in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl EdgeMap {
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }
}

/// Sobel gradient magnitude of one channel, borders replicated.
fn sobel(channel: &[f64], w: usize, h: usize) -> Vec<f64> {
    let at = |x: isize, y: isize| {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        channel[yc * w + xc]
    };
    let mut out = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            out[y as usize * w + x as usize] = (gx * gx + gy * gy).sqrt();
        }
    }
    out
}

/// Sobel magnitude of each weight channel, each scaled to a maximum of one,
/// merged by the per-pixel maximum.
pub fn weight_edges(bundle: &DecompositionBundle) -> EdgeMap {
    let (w, h) = (bundle.width(), bundle.height());
    let mut merged = vec![0.0f64; w * h];
    for i in 0..bundle.palette().len() {
        let mag = sobel(&bundle.weights().channel(i), w, h);
        let peak = mag.iter().cloned().fold(0.0, f64::max);
        if peak > 0.0 {
            for (m, v) in merged.iter_mut().zip(&mag) {
                *m = m.max(v / peak);
            }
        }
    }
    EdgeMap {
        width: w,
        height: h,
        values: merged,
    }
}

/// Thicken paint near edges: every weight is multiplied by
/// `1 + strength · edge` and clamped to one, without renormalising.
pub fn edge_enhance(bundle: &DecompositionBundle, strength: f64) -> Result<DecompositionBundle> {
    if !(strength.is_finite() && strength >= 0.0) {
        return Err(invalid("edge strength must be finite and non-negative"));
    }
    let edges = weight_edges(bundle);
    let m = bundle.palette().len();
    let mut values = bundle.weights().values().to_vec();
    for (row, e) in values.chunks_exact_mut(m).zip(&edges.values) {
        let f = 1.0 + strength * e;
        row.iter_mut().for_each(|v| *v = (*v * f).min(1.0));
    }
    bundle.with_weights(WeightMap::new(m, values)?)
}

/// Pixels where weight `i` is at least `threshold`, cleaned by one 3×3
/// majority vote (windows are cut at the border).
pub fn mask_from_weights(bundle: &DecompositionBundle, i: usize, threshold: f64) -> Result<PixelMask> {
    check_index(bundle, i)?;
    if !(0.0..=1.0).contains(&threshold) {
        return Err(invalid("threshold must lie in [0, 1]"));
    }
    let (w, h) = (bundle.width(), bundle.height());
    let raw: Vec<bool> = bundle.weights().rows().map(|r| r[i] >= threshold).collect();
    let mut bits = vec![false; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut on, mut total) = (0, 0);
            for yy in y.saturating_sub(1)..(y + 2).min(h) {
                for xx in x.saturating_sub(1)..(x + 2).min(w) {
                    total += 1;
                    on += raw[yy * w + xx] as usize;
                }
            }
            bits[y * w + x] = 2 * on > total;
        }
    }
    PixelMask::new(w, h, bits)
}
