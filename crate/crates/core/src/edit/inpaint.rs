//! Cut: remove the paint under a mask and fill the hole by fast-marching
//! inpainting of all weight channels at once.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::bundle::DecompositionBundle;
use crate::error::{invalid, Result};
use crate::model::WeightMap;

use super::{renormalize_row, PixelMask};

/// Neighbourhood radius (pixels) of the fill.
pub const DEFAULT_INPAINT_RADIUS: f64 = 3.0;

#[derive(Clone, Copy, PartialEq, Eq)]
enum State {
    Known,
    Band,
    Inside,
}

/// Heap entry ordered by arrival time, then pixel index.
struct Front(f64, usize);

impl PartialEq for Front {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Front {}
impl PartialOrd for Front {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Front {
    fn cmp(&self, other: &Self) -> Ordering {
        // Reversed: BinaryHeap is a max-heap.
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

/// [`cut_inpaint_with_radius`] with the default radius.
pub fn cut_inpaint(bundle: &DecompositionBundle, mask: &PixelMask) -> Result<DecompositionBundle> {
    cut_inpaint_with_radius(bundle, mask, DEFAULT_INPAINT_RADIUS)
}

/// Replace the weights under `mask` by a fast-marching fill from the
/// surrounding pixels, then rescale the filled rows to sum to one.
///
/// Each hole pixel, in order of its distance from the hole boundary, becomes
/// the average of the already-known pixels within `radius`, weighted by
/// inverse squared distance and by similarity of arrival time. Pixels outside
/// the mask are untouched. An empty mask is a no-op; a full mask is an error.
pub fn cut_inpaint_with_radius(bundle: &DecompositionBundle, mask: &PixelMask, radius: f64) -> Result<DecompositionBundle> {
    mask.check(bundle)?;
    if !(radius >= 1.0 && radius.is_finite()) {
        return Err(invalid("inpainting radius must be at least one pixel"));
    }
    let n = bundle.pixels();
    let holes = mask.count();
    if holes == 0 {
        return Ok(bundle.clone());
    }
    if holes == n {
        return Err(invalid("cannot cut the whole image"));
    }
    let (w, h) = (bundle.width(), bundle.height());
    let m = bundle.palette().len();
    let mut values = bundle.weights().values().to_vec();
    let mut state: Vec<State> = mask.bits().iter().map(|&b| if b { State::Inside } else { State::Known }).collect();
    let mut time = vec![f64::INFINITY; n];
    let mut heap = BinaryHeap::new();

    let neighbors = |p: usize| {
        let (x, y) = (p % w, p / w);
        let mut out = [None; 4];
        if x > 0 {
            out[0] = Some(p - 1);
        }
        if x + 1 < w {
            out[1] = Some(p + 1);
        }
        if y > 0 {
            out[2] = Some(p - w);
        }
        if y + 1 < h {
            out[3] = Some(p + w);
        }
        out
    };

    for p in 0..n {
        if state[p] == State::Known && neighbors(p).iter().flatten().any(|&q| state[q] == State::Inside) {
            state[p] = State::Band;
            time[p] = 0.0;
            heap.push(Front(0.0, p));
        }
    }

    let r = radius.floor() as isize;
    let r2 = radius * radius;
    while let Some(Front(_, p)) = heap.pop() {
        if state[p] == State::Known {
            continue;
        }
        state[p] = State::Known;
        for q in neighbors(p).into_iter().flatten() {
            if state[q] != State::Inside {
                continue;
            }
            let t = arrival(q, w, h, &state, &time);
            fill(q, w, h, r, r2, t, &state, &time, m, &mut values);
            time[q] = t;
            state[q] = State::Band;
            heap.push(Front(t, q));
        }
    }

    for (p, row) in values.chunks_exact_mut(m).enumerate() {
        if mask.bits()[p] {
            renormalize_row(row, 1.0);
        }
    }
    bundle.with_weights(WeightMap::new(m, values)?)
}

/// Eikonal update `|∇T| = 1` from the known 4-neighbours of `q`.
fn arrival(q: usize, w: usize, h: usize, state: &[State], time: &[f64]) -> f64 {
    let (x, y) = (q % w, q / w);
    let known = |p: Option<usize>| p.filter(|&p| state[p] != State::Inside).map_or(f64::INFINITY, |p| time[p]);
    let tx = known((x > 0).then(|| q - 1)).min(known((x + 1 < w).then(|| q + 1)));
    let ty = known((y > 0).then(|| q - w)).min(known((y + 1 < h).then(|| q + w)));
    let (a, b) = (tx.min(ty), tx.max(ty));
    if b.is_infinite() || b - a >= 1.0 {
        a + 1.0
    } else {
        0.5 * (a + b + (2.0 - (a - b) * (a - b)).sqrt())
    }
}

#[allow(clippy::too_many_arguments)]
fn fill(
    q: usize,
    w: usize,
    h: usize,
    r: isize,
    r2: f64,
    tq: f64,
    state: &[State],
    time: &[f64],
    m: usize,
    values: &mut [f64],
) {
    let (x, y) = ((q % w) as isize, (q / w) as isize);
    let mut acc = vec![0.0; m];
    let mut total = 0.0;
    for dy in -r..=r {
        for dx in -r..=r {
            let d2 = (dx * dx + dy * dy) as f64;
            if d2 == 0.0 || d2 > r2 {
                continue;
            }
            let (kx, ky) = (x + dx, y + dy);
            if kx < 0 || ky < 0 || kx >= w as isize || ky >= h as isize {
                continue;
            }
            let k = ky as usize * w + kx as usize;
            if state[k] == State::Inside {
                continue;
            }
            let weight = 1.0 / d2 / (1.0 + (time[k] - tq).abs());
            total += weight;
            for c in 0..m {
                acc[c] += weight * values[k * m + c];
            }
        }
    }
    if total > 0.0 {
        for c in 0..m {
            values[q * m + c] = (acc[c] / total).clamp(0.0, 1.0);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::bundle_from;
    use super::*;

    #[test]
    fn single_pixel_hole_is_neighbour_average() {
        let b = bundle_from(&["cadmium_red", "cerulean_blue", "titanium_white"], 5, 5, |x, y| {
            let a = 0.1 + 0.15 * x as f64;
            let c = 0.05 * y as f64;
            vec![a, 0.9 - a, c]
        });
        let mut bits = vec![false; 25];
        bits[12] = true;
        let mask = PixelMask::new(5, 5, bits).unwrap();
        let out = cut_inpaint_with_radius(&b, &mask, 1.0).unwrap();
        let wm = b.weights();
        let avg: Vec<f64> = (0..3)
            .map(|c| (wm.row(11)[c] + wm.row(13)[c] + wm.row(7)[c] + wm.row(17)[c]) / 4.0)
            .collect();
        let s: f64 = avg.iter().sum();
        for c in 0..3 {
            assert!((out.weights().row(12)[c] - avg[c] / s).abs() < 1e-6);
        }
        // The default radius still lands near the 4-neighbour average.
        let wide = cut_inpaint(&b, &mask).unwrap();
        for c in 0..3 {
            assert!((wide.weights().row(12)[c] - avg[c] / s).abs() < 0.02);
        }
    }

    #[test]
    fn constant_region_fills_with_constant() {
        let b = bundle_from(&["cadmium_red", "cerulean_blue"], 12, 10, |_, _| vec![0.25, 0.75]);
        let mask = PixelMask::rect(12, 10, 3, 2, 9, 8);
        let out = cut_inpaint(&b, &mask).unwrap();
        for row in out.weights().rows() {
            assert!((row[0] - 0.25).abs() < 1e-3 && (row[1] - 0.75).abs() < 1e-3);
        }
    }

    #[test]
    fn outside_untouched_and_edge_cases() {
        let b = bundle_from(&["cadmium_red", "cerulean_blue"], 6, 6, |x, y| vec![x as f64 / 5.0, y as f64 / 5.0]);
        let mask = PixelMask::rect(6, 6, 1, 1, 4, 3);
        let out = cut_inpaint(&b, &mask).unwrap();
        for p in 0..36 {
            if !mask.bits()[p] {
                assert_eq!(out.weights().row(p), b.weights().row(p));
            }
        }
        assert_eq!(cut_inpaint(&b, &PixelMask::empty(6, 6)).unwrap(), b);
        assert!(cut_inpaint(&b, &PixelMask::rect(6, 6, 0, 0, 6, 6)).is_err());
    }
}
