//! Palette initialisation: representative colours from the RGB convex hull,
//! hull simplification to `M` colours, and matching against a pigment
//! dictionary.

use std::collections::BTreeMap;

use crate::dictionary::PigmentDictionary;
use crate::error::{invalid, Error, Result};
use crate::hull::{self, area2_sq, dist_sq, from_lattice, to_lattice, IPoint};
use crate::image::RgbImage;
use crate::model::Palette;
use crate::spectral::{RenderContext, Rgb, WavelengthGrid};

/// Colours are snapped to this many levels per channel before hulling.
pub const QUANT_LEVELS: f64 = 255.0;

/// Hull-vertex colours of an image together with one source pixel each.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentativeSet {
    /// Distinct colours in lexicographic order.
    pub colors: Vec<Rgb>,
    /// Index of the first pixel carrying each colour.
    pub pixels: Vec<usize>,
}

impl RepresentativeSet {
    pub fn len(&self) -> usize {
        self.colors.len()
    }
    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }
}

fn quantize(c: Rgb) -> [u16; 3] {
    c.map(|v| (v.clamp(0.0, 1.0) * QUANT_LEVELS).round() as u16)
}

fn dequantize(q: [u16; 3]) -> Rgb {
    q.map(|v| v as f64 / QUANT_LEVELS)
}

/// Distinct quantised colours of `pixels`, sorted, with their first pixel.
pub fn distinct_colors(pixels: &[Rgb]) -> Vec<(Rgb, usize)> {
    let mut seen: BTreeMap<[u16; 3], usize> = BTreeMap::new();
    for (i, &p) in pixels.iter().enumerate() {
        seen.entry(quantize(p)).or_insert(i);
    }
    seen.into_iter().map(|(q, i)| (dequantize(q), i)).collect()
}

/// Vertices of the convex hull of the image's (quantised) colours.
///
/// Fails with [`Error::DegenerateHull`] carrying all distinct colours when
/// they do not span a volume.
pub fn convex_hull_colors(image: &RgbImage) -> Result<RepresentativeSet> {
    hull_of_colors(image.pixels())
}

pub fn hull_of_colors(pixels: &[Rgb]) -> Result<RepresentativeSet> {
    let distinct = distinct_colors(pixels);
    let pts: Vec<IPoint> = distinct.iter().map(|(c, _)| to_lattice(*c)).collect();
    match hull::convex_hull(&pts) {
        Ok(h) => Ok(RepresentativeSet {
            colors: h.vertices.iter().map(|&v| distinct[v].0).collect(),
            pixels: h.vertices.iter().map(|&v| distinct[v].1).collect(),
        }),
        Err(_) => Err(Error::DegenerateHull {
            colors: distinct.into_iter().map(|(c, _)| c).collect(),
        }),
    }
}

/// Reduce the hull to at most `m` colours by repeatedly deleting the vertex
/// whose removal loses the least enclosed volume. Ties go to the earliest
/// colour in `hull.colors`.
///
/// With fewer than `m` vertices the colours are returned unchanged. Below four
/// colours the result is the largest-area triangle or the longest segment.
pub fn simplify_hull(hull: &RepresentativeSet, m: usize) -> Result<Vec<Rgb>> {
    if m < 2 {
        return Err(invalid("palette size must be at least 2"));
    }
    if hull.colors.len() <= m {
        return Ok(hull.colors.clone());
    }
    let pts: Vec<IPoint> = hull.colors.iter().map(|&c| to_lattice(c)).collect();
    let mut active: Vec<usize> = (0..pts.len()).collect();

    while active.len() > m.max(4) {
        let sub: Vec<IPoint> = active.iter().map(|&i| pts[i]).collect();
        let h = hull::convex_hull(&sub).map_err(|_| degenerate(&hull.colors))?;
        if h.vertices.len() < active.len() {
            // Non-extreme points cost nothing to drop.
            active = h.vertices.iter().map(|&v| active[v]).collect();
            continue;
        }
        let mut best: Option<(i128, usize)> = None;
        for v in 0..sub.len() {
            let link = h.neighbors(v);
            let mut with: Vec<IPoint> = link.iter().map(|&u| sub[u]).collect();
            let without_vol = volume6_or_zero(&with);
            with.push(sub[v]);
            let loss = volume6_or_zero(&with) - without_vol;
            if best.is_none_or(|(b, _)| loss < b) {
                best = Some((loss, v));
            }
        }
        let (_, v) = best.expect("hull has vertices");
        log::trace!("simplify_hull: dropping colour {}", active[v]);
        active.remove(v);
    }

    if m < active.len() {
        active = best_subset(&pts, &active, m);
    }
    Ok(active
        .iter()
        .map(|&i| from_lattice(pts[i]).map(|v| v.clamp(0.0, 1.0)))
        .collect())
}

fn degenerate(colors: &[Rgb]) -> Error {
    Error::DegenerateHull { colors: colors.to_vec() }
}

fn volume6_or_zero(pts: &[IPoint]) -> i128 {
    hull::convex_hull(pts).map(|h| h.volume6(pts)).unwrap_or(0)
}

/// Largest-area triangle (m = 3) or longest segment (m = 2) among `active`.
fn best_subset(pts: &[IPoint], active: &[usize], m: usize) -> Vec<usize> {
    let n = active.len();
    let mut best: (i128, Vec<usize>) = (-1, Vec::new());
    for i in 0..n {
        for j in i + 1..n {
            if m == 2 {
                let d = dist_sq(pts[active[i]], pts[active[j]]);
                if d > best.0 {
                    best = (d, vec![active[i], active[j]]);
                }
                continue;
            }
            for k in j + 1..n {
                let a = area2_sq(pts[active[i]], pts[active[j]], pts[active[k]]);
                if a > best.0 {
                    best = (a, vec![active[i], active[j], active[k]]);
                }
            }
        }
    }
    best.1
}

/// Fraction of `pixels` (quantised) lying inside the hull of `palette`.
/// Zero when the palette spans no volume.
pub fn enclosure_fraction(pixels: &[Rgb], palette: &[Rgb]) -> f64 {
    let pts: Vec<IPoint> = palette.iter().map(|&c| to_lattice(c)).collect();
    let Ok(h) = hull::convex_hull(&pts) else {
        return 0.0;
    };
    let inside = pixels
        .iter()
        .filter(|&&p| h.contains(&pts, to_lattice(dequantize(quantize(p)))))
        .count();
    inside as f64 / pixels.len().max(1) as f64
}

/// Match each colour to a distinct dictionary entry by Euclidean sRGB
/// distance, with entries rendered in `ctx`.
///
/// Conflicts go to the closer colour; the other moves on to its next-closest
/// entry. Exact ties are broken by lower index.
pub fn match_dictionary(colors: &[Rgb], dict: &PigmentDictionary, ctx: &RenderContext) -> Result<Vec<usize>> {
    if colors.len() > dict.len() {
        return Err(Error::InsufficientDictionary {
            requested: colors.len(),
            available: dict.len(),
        });
    }
    let rendered = dict.rendered(ctx)?;
    let dist = |c: &Rgb, e: usize| -> f64 { (0..3).map(|k| (c[k] - rendered[e][k]).powi(2)).sum::<f64>() };
    let prefs: Vec<Vec<usize>> = colors
        .iter()
        .map(|c| {
            let mut order: Vec<usize> = (0..dict.len()).collect();
            order.sort_by(|&x, &y| dist(c, x).total_cmp(&dist(c, y)).then(x.cmp(&y)));
            order
        })
        .collect();

    // Colours propose down their preference lists; an entry keeps the
    // closest proposer.
    let mut holder: Vec<Option<usize>> = vec![None; dict.len()];
    let mut next = vec![0usize; colors.len()];
    let mut free: Vec<usize> = (0..colors.len()).rev().collect();
    while let Some(c) = free.pop() {
        let e = prefs[c][next[c]];
        next[c] += 1;
        match holder[e] {
            None => holder[e] = Some(c),
            Some(other) => {
                let better = dist(&colors[c], e)
                    .total_cmp(&dist(&colors[other], e))
                    .then(c.cmp(&other))
                    .is_lt();
                if better {
                    holder[e] = Some(c);
                    free.push(other);
                } else {
                    free.push(c);
                }
            }
        }
    }
    let mut chosen = vec![0; colors.len()];
    for (e, h) in holder.iter().enumerate() {
        if let Some(c) = h {
            chosen[*c] = e;
        }
    }
    Ok(chosen)
}

/// Initial palette: the dictionary pigments matched to `colors`, resampled
/// onto `grid`. Dictionary colours are rendered in the standard context of
/// `grid`.
pub fn init_palette(colors: &[Rgb], dict: &PigmentDictionary, grid: WavelengthGrid) -> Result<Palette> {
    let ctx = RenderContext::standard(grid);
    let chosen = match_dictionary(colors, dict, &ctx)?;
    log::debug!(
        "init_palette: {:?}",
        chosen.iter().map(|&e| dict.entries()[e].name.as_str()).collect::<Vec<_>>()
    );
    let pigments = chosen
        .iter()
        .map(|&e| dict.pigment_on(e, grid))
        .collect::<Result<Vec<_>>>()?;
    Palette::from_pigments(grid, &pigments)
}
