//! Full-image weight solve, coarse to fine.

use crate::error::{invalid, Error, Result};
use crate::image::{bilinear_resize, RgbImage};
use crate::model::{Palette, WeightMap};
use crate::spectral::{RenderContext, Rgb};

use super::bilateral::SmoothingOperator;
use super::config::SolverConfig;
use super::energy::{data_term, sparse_term, spatial_term, sum_term};
use super::minimize::{bounded_minimize, MinimizeOptions, StopReason};

/// Image sizes of the pyramid, coarsest first. Halving (rounding up)
/// continues while the short edge is at least `min_short_edge`.
pub fn pyramid_sizes(width: usize, height: usize, min_short_edge: usize) -> Vec<(usize, usize)> {
    let mut sizes = vec![(width, height)];
    let (mut w, mut h) = (width, height);
    while w.min(h) >= min_short_edge && w.min(h) > 1 {
        w = w.div_ceil(2);
        h = h.div_ceil(2);
        sizes.push((w, h));
    }
    sizes.reverse();
    sizes
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelReport {
    pub width: usize,
    pub height: usize,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub iterations: usize,
    pub reason: StopReason,
}

#[derive(Debug, Clone)]
pub struct FullSolve {
    pub weights: WeightMap,
    /// One entry per pyramid level, coarsest first.
    pub levels: Vec<LevelReport>,
}

/// `E_data + w_sum·E_sum + w_sparse·E_sparse + w_spatial·E_spatial`.
pub struct FullObjective<'a> {
    pixels: &'a [Rgb],
    palette: &'a Palette,
    ctx: &'a RenderContext,
    op: SmoothingOperator,
    config: &'a SolverConfig,
    scratch: Vec<f64>,
}

impl<'a> FullObjective<'a> {
    pub fn new(image: &'a RgbImage, palette: &'a Palette, ctx: &'a RenderContext, config: &'a SolverConfig) -> Self {
        Self {
            pixels: image.pixels(),
            palette,
            ctx,
            op: SmoothingOperator::bilateral(image, &config.bilateral),
            config,
            scratch: vec![0.0; image.len() * palette.len()],
        }
    }

    pub fn operator(&self) -> &SmoothingOperator {
        &self.op
    }

    /// Objective value, gradient written into `g`.
    pub fn eval(&mut self, w: &[f64], g: &mut [f64]) -> f64 {
        let m = self.palette.len();
        let c = self.config;
        let mut e = data_term(w, self.palette.coeffs(), m, self.pixels, self.ctx, Some(&mut *g), None);
        if !e.is_finite() {
            return e;
        }
        let mut add = |weight: f64, value: f64, scratch: &[f64], g: &mut [f64]| {
            e += weight * value;
            for (a, b) in g.iter_mut().zip(scratch) {
                *a += weight * b;
            }
        };
        if c.w_sum != 0.0 {
            let v = sum_term(w, m, &mut self.scratch);
            add(c.w_sum, v, &self.scratch, g);
        }
        if c.w_sparse != 0.0 {
            let v = sparse_term(w, m, &mut self.scratch);
            add(c.w_sparse, v, &self.scratch, g);
        }
        if c.w_spatial != 0.0 {
            let v = spatial_term(w, m, &self.op, &mut self.scratch);
            add(c.w_spatial, v, &self.scratch, g);
        }
        e
    }

    pub fn value(&mut self, w: &[f64]) -> f64 {
        let mut g = vec![0.0; w.len()];
        self.eval(w, &mut g)
    }
}

/// Solve the weights of every pixel of `image` for a fixed palette.
///
/// The image is box-downsampled into a pyramid; the coarsest level starts
/// from `1/M`, and each solution is bilinearly upsampled (then clamped) to
/// initialise the next level. On a solver failure the error carries the best
/// weights of the failing level.
pub fn solve_weights_full(
    image: &RgbImage,
    palette: &Palette,
    ctx: &RenderContext,
    config: &SolverConfig,
) -> Result<FullSolve> {
    config.validate()?;
    if palette.grid() != ctx.grid() {
        return Err(invalid("palette and render context use different grids"));
    }
    let m = palette.len();
    let sizes = pyramid_sizes(image.width(), image.height(), config.min_short_edge);
    let mut images = vec![image.clone()];
    for _ in 1..sizes.len() {
        let next = images.last().expect("non-empty").downsample_box();
        images.push(next);
    }
    images.reverse();

    let opts = MinimizeOptions {
        max_iters: config.full_max_iters,
        history: config.history,
        pgtol: config.pgtol,
        ftol: config.ftol,
    };
    let mut levels = Vec::with_capacity(images.len());
    let mut w: Vec<f64> = Vec::new();
    let mut prev_size = (0, 0);
    for (li, img) in images.iter().enumerate() {
        let size = (img.width(), img.height());
        w = if li == 0 {
            vec![1.0 / m as f64; img.len() * m]
        } else {
            let mut up = bilinear_resize(&w, m, prev_size, size);
            up.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            up
        };
        let mut obj = FullObjective::new(img, palette, ctx, config);
        let initial = obj.value(&w);
        let n = w.len();
        let res = bounded_minimize(|x, g| obj.eval(x, g), &w, &vec![0.0; n], &vec![1.0; n], &opts);
        let res = match res {
            Ok(r) => r,
            Err(Error::SolverFailure { reason, best, value }) => {
                return Err(Error::SolverFailure {
                    reason: format!("pyramid level {} ({}x{}): {reason}", li, size.0, size.1),
                    best,
                    value,
                })
            }
            Err(e) => return Err(e),
        };
        log::debug!(
            "level {li} {}x{}: E {initial:.6e} -> {:.6e} in {} iterations ({:?})",
            size.0,
            size.1,
            res.value,
            res.iterations,
            res.reason
        );
        levels.push(LevelReport {
            width: size.0,
            height: size.1,
            initial_energy: initial,
            final_energy: res.value,
            iterations: res.iterations,
            reason: res.reason,
        });
        w = res.x;
        prev_size = size;
    }
    Ok(FullSolve {
        weights: WeightMap::new(m, w)?,
        levels,
    })
}
