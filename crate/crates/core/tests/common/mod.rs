//! Finite-difference checks of the energy gradients, shared by the gradient
//! suite and the acceptance run.

#![allow(dead_code)]

use pigment_core::image::RgbImage;
use pigment_core::solver::{e_data, e_smooth, e_sparse, e_spatial, e_sum, BilateralParams, SmoothWeights, SmoothingOperator};
use pigment_core::{RenderContext, Rgb, WavelengthGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TRIALS: u64 = 100;
pub const N: usize = 5;
pub const M: usize = 3;
pub const L: usize = 8;
pub const STEP: f64 = 1e-6;
pub const TOL: f64 = 1e-4;

pub struct Instance {
    pub w: Vec<f64>,
    pub h: Vec<f64>,
    pub image: Vec<Rgb>,
}

pub fn instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = (0..N * M).map(|_| rng.gen_range(0.05..0.95)).collect();
    let mut h = Vec::with_capacity(M * 2 * L);
    for _ in 0..M {
        h.extend((0..L).map(|_| rng.gen_range(0.05..5.0)));
        h.extend((0..L).map(|_| rng.gen_range(0.05..3.0)));
    }
    let image = (0..N)
        .map(|_| [rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95), rng.gen_range(0.05..0.95)])
        .collect();
    Instance { w, h, image }
}

pub fn central_diff(x: &[f64], mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut xp = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = xp[i];
            xp[i] = orig + STEP;
            let fp = f(&xp);
            xp[i] = orig - STEP;
            let fm = f(&xp);
            xp[i] = orig;
            (fp - fm) / (2.0 * STEP)
        })
        .collect()
}

/// `‖a − b‖∞ / max(‖a‖∞, ‖b‖∞)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let scale = a.iter().chain(b).map(|v| v.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// Errors of `∂E_data/∂W` and `∂E_data/∂H`.
pub fn data_errors(inst: &Instance) -> (f64, f64) {
    let ctx = RenderContext::standard(WavelengthGrid::Bands8);
    let (_, gw, gh) = e_data(&inst.w, &inst.h, M, &inst.image, &ctx).unwrap();
    let fw = central_diff(&inst.w, |w| e_data(w, &inst.h, M, &inst.image, &ctx).unwrap().0);
    let fh = central_diff(&inst.h, |h| e_data(&inst.w, h, M, &inst.image, &ctx).unwrap().0);
    (rel_err(&gw, &fw), rel_err(&gh, &fh))
}

pub fn sum_error(inst: &Instance) -> f64 {
    let (_, g) = e_sum(&inst.w, M);
    rel_err(&g, &central_diff(&inst.w, |w| e_sum(w, M).0))
}

pub fn smooth_error(inst: &Instance) -> f64 {
    let sw = SmoothWeights {
        w_a: 1.0,
        w_s: 1.0,
        w_ratio: 0.001,
    };
    let (_, g) = e_smooth(&inst.h, M, L, N, sw);
    rel_err(&g, &central_diff(&inst.h, |h| e_smooth(h, M, L, N, sw).0))
}

pub fn sparse_error(inst: &Instance) -> f64 {
    let (_, g) = e_sparse(&inst.w, M);
    rel_err(&g, &central_diff(&inst.w, |w| e_sparse(w, M).0))
}

/// The instance colours double as the guide image (a 5×1 strip).
pub fn spatial_error(inst: &Instance) -> f64 {
    let guide = RgbImage::new(N, 1, inst.image.clone()).unwrap();
    let op = SmoothingOperator::bilateral(&guide, &BilateralParams::default());
    let (_, g) = e_spatial(&inst.w, M, &op).unwrap();
    rel_err(&g, &central_diff(&inst.w, |w| e_spatial(w, M, &op).unwrap().0))
}

/// Worst error of each gradient over seeds `0..TRIALS`.
pub fn worst_errors() -> Vec<(&'static str, f64)> {
    let mut worst = vec![
        ("E_data/W", 0.0f64),
        ("E_data/H", 0.0),
        ("E_sum", 0.0),
        ("E_smooth", 0.0),
        ("E_sparse", 0.0),
        ("E_spatial", 0.0),
    ];
    for seed in 0..TRIALS {
        let inst = instance(seed);
        let (dw, dh) = data_errors(&inst);
        let errs = [dw, dh, sum_error(&inst), smooth_error(&inst), sparse_error(&inst), spatial_error(&inst)];
        for (slot, e) in worst.iter_mut().zip(errs) {
            slot.1 = slot.1.max(e);
        }
    }
    worst
}
