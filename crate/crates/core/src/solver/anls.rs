//! Primary-pigment estimation: alternating weight and palette solves on a
//! small representative subset of pixels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dictionary::PigmentDictionary;
use crate::error::{invalid, Error, Result};
use crate::image::RgbImage;
use crate::model::{Palette, WeightMap};
use crate::palette_init::{distinct_colors, hull_of_colors, init_palette, simplify_hull};
use crate::spectral::{RenderContext, Rgb, COEFF_FLOOR};

use super::config::SolverConfig;
use super::energy::{data_term, e_smooth, sum_term, SmoothWeights};
use super::minimize::{bounded_minimize, MinimizeOptions};

fn subset_options(config: &SolverConfig) -> MinimizeOptions {
    MinimizeOptions {
        max_iters: config.subset_max_iters,
        history: config.history,
        pgtol: config.pgtol,
        ftol: config.ftol,
    }
}

fn smooth_weights(config: &SolverConfig) -> SmoothWeights {
    SmoothWeights {
        w_a: config.w_a,
        w_s: config.w_s,
        w_ratio: config.w_ratio,
    }
}

fn check(pixels: &[Rgb], palette: &Palette, ctx: &RenderContext) -> Result<()> {
    if pixels.is_empty() {
        return Err(invalid("no pixels to fit"));
    }
    if palette.grid() != ctx.grid() {
        return Err(invalid("palette and render context use different grids"));
    }
    Ok(())
}

/// `E_data + w_smooth·E_smooth + w_sum·E_sum` on a pixel subset, the quantity
/// the alternating solve decreases.
pub fn subset_energy(
    pixels: &[Rgb],
    weights: &WeightMap,
    palette: &Palette,
    ctx: &RenderContext,
    config: &SolverConfig,
) -> f64 {
    let m = palette.len();
    let l = palette.grid().len();
    let data = data_term(weights.values(), palette.coeffs(), m, pixels, ctx, None, None);
    let (smooth, _) = e_smooth(palette.coeffs(), m, l, pixels.len(), smooth_weights(config));
    let mut scratch = vec![0.0; weights.values().len()];
    let sum = sum_term(weights.values(), m, &mut scratch);
    data + config.w_smooth * smooth + config.w_sum * sum
}

/// Weights for fixed `palette`: minimise `E_data + w_sum·E_sum` over
/// `0 ≤ W ≤ 1`, starting from `init`.
pub fn solve_weights_subset(
    pixels: &[Rgb],
    palette: &Palette,
    ctx: &RenderContext,
    init: &WeightMap,
    config: &SolverConfig,
) -> Result<WeightMap> {
    check(pixels, palette, ctx)?;
    let m = palette.len();
    if init.pigments() != m || init.pixels() != pixels.len() {
        return Err(invalid("initial weights do not match the subset and palette"));
    }
    let h = palette.coeffs();
    let mut scratch = vec![0.0; init.values().len()];
    let objective = |x: &[f64], g: &mut [f64]| {
        let e = data_term(x, h, m, pixels, ctx, Some(&mut *g), None);
        let s = sum_term(x, m, &mut scratch);
        for (a, b) in g.iter_mut().zip(&scratch) {
            *a += config.w_sum * b;
        }
        e + config.w_sum * s
    };
    let n = init.values().len();
    let res = bounded_minimize(objective, init.values(), &vec![0.0; n], &vec![1.0; n], &subset_options(config))?;
    log::trace!("weights: {} iterations, E = {:.6e}, {:?}", res.iterations, res.value, res.reason);
    WeightMap::new(m, res.x)
}

/// Palette for fixed weights: minimise `E_data + w_smooth·E_smooth` over
/// `H ≥ ε`, starting from `init`.
pub fn solve_palette(
    pixels: &[Rgb],
    weights: &WeightMap,
    init: &Palette,
    ctx: &RenderContext,
    config: &SolverConfig,
) -> Result<Palette> {
    check(pixels, init, ctx)?;
    let m = init.len();
    let l = init.grid().len();
    if weights.pigments() != m || weights.pixels() != pixels.len() {
        return Err(invalid("weights do not match the subset and palette"));
    }
    let w = weights.values();
    let sw = smooth_weights(config);
    let n = pixels.len();
    let objective = |x: &[f64], g: &mut [f64]| {
        let e = data_term(w, x, m, pixels, ctx, None, Some(&mut *g));
        if config.w_smooth == 0.0 {
            return e;
        }
        let (s, gs) = e_smooth(x, m, l, n, sw);
        for (a, b) in g.iter_mut().zip(&gs) {
            *a += config.w_smooth * b;
        }
        e + config.w_smooth * s
    };
    let k = init.coeffs().len();
    let res = bounded_minimize(
        objective,
        init.coeffs(),
        &vec![COEFF_FLOOR; k],
        &vec![f64::INFINITY; k],
        &subset_options(config),
    )?;
    log::trace!("palette: {} iterations, E = {:.6e}, {:?}", res.iterations, res.value, res.reason);
    Palette::new(init.grid(), res.x)
}

/// Largest elementwise `|new − old| / min(new, old)`.
pub fn relative_change(old: &Palette, new: &Palette) -> f64 {
    old.coeffs()
        .iter()
        .zip(new.coeffs())
        .map(|(a, b)| (b - a).abs() / a.min(*b))
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone)]
pub struct AnlsOutcome {
    pub palette: Palette,
    pub weights: WeightMap,
    /// Number of completed weight/palette rounds.
    pub iterations: usize,
    /// Subset energy before the first round and after each round.
    pub energy_trace: Vec<f64>,
    /// Whether the relative-change test (rather than the cap) ended the loop.
    pub converged: bool,
}

/// Alternate weight and palette solves until the palette's relative change
/// drops below `config.rel_tol` or `config.max_anls_iters` rounds ran.
/// Weights start at `1/M` and are warm-started between rounds.
pub fn anls(pixels: &[Rgb], init: Palette, ctx: &RenderContext, config: &SolverConfig) -> Result<AnlsOutcome> {
    config.validate()?;
    check(pixels, &init, ctx)?;
    let mut h = init;
    let mut w = WeightMap::uniform(pixels.len(), h.len());
    let mut trace = vec![subset_energy(pixels, &w, &h, ctx, config)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_anls_iters {
        w = solve_weights_subset(pixels, &h, ctx, &w, config)?;
        let h_new = solve_palette(pixels, &w, &h, ctx, config)?;
        let change = relative_change(&h, &h_new);
        h = h_new;
        iterations += 1;
        trace.push(subset_energy(pixels, &w, &h, ctx, config));
        log::debug!("anls round {iterations}: E = {:.6e}, max rel change {change:.3e}", trace[iterations]);
        if change < config.rel_tol {
            converged = true;
            break;
        }
    }
    Ok(AnlsOutcome {
        palette: h,
        weights: w,
        iterations,
        energy_trace: trace,
        converged,
    })
}

/// How the initial palette is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitMode {
    /// Match simplified hull colours to the dictionary (extended with 50/50 pairs).
    #[default]
    Dictionary,
    /// Best of `seeds` runs from random smooth coefficient curves.
    Random { seeds: usize, seed: u64 },
}

#[derive(Debug, Clone)]
pub struct Estimate {
    pub palette: Palette,
    /// The pixels the palette was fitted to.
    pub subset: Vec<Rgb>,
    pub subset_weights: WeightMap,
    pub iterations: usize,
    pub energy_trace: Vec<f64>,
    pub converged: bool,
    /// The colours spanned no volume, so all distinct colours were used.
    pub degenerate_hull: bool,
}

impl Estimate {
    /// RMS sRGB error of the subset reconstruction.
    pub fn subset_rmse(&self, ctx: &RenderContext) -> Result<f64> {
        let rec = self
            .subset_weights
            .rows()
            .map(|r| crate::model::render_pixel(r, &self.palette, ctx))
            .collect::<Result<Vec<_>>>()?;
        Ok(crate::image::rmse(&rec, &self.subset))
    }
}

/// Hull-vertex colours of `pixels`, or all distinct colours when the hull is
/// degenerate.
pub fn representative_subset(pixels: &[Rgb]) -> (Vec<Rgb>, bool) {
    match hull_of_colors(pixels) {
        Ok(rep) => (rep.colors, false),
        Err(Error::DegenerateHull { colors }) => (colors, true),
        Err(_) => unreachable!("hull_of_colors only fails with a degenerate hull"),
    }
}

/// Estimate `m` primary pigments for `image`.
pub fn estimate_primary_pigments(
    image: &RgbImage,
    m: usize,
    dict: &PigmentDictionary,
    ctx: &RenderContext,
    init: InitMode,
    config: &SolverConfig,
) -> Result<Estimate> {
    let (subset, degenerate) = representative_subset(image.pixels());
    estimate_from_subset(subset, degenerate, m, dict, ctx, init, config)
}

/// One palette explaining several images: the union of their representative
/// subsets is fitted jointly.
pub fn joint_summarize(
    images: &[RgbImage],
    m: usize,
    dict: &PigmentDictionary,
    ctx: &RenderContext,
    init: InitMode,
    config: &SolverConfig,
) -> Result<Estimate> {
    if images.is_empty() {
        return Err(invalid("no images to summarise"));
    }
    let mut union = Vec::new();
    let mut any_degenerate = false;
    for img in images {
        let (s, d) = representative_subset(img.pixels());
        union.extend(s);
        any_degenerate |= d;
    }
    // Sorted and de-duplicated so repeated images change nothing.
    let subset: Vec<Rgb> = distinct_colors(&union).into_iter().map(|(c, _)| c).collect();
    let degenerate = any_degenerate && images.len() == 1;
    estimate_from_subset(subset, degenerate, m, dict, ctx, init, config)
}

fn estimate_from_subset(
    subset: Vec<Rgb>,
    degenerate: bool,
    m: usize,
    dict: &PigmentDictionary,
    ctx: &RenderContext,
    init: InitMode,
    config: &SolverConfig,
) -> Result<Estimate> {
    if m < 2 {
        return Err(invalid("palette size must be at least 2"));
    }
    config.validate()?;
    let outcome = match init {
        InitMode::Dictionary => {
            let colors = initial_colors(&subset, m)?;
            let pool = dict.augmented();
            let h0 = init_palette(&colors, &pool, ctx.grid())?;
            anls(&subset, h0, ctx, config)?
        }
        InitMode::Random { seeds, seed } => {
            if seeds == 0 {
                return Err(invalid("random initialisation needs at least one seed"));
            }
            let mut best: Option<AnlsOutcome> = None;
            for k in 0..seeds {
                let h0 = random_palette(m, ctx, seed.wrapping_add(k as u64))?;
                let out = anls(&subset, h0, ctx, config)?;
                let last = *out.energy_trace.last().expect("trace has the initial energy");
                if best
                    .as_ref()
                    .is_none_or(|b| last < *b.energy_trace.last().expect("non-empty"))
                {
                    best = Some(out);
                }
            }
            best.expect("at least one seed")
        }
    };
    Ok(Estimate {
        palette: outcome.palette,
        subset,
        subset_weights: outcome.weights,
        iterations: outcome.iterations,
        energy_trace: outcome.energy_trace,
        converged: outcome.converged,
        degenerate_hull: degenerate,
    })
}

fn initial_colors(subset: &[Rgb], m: usize) -> Result<Vec<Rgb>> {
    match hull_of_colors(subset) {
        Ok(rep) => simplify_hull(&rep, m),
        Err(Error::DegenerateHull { colors }) => Ok(farthest_points(&colors, m)),
        Err(e) => Err(e),
    }
}

/// Greedy farthest-point selection, starting from the first colour.
fn farthest_points(colors: &[Rgb], m: usize) -> Vec<Rgb> {
    if colors.len() <= m {
        return colors.to_vec();
    }
    let d2 = |a: &Rgb, b: &Rgb| (0..3).map(|k| (a[k] - b[k]).powi(2)).sum::<f64>();
    let mut chosen = vec![0usize];
    let mut nearest: Vec<f64> = colors.iter().map(|c| d2(c, &colors[0])).collect();
    while chosen.len() < m {
        let (next, _) = nearest
            .iter()
            .enumerate()
            .fold((0, -1.0), |best, (i, &d)| if d > best.1 { (i, d) } else { best });
        chosen.push(next);
        for (i, c) in colors.iter().enumerate() {
            nearest[i] = nearest[i].min(d2(c, &colors[next]));
        }
    }
    chosen.into_iter().map(|i| colors[i]).collect()
}

/// Smooth random coefficient curves: log-uniform values at three control
/// wavelengths, linearly interpolated.
fn random_palette(m: usize, ctx: &RenderContext, seed: u64) -> Result<Palette> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = ctx.len();
    let mut coeffs = Vec::with_capacity(m * 2 * l);
    for _ in 0..m {
        for (lo, hi) in [(0.01f64, 10.0f64), (0.1, 3.0)] {
            let ctrl: [f64; 3] = std::array::from_fn(|_| rng.gen_range(lo.ln()..hi.ln()).exp());
            for j in 0..l {
                let u = if l > 1 { 2.0 * j as f64 / (l - 1) as f64 } else { 0.0 };
                let i = (u.floor() as usize).min(1);
                let f = u - i as f64;
                coeffs.push(ctrl[i] * (1.0 - f) + ctrl[i + 1] * f);
            }
        }
    }
    Palette::new(ctx.grid(), coeffs)
}
