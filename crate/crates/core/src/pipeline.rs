//! The whole decomposition: palette estimation, full-image weights, bundle.

use crate::bundle::{DecompositionBundle, Provenance};
use crate::dictionary::PigmentDictionary;
use crate::error::Result;
use crate::image::RgbImage;
use crate::solver::{estimate_primary_pigments, solve_weights_full, InitMode, LevelReport, SolverConfig};
use crate::spectral::{RenderContext, WavelengthGrid};

#[derive(Debug, Clone)]
pub struct DecomposeOptions {
    pub palette_size: usize,
    pub grid: WavelengthGrid,
    pub init: InitMode,
    pub config: SolverConfig,
}

impl DecomposeOptions {
    pub fn new(palette_size: usize) -> Self {
        Self {
            palette_size,
            grid: WavelengthGrid::Bands8,
            init: InitMode::Dictionary,
            config: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Decomposition {
    pub bundle: DecompositionBundle,
    /// RMS sRGB error of the bundle's render against the input.
    pub rmse: f64,
    pub subset_size: usize,
    pub anls_iterations: usize,
    pub anls_converged: bool,
    pub anls_energy: Vec<f64>,
    pub levels: Vec<LevelReport>,
}

pub fn decompose(image: &RgbImage, dict: &PigmentDictionary, opts: &DecomposeOptions) -> Result<Decomposition> {
    let ctx = RenderContext::standard(opts.grid);
    let est = estimate_primary_pigments(image, opts.palette_size, dict, &ctx, opts.init, &opts.config)?;
    log::info!(
        "palette: {} pigments from {} colours, {} rounds",
        est.palette.len(),
        est.subset.len(),
        est.iterations
    );
    let full = solve_weights_full(image, &est.palette, &ctx, &opts.config)?;
    let bundle = DecompositionBundle::new(image.width(), image.height(), est.palette, full.weights, ctx)?
        .with_provenance(Provenance {
            source_sha256: None,
            config: Some(opts.config.clone()),
        });
    let rmse = bundle.render().rmse(image)?;
    Ok(Decomposition {
        bundle,
        rmse,
        subset_size: est.subset.len(),
        anls_iterations: est.iterations,
        anls_converged: est.converged,
        anls_energy: est.energy_trace,
        levels: full.levels,
    })
}
