//! Pigment-space analysis of painting images.
//!
//! An RGB image is explained as a per-pixel mixture of a few primary
//! pigments, each described by multispectral Kubelka-Munk absorption and
//! scattering coefficients. The crate provides the forward model
//! ([`spectral`]), palette initialisation from a pigment dictionary
//! ([`palette_init`]), the alternating bound-constrained solvers
//! ([`solver`]) and pigment-space edits ([`edit`]).

pub mod bundle;
pub mod dictionary;
pub mod edit;
pub mod error;
pub mod hull;
pub mod image;
pub mod model;
pub mod palette_init;
pub mod pipeline;
pub mod solver;
pub mod spectral;
pub mod synthetic;

pub use bundle::DecompositionBundle;
pub use dictionary::PigmentDictionary;
pub use error::{Error, Result};
pub use image::RgbImage;
pub use model::{render_pixel, Palette, WeightMap};
pub use solver::SolverConfig;
pub use spectral::{PigmentKm, RenderContext, Rgb, WavelengthGrid};
