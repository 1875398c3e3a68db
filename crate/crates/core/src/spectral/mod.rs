//! Forward Kubelka-Munk model: layer reflectance, pigment mixing and
//! spectral rendering to sRGB.

pub mod grid;
pub mod km;
pub mod render;
pub mod tables;

pub use grid::WavelengthGrid;
pub use km::{km_reflectance, mix_pigments, PigmentKm, COEFF_FLOOR};
pub use render::{
    encode_linear, render_mixture, render_pigment, spectrum_to_srgb, srgb_decode, srgb_encode,
    RenderContext, RenderSettings, Rgb,
};

use crate::error::{invalid, Result};

/// Band-average a pigment given on the 33-sample grid (or a banded grid that
/// nests inside `target`) onto `target`.
pub fn downsample_pigment(p: &PigmentKm, from: WavelengthGrid, target: WavelengthGrid) -> Result<PigmentKm> {
    if p.len() != from.len() {
        return Err(invalid(format!(
            "pigment has {} wavelengths, source grid has {}",
            p.len(),
            from.len()
        )));
    }
    let a = from.downsample(&p.a, target)?;
    let s = from.downsample(&p.s, target)?;
    PigmentKm::new(a, s)
}
