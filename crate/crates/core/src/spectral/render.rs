//! Spectrum to sRGB rendering.

use serde::{Deserialize, Serialize};

use super::grid::WavelengthGrid;
use super::km::{clamp_unit, km_scalar, mix_pigments, PigmentKm};
use super::tables::{CIE1931_2DEG, D65, XYZ_TO_LINEAR_SRGB};
use crate::error::{invalid, Result};

/// Gamma-encoded sRGB triple, each channel in `[0, 1]`.
pub type Rgb = [f64; 3];

/// Everything needed to turn KM coefficients into a displayed colour.
///
/// The colour pipeline is linear up to gamma encoding, so it is stored as a
/// `3 × L` response matrix taking a reflectance spectrum straight to linear
/// RGB. The matrix is white-normalised: the all-ones spectrum maps to
/// linear `(1, 1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderContext {
    grid: WavelengthGrid,
    illuminant: Vec<f64>,
    /// Rows x̄, ȳ, z̄ (or, for 3 bands, the channel selection).
    cmf: [Vec<f64>; 3],
    substrate: Vec<f64>,
    thickness: f64,
    response: [Vec<f64>; 3],
}

/// The serialisable part of a [`RenderContext`]; tables are implied by the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderSettings {
    pub wavelengths: WavelengthGrid,
    pub substrate: Vec<f64>,
    pub thickness: f64,
}

impl RenderContext {
    /// D65 + CIE 1931 for 33 or 8 samples; white light and a direct
    /// band-to-channel mapping for 3 bands. White substrate, unit thickness.
    pub fn standard(grid: WavelengthGrid) -> Self {
        let l = grid.len();
        let (illuminant, cmf) = match grid {
            WavelengthGrid::Bands3 => {
                // R reads the long band, B the short one.
                let sel = |band: usize| (0..3).map(|k| f64::from(k == band)).collect::<Vec<_>>();
                (vec![1.0; 3], [sel(2), sel(1), sel(0)])
            }
            _ => {
                let col = |c: usize| -> Vec<f64> {
                    let full: Vec<f64> = CIE1931_2DEG.iter().map(|row| row[c]).collect();
                    WavelengthGrid::Full
                        .downsample(&full, grid)
                        .expect("standard grids nest")
                };
                let illum = WavelengthGrid::Full
                    .downsample(&D65, grid)
                    .expect("standard grids nest");
                (illum, [col(0), col(1), col(2)])
            }
        };
        let response = build_response(grid, &illuminant, &cmf);
        Self {
            grid,
            illuminant,
            cmf,
            substrate: vec![1.0; l],
            thickness: 1.0,
            response,
        }
    }

    pub fn with_substrate(mut self, substrate: Vec<f64>) -> Result<Self> {
        if substrate.len() != self.grid.len() {
            return Err(invalid("substrate length does not match the grid"));
        }
        if substrate.iter().any(|x| !x.is_finite() || !(0.0..=1.0).contains(x)) {
            return Err(invalid("substrate reflectance must lie in [0, 1]"));
        }
        self.substrate = substrate;
        Ok(self)
    }

    pub fn with_thickness(mut self, thickness: f64) -> Result<Self> {
        if !thickness.is_finite() || thickness <= 0.0 {
            return Err(invalid(format!("thickness {thickness} must be positive")));
        }
        self.thickness = thickness;
        Ok(self)
    }

    pub fn from_settings(settings: &RenderSettings) -> Result<Self> {
        Self::standard(settings.wavelengths)
            .with_substrate(settings.substrate.clone())?
            .with_thickness(settings.thickness)
    }

    pub fn settings(&self) -> RenderSettings {
        RenderSettings {
            wavelengths: self.grid,
            substrate: self.substrate.clone(),
            thickness: self.thickness,
        }
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn illuminant(&self) -> &[f64] {
        &self.illuminant
    }
    pub fn cmf(&self) -> &[Vec<f64>; 3] {
        &self.cmf
    }
    pub fn substrate(&self) -> &[f64] {
        &self.substrate
    }
    pub fn thickness(&self) -> f64 {
        self.thickness
    }
    /// White-normalised spectrum-to-linear-RGB matrix, one row per channel.
    pub fn response(&self) -> &[Vec<f64>; 3] {
        &self.response
    }

    /// Linear RGB (unclamped) of a reflectance spectrum.
    #[inline]
    pub fn linear_rgb(&self, r: &[f64]) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (c, row) in self.response.iter().enumerate() {
            out[c] = row.iter().zip(r).map(|(m, v)| m * v).sum();
        }
        out
    }
}

fn build_response(grid: WavelengthGrid, illum: &[f64], cmf: &[Vec<f64>; 3]) -> [Vec<f64>; 3] {
    let l = grid.len();
    let mut m: [Vec<f64>; 3] = [vec![0.0; l], vec![0.0; l], vec![0.0; l]];
    if grid == WavelengthGrid::Bands3 {
        for c in 0..3 {
            m[c] = cmf[c].iter().zip(illum).map(|(a, b)| a * b).collect();
        }
    } else {
        for (c, row) in XYZ_TO_LINEAR_SRGB.iter().enumerate() {
            for k in 0..l {
                m[c][k] = (0..3).map(|j| row[j] * cmf[j][k]).sum::<f64>() * illum[k];
            }
        }
    }
    for row in m.iter_mut() {
        let white: f64 = row.iter().sum();
        row.iter_mut().for_each(|v| *v /= white);
    }
    m
}

/// Standard sRGB transfer function on a linear value in `[0, 1]`.
#[inline]
pub fn srgb_encode(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92 * c
    } else {
        1.055 * c.powf(1.0 / 2.4) - 0.055
    }
}

/// Derivative of [`srgb_encode`].
#[inline]
pub fn srgb_encode_deriv(c: f64) -> f64 {
    if c <= 0.003_130_8 {
        12.92
    } else {
        1.055 / 2.4 * c.powf(1.0 / 2.4 - 1.0)
    }
}

/// Inverse of [`srgb_encode`].
pub fn srgb_decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// Clamp linear RGB into the unit cube and gamma-encode.
#[inline]
pub fn encode_linear(lin: [f64; 3]) -> Rgb {
    lin.map(|c| srgb_encode(c.clamp(0.0, 1.0)))
}

/// Render a reflectance spectrum to sRGB.
pub fn spectrum_to_srgb(r: &[f64], ctx: &RenderContext) -> Result<Rgb> {
    if r.len() != ctx.len() {
        return Err(invalid(format!(
            "spectrum has {} samples, context expects {}",
            r.len(),
            ctx.len()
        )));
    }
    if r.iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
        return Err(invalid("reflectance must lie in [0, 1]"));
    }
    Ok(encode_linear(ctx.linear_rgb(r)))
}

/// Reflectance of a pigment over the context's substrate at its thickness.
pub fn pigment_reflectance(p: &PigmentKm, ctx: &RenderContext) -> Vec<f64> {
    reflectance_over(p, ctx.substrate(), ctx.thickness())
}

/// KM reflectance of a validated pigment, without re-validation.
pub(crate) fn reflectance_over(p: &PigmentKm, substrate: &[f64], t: f64) -> Vec<f64> {
    p.a.iter()
        .zip(&p.s)
        .zip(substrate)
        .map(|((&a, &s), &xi)| clamp_unit(km_scalar(a, s, xi, t)))
        .collect()
}

/// sRGB colour of a single pigment in the given context.
pub fn render_pigment(p: &PigmentKm, ctx: &RenderContext) -> Result<Rgb> {
    if p.len() != ctx.len() {
        return Err(invalid("pigment grid does not match the render context"));
    }
    p.validate()?;
    Ok(encode_linear(ctx.linear_rgb(&pigment_reflectance(p, ctx))))
}

/// sRGB colour of the mixture `weights · pigments`.
pub fn render_mixture(pigments: &[PigmentKm], weights: &[f64], ctx: &RenderContext) -> Result<Rgb> {
    let mix = mix_pigments(pigments, weights)?;
    render_pigment(&mix, ctx)
}
