//! Palette (matrix H) and per-pixel mixing weights (matrix W).

use crate::error::{invalid, Error, Result};
use crate::spectral::render::reflectance_over;
use crate::spectral::{encode_linear, PigmentKm, RenderContext, Rgb, WavelengthGrid, COEFF_FLOOR};

/// `M` primary pigments on a common wavelength grid, stored as an `M × 2L`
/// row-major matrix with each row laid out as `[a_1..a_L, s_1..s_L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    grid: WavelengthGrid,
    coeffs: Vec<f64>,
}

impl Palette {
    pub fn new(grid: WavelengthGrid, coeffs: Vec<f64>) -> Result<Self> {
        let row = 2 * grid.len();
        if coeffs.is_empty() || coeffs.len() % row != 0 {
            return Err(invalid(format!(
                "palette has {} coefficients, not a multiple of {row}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|v| !v.is_finite() || *v < COEFF_FLOOR) {
            return Err(invalid("palette coefficients must be finite and at least the floor"));
        }
        Ok(Self { grid, coeffs })
    }

    pub fn from_pigments(grid: WavelengthGrid, pigments: &[PigmentKm]) -> Result<Self> {
        let mut coeffs = Vec::with_capacity(pigments.len() * 2 * grid.len());
        for p in pigments {
            if p.len() != grid.len() {
                return Err(invalid("pigment length does not match the palette grid"));
            }
            coeffs.extend(p.to_vec());
        }
        Self::new(grid, coeffs)
    }

    pub fn grid(&self) -> WavelengthGrid {
        self.grid
    }

    /// Number of pigments `M`.
    pub fn len(&self) -> usize {
        self.coeffs.len() / (2 * self.grid.len())
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let w = 2 * self.grid.len();
        &self.coeffs[i * w..(i + 1) * w]
    }

    pub fn a(&self, i: usize) -> &[f64] {
        &self.row(i)[..self.grid.len()]
    }

    pub fn s(&self, i: usize) -> &[f64] {
        &self.row(i)[self.grid.len()..]
    }

    pub fn pigment(&self, i: usize) -> PigmentKm {
        PigmentKm {
            a: self.a(i).to_vec(),
            s: self.s(i).to_vec(),
        }
    }

    pub fn pigments(&self) -> Vec<PigmentKm> {
        (0..self.len()).map(|i| self.pigment(i)).collect()
    }

    pub fn replace(&mut self, i: usize, p: &PigmentKm) -> Result<()> {
        if i >= self.len() {
            return Err(invalid(format!("pigment index {i} out of range")));
        }
        if p.len() != self.grid.len() {
            return Err(invalid("replacement pigment is on a different wavelength grid"));
        }
        p.validate()?;
        let w = 2 * self.grid.len();
        self.coeffs[i * w..(i + 1) * w].copy_from_slice(&p.to_vec());
        for v in &mut self.coeffs[i * w..(i + 1) * w] {
            *v = v.max(COEFF_FLOOR);
        }
        Ok(())
    }

    /// Mixed coefficients `Σ wᵢ kᵢ / Σ wᵢ` written into `out` (length `2L`).
    #[inline]
    pub fn mix_into(&self, weights: &[f64], out: &mut [f64]) -> Result<()> {
        let total: f64 = weights.iter().sum();
        if total <= 0.0 || !total.is_finite() {
            return Err(Error::DegenerateMixture);
        }
        out.iter_mut().for_each(|v| *v = 0.0);
        for (i, &w) in weights.iter().enumerate() {
            if w == 0.0 {
                continue;
            }
            for (o, &c) in out.iter_mut().zip(self.row(i)) {
                *o += w * c;
            }
        }
        out.iter_mut().for_each(|v| *v /= total);
        Ok(())
    }

    /// Reflectance spectrum of a pixel with the given weight row.
    pub fn mixture_reflectance(&self, weights: &[f64], ctx: &RenderContext) -> Result<Vec<f64>> {
        let l = self.grid.len();
        let mut k = vec![0.0; 2 * l];
        self.mix_into(weights, &mut k)?;
        let p = PigmentKm {
            a: k[..l].to_vec(),
            s: k[l..].to_vec(),
        };
        Ok(reflectance_over(&p, ctx.substrate(), ctx.thickness()))
    }

    /// sRGB of each pigment alone.
    pub fn swatches(&self, ctx: &RenderContext) -> Vec<Rgb> {
        (0..self.len())
            .map(|i| {
                let r = reflectance_over(&self.pigment(i), ctx.substrate(), ctx.thickness());
                encode_linear(ctx.linear_rgb(&r))
            })
            .collect()
    }
}

/// Render one pixel: mix the palette by `weights` (normalised), apply KM and
/// the colour pipeline.
pub fn render_pixel(weights: &[f64], palette: &Palette, ctx: &RenderContext) -> Result<Rgb> {
    if weights.len() != palette.len() {
        return Err(invalid(format!(
            "{} weights for {} pigments",
            weights.len(),
            palette.len()
        )));
    }
    if palette.grid() != ctx.grid() {
        return Err(invalid("palette and render context use different grids"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(invalid("weights must be finite and non-negative"));
    }
    let r = palette.mixture_reflectance(weights, ctx)?;
    Ok(encode_linear(ctx.linear_rgb(&r)))
}

/// `N × M` row-major mixing weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    pigments: usize,
    values: Vec<f64>,
}

impl WeightMap {
    pub fn new(pigments: usize, values: Vec<f64>) -> Result<Self> {
        if pigments == 0 || values.len() % pigments != 0 {
            return Err(invalid("weight buffer is not a whole number of rows"));
        }
        if values.iter().any(|w| !w.is_finite() || !(0.0..=1.0).contains(w)) {
            return Err(invalid("weights must lie in [0, 1]"));
        }
        Ok(Self { pigments, values })
    }

    /// Every weight equal to `1/M`.
    pub fn uniform(pixels: usize, pigments: usize) -> Self {
        Self {
            pigments,
            values: vec![1.0 / pigments as f64; pixels * pigments],
        }
    }

    pub fn pixels(&self) -> usize {
        self.values.len() / self.pigments
    }
    pub fn pigments(&self) -> usize {
        self.pigments
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
    pub fn row(&self, p: usize) -> &[f64] {
        &self.values[p * self.pigments..(p + 1) * self.pigments]
    }
    pub fn rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.pigments)
    }
    /// Weight channel `i` as a per-pixel vector.
    pub fn channel(&self, i: usize) -> Vec<f64> {
        self.rows().map(|r| r[i]).collect()
    }

    /// Mean absolute deviation of the row sums from one.
    pub fn mean_row_sum_error(&self) -> f64 {
        let n = self.pixels();
        self.rows().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).sum::<f64>() / n as f64
    }
}
