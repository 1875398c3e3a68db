//! Kubelka-Munk reflectance of a homogeneous pigment layer over a substrate.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Lower bound enforced on every absorption and scattering coefficient.
pub const COEFF_FLOOR: f64 = 1e-6;

/// Per-wavelength absorption `a` and scattering `s` of one pigment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PigmentKm {
    pub a: Vec<f64>,
    pub s: Vec<f64>,
}

impl PigmentKm {
    pub fn new(a: Vec<f64>, s: Vec<f64>) -> Result<Self> {
        let p = Self { a, s };
        p.validate()?;
        Ok(p)
    }

    /// Spectrally flat pigment.
    pub fn constant(len: usize, a: f64, s: f64) -> Result<Self> {
        Self::new(vec![a; len], vec![s; len])
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.s.len() {
            return Err(invalid(format!(
                "absorption has {} entries but scattering has {}",
                self.a.len(),
                self.s.len()
            )));
        }
        if self.a.is_empty() {
            return Err(invalid("pigment has no wavelengths"));
        }
        for &v in self.a.iter().chain(&self.s) {
            if !v.is_finite() {
                return Err(invalid("non-finite KM coefficient"));
            }
            if v <= 0.0 {
                return Err(invalid(format!("KM coefficient {v} is not positive")));
            }
        }
        Ok(())
    }

    /// Raise every coefficient to at least [`COEFF_FLOOR`].
    pub fn floored(mut self) -> Self {
        for v in self.a.iter_mut().chain(self.s.iter_mut()) {
            *v = v.max(COEFF_FLOOR);
        }
        self
    }

    /// Coefficients as one vector `[a..., s...]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.a.clone();
        v.extend_from_slice(&self.s);
        v
    }
}

/// Reflectance of a layer with absorption `a`, scattering `s` and thickness
/// `t` over a substrate of reflectance `xi`.
///
/// Evaluated in the form obtained by multiplying numerator and denominator of
/// the usual coth expression by `tanh(y s t)`:
///
/// `r = (τ(1 − ξx) + ξy) / (τ(x − ξ) + y)`, with `x = 1 + a/s`,
/// `y = √(x² − 1)`, `τ = tanh(y s t)`.
///
/// This is finite at `t = 0` (where it returns `ξ`) and saturates cleanly
/// for thick layers, so no special casing of coth is needed. Requires
/// `a, s > 0`.
#[inline]
pub fn km_scalar(a: f64, s: f64, xi: f64, t: f64) -> f64 {
    let q = a / s;
    let x = 1.0 + q;
    let y = (q * (q + 2.0)).sqrt();
    let tau = (y * s * t).tanh();
    (tau * (1.0 - xi * x) + xi * y) / (tau * (x - xi) + y)
}

/// [`km_scalar`] together with `∂r/∂a` and `∂r/∂s`.
#[inline]
pub fn km_scalar_grad(a: f64, s: f64, xi: f64, t: f64) -> (f64, f64, f64) {
    let q = a / s;
    let x = 1.0 + q;
    let y = (q * (q + 2.0)).sqrt();
    let tau = (y * s * t).tanh();
    let num = tau * (1.0 - xi * x) + xi * y;
    let den = tau * (x - xi) + y;
    let r = num / den;

    let sech2 = 1.0 - tau * tau;
    let x_over_y = x / y;
    // d/da
    let dx_a = 1.0 / s;
    let dy_a = x_over_y * dx_a;
    let dtau_a = sech2 * t * x_over_y;
    // d/ds; note ∂(y s t)/∂s simplifies to t q / y
    let dx_s = -q / s;
    let dy_s = x_over_y * dx_s;
    let dtau_s = sech2 * t * q / y;

    let dr = |dtau: f64, dx: f64, dy: f64| {
        let dnum = dtau * (1.0 - xi * x) - tau * xi * dx + xi * dy;
        let dden = dtau * (x - xi) + tau * dx + dy;
        (dnum - r * dden) / den
    };
    (r, dr(dtau_a, dx_a, dy_a), dr(dtau_s, dx_s, dy_s))
}

/// Per-wavelength reflectance of `pigment` at thickness `t` over `substrate`.
/// The result is clamped to `[0, 1]`.
pub fn km_reflectance(pigment: &PigmentKm, substrate: &[f64], t: f64) -> Result<Vec<f64>> {
    pigment.validate()?;
    if substrate.len() != pigment.len() {
        return Err(invalid(format!(
            "substrate has {} wavelengths, pigment has {}",
            substrate.len(),
            pigment.len()
        )));
    }
    if !t.is_finite() || t < 0.0 {
        return Err(invalid(format!("thickness {t} must be finite and non-negative")));
    }
    if substrate.iter().any(|x| !x.is_finite()) {
        return Err(invalid("non-finite substrate reflectance"));
    }
    Ok(pigment
        .a
        .iter()
        .zip(&pigment.s)
        .zip(substrate)
        .map(|((&a, &s), &xi)| clamp_unit(km_scalar(a, s, xi, t)))
        .collect())
}

pub(crate) fn clamp_unit(r: f64) -> f64 {
    if !(-1e-6..=1.0 + 1e-6).contains(&r) {
        log::warn!("reflectance {r} outside [0, 1] before clamping");
    }
    r.clamp(0.0, 1.0)
}

/// Convex mixture of pigments: coefficient-wise weighted average.
pub fn mix_pigments(pigments: &[PigmentKm], weights: &[f64]) -> Result<PigmentKm> {
    if pigments.is_empty() || pigments.len() != weights.len() {
        return Err(invalid(format!(
            "{} pigments but {} weights",
            pigments.len(),
            weights.len()
        )));
    }
    let len = pigments[0].len();
    if pigments.iter().any(|p| p.len() != len) {
        return Err(invalid("pigments have different wavelength counts"));
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(invalid("mixing weights must be finite and non-negative"));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::DegenerateMixture);
    }
    let mut a = vec![0.0; len];
    let mut s = vec![0.0; len];
    for (p, &w) in pigments.iter().zip(weights) {
        for l in 0..len {
            a[l] += w * p.a[l];
            s[l] += w * p.s[l];
        }
    }
    a.iter_mut().chain(s.iter_mut()).for_each(|v| *v /= total);
    Ok(PigmentKm { a, s })
}
