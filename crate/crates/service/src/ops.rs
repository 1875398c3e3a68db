//! Edit requests accepted by `POST /edit`.

use pigment_core::edit::{
    copy_paste, cut_inpaint, edge_enhance, mask_from_weights, scale_scattering, scale_weight, swap_pigment, PasteMode,
    PixelMask,
};
use pigment_core::{DecompositionBundle, PigmentDictionary, PigmentKm};
use serde::Deserialize;
use serde_json::Value;

use crate::error::{ApiError, ApiResult};

pub const OPERATIONS: [&str; 6] = [
    "scale_weight",
    "scale_scattering",
    "swap_pigment",
    "copy_paste",
    "cut",
    "edge_enhance",
];

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum EditOp {
    ScaleWeight {
        pigment: usize,
        factor: f64,
        #[serde(default)]
        renormalize: bool,
    },
    ScaleScattering {
        pigment: usize,
        /// One factor for every wavelength, or one per wavelength.
        factor: Factor,
    },
    /// Replace a palette entry by a dictionary pigment (by name) or by
    /// explicit coefficients on the bundle's grid.
    SwapPigment {
        pigment: usize,
        #[serde(default)]
        name: Option<String>,
        #[serde(default)]
        a: Option<Vec<f64>>,
        #[serde(default)]
        s: Option<Vec<f64>>,
    },
    CopyPaste {
        mask: MaskSpec,
        pigments: Vec<usize>,
        offset: [i64; 2],
        /// `"layer"` (with `thickness`, default 1) or `"mix"` (with `scale`,
        /// default 1).
        mode: String,
        #[serde(default)]
        thickness: Option<f64>,
        #[serde(default)]
        scale: Option<f64>,
    },
    Cut {
        mask: MaskSpec,
    },
    EdgeEnhance {
        strength: f64,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Factor {
    Scalar(f64),
    PerWavelength(Vec<f64>),
}

/// Pixel selection: a rectangle `[x0, x1) × [y0, y1)` or a weight threshold.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MaskSpec {
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
    Threshold { pigment: usize, threshold: f64 },
}

impl MaskSpec {
    pub fn resolve(&self, b: &DecompositionBundle) -> ApiResult<PixelMask> {
        match *self {
            MaskSpec::Rect { x0, y0, x1, y1 } => {
                if x0 > x1 || y0 > y1 || x1 > b.width() || y1 > b.height() {
                    return Err(ApiError::unprocessable("rectangle lies outside the image"));
                }
                Ok(PixelMask::rect(b.width(), b.height(), x0, y0, x1, y1))
            }
            MaskSpec::Threshold { pigment, threshold } => Ok(mask_from_weights(b, pigment, threshold)?),
        }
    }
}

/// Parse a request body: an unknown `op` is a 400, malformed parameters
/// for a known op a 422.
pub fn parse(body: &Value) -> ApiResult<EditOp> {
    let op = body
        .get("op")
        .and_then(Value::as_str)
        .ok_or_else(|| ApiError::bad_request("missing \"op\""))?;
    if !OPERATIONS.contains(&op) {
        return Err(ApiError::bad_request(format!("unknown operation {op:?}")));
    }
    serde_json::from_value(body.clone()).map_err(|e| ApiError::unprocessable(format!("{op}: {e}")))
}

pub fn apply(op: &EditOp, b: &DecompositionBundle, dict: &PigmentDictionary) -> ApiResult<DecompositionBundle> {
    let out = match op {
        EditOp::ScaleWeight {
            pigment,
            factor,
            renormalize,
        } => scale_weight(b, *pigment, *factor, *renormalize)?,
        EditOp::ScaleScattering { pigment, factor } => {
            let factors = match factor {
                Factor::Scalar(f) => vec![*f; b.context().len()],
                Factor::PerWavelength(v) => v.clone(),
            };
            scale_scattering(b, *pigment, &factors)?
        }
        EditOp::SwapPigment { pigment, name, a, s } => {
            let replacement = match (name, a, s) {
                (Some(name), None, None) => {
                    let i = dict
                        .entries()
                        .iter()
                        .position(|e| &e.name == name)
                        .ok_or_else(|| ApiError::unprocessable(format!("no dictionary pigment named {name:?}")))?;
                    dict.pigment_on(i, b.context().grid())?
                }
                (None, Some(a), Some(s)) => PigmentKm::new(a.clone(), s.clone())?,
                _ => return Err(ApiError::unprocessable("give either a pigment name or both a and s")),
            };
            swap_pigment(b, *pigment, &replacement)?
        }
        EditOp::CopyPaste {
            mask,
            pigments,
            offset,
            mode,
            thickness,
            scale,
        } => {
            let mode = match (mode.as_str(), thickness, scale) {
                ("layer", t, None) => PasteMode::Layer {
                    thickness: t.unwrap_or(1.0),
                },
                ("mix", None, s) => PasteMode::Mix { scale: s.unwrap_or(1.0) },
                _ => {
                    return Err(ApiError::unprocessable(
                        "mode must be \"layer\" (with thickness) or \"mix\" (with scale)",
                    ))
                }
            };
            copy_paste(b, &mask.resolve(b)?, pigments, (offset[0], offset[1]), mode)?
        }
        EditOp::Cut { mask } => cut_inpaint(b, &mask.resolve(b)?)?,
        EditOp::EdgeEnhance { strength } => edge_enhance(b, *strength)?,
    };
    Ok(out)
}
