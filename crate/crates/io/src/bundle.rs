//! Decomposition bundles on disk.
//!
//! A bundle is a directory holding `manifest.json` plus little-endian `f32`
//! payloads: `weights.f32` (N×M, row-major), `palette.f32` (M rows of
//! `a_1..a_L, s_1..s_L`) and, when paint was pasted, `layers.bin`. The
//! manifest records every payload's length and SHA-256, so truncated or
//! altered files are detected on load.

use std::path::Path;

use pigment_core::bundle::{PasteLayer, Provenance};
use pigment_core::spectral::RenderSettings;
use pigment_core::{DecompositionBundle, Palette, RenderContext, SolverConfig, WavelengthGrid, WeightMap};
use serde::{Deserialize, Serialize};

use crate::error::{file_err, IoError, Result};
use crate::fs::{atomic_write, sha256_hex};

pub const BUNDLE_VERSION: u32 = 1;
const FORMAT: &str = "pigmento-bundle";
const MANIFEST: &str = "manifest.json";
const WEIGHTS: &str = "weights.f32";
const PALETTE: &str = "palette.f32";
const LAYERS: &str = "layers.bin";

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Manifest {
    format: String,
    version: u32,
    width: usize,
    height: usize,
    pigments: usize,
    wavelengths: usize,
    grid_centers_nm: Vec<f64>,
    render: RenderSettings,
    #[serde(default)]
    config: Option<SolverConfig>,
    #[serde(default)]
    source_sha256: Option<String>,
    weights: Payload,
    palette: Payload,
    #[serde(default)]
    layers: Vec<LayerRecord>,
    #[serde(default)]
    layers_payload: Option<Payload>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Payload {
    file: String,
    bytes: usize,
    sha256: String,
}

/// Layer `k` occupies `pixels` u32 indices followed by `pixels × M` f32
/// weights in `layers.bin`, layers back to back.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRecord {
    thickness: f64,
    pixels: usize,
}

fn corrupt(msg: impl Into<String>) -> IoError {
    IoError::CorruptBundle(msg.into())
}

fn f32_bytes(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|&v| (v as f32).to_le_bytes()).collect()
}

fn read_f32(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect()
}

fn payload(file: &str, bytes: &[u8]) -> Payload {
    Payload {
        file: file.into(),
        bytes: bytes.len(),
        sha256: sha256_hex(bytes),
    }
}

/// Write `bundle` into directory `dir` (created if missing). Each file is
/// replaced atomically and the manifest is written last.
pub fn save_bundle(bundle: &DecompositionBundle, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(file_err(dir))?;
    let weights = f32_bytes(bundle.weights().values());
    let palette = f32_bytes(bundle.palette().coeffs());

    let mut layer_bytes = Vec::new();
    let mut records = Vec::new();
    for layer in bundle.layers() {
        for &p in &layer.pixels {
            let p = u32::try_from(p).map_err(|_| corrupt("layer pixel index exceeds 32 bits"))?;
            layer_bytes.extend(p.to_le_bytes());
        }
        layer_bytes.extend(f32_bytes(&layer.weights));
        records.push(LayerRecord {
            thickness: layer.thickness,
            pixels: layer.pixels.len(),
        });
    }

    let ctx = bundle.context();
    let manifest = Manifest {
        format: FORMAT.into(),
        version: BUNDLE_VERSION,
        width: bundle.width(),
        height: bundle.height(),
        pigments: bundle.palette().len(),
        wavelengths: ctx.len(),
        grid_centers_nm: ctx.grid().centers(),
        render: ctx.settings(),
        config: bundle.provenance().config.clone(),
        source_sha256: bundle.provenance().source_sha256.clone(),
        weights: payload(WEIGHTS, &weights),
        palette: payload(PALETTE, &palette),
        layers_payload: (!records.is_empty()).then(|| payload(LAYERS, &layer_bytes)),
        layers: records,
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| corrupt(e.to_string()))?;

    atomic_write(&dir.join(WEIGHTS), &weights)?;
    atomic_write(&dir.join(PALETTE), &palette)?;
    if manifest.layers_payload.is_some() {
        atomic_write(&dir.join(LAYERS), &layer_bytes)?;
    }
    atomic_write(&dir.join(MANIFEST), text.as_bytes())?;
    if manifest.layers_payload.is_none() {
        let stale = dir.join(LAYERS);
        if stale.exists() {
            std::fs::remove_file(&stale).map_err(file_err(stale))?;
        }
    }
    log::debug!("saved {}x{} bundle to {}", bundle.width(), bundle.height(), dir.display());
    Ok(())
}

fn read_payload(dir: &Path, p: &Payload, expected: usize, what: &str) -> Result<Vec<u8>> {
    if p.file.contains(['/', '\\']) || p.file.starts_with('.') {
        return Err(corrupt(format!("{what} payload name {:?} is not a plain file name", p.file)));
    }
    if p.bytes != expected {
        return Err(corrupt(format!(
            "{what} payload declared as {} bytes, the manifest shape needs {expected}",
            p.bytes
        )));
    }
    let path = dir.join(&p.file);
    let bytes = std::fs::read(&path).map_err(|e| corrupt(format!("{}: {e}", path.display())))?;
    if bytes.len() != expected {
        return Err(corrupt(format!("{what} payload has {} bytes, expected {expected}", bytes.len())));
    }
    if sha256_hex(&bytes) != p.sha256 {
        return Err(corrupt(format!("{what} payload checksum mismatch")));
    }
    Ok(bytes)
}

pub fn load_bundle(dir: &Path) -> Result<DecompositionBundle> {
    let path = dir.join(MANIFEST);
    let text = std::fs::read_to_string(&path).map_err(file_err(&path))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| corrupt(format!("manifest: {e}")))?;
    if m.format != FORMAT {
        return Err(corrupt(format!("unknown format {:?}", m.format)));
    }
    if m.version != BUNDLE_VERSION {
        return Err(corrupt(format!("unsupported version {} (expected {BUNDLE_VERSION})", m.version)));
    }
    let grid = WavelengthGrid::with_count(m.wavelengths).map_err(|e| corrupt(e.to_string()))?;
    if m.render.wavelengths != grid || m.grid_centers_nm != grid.centers() {
        return Err(corrupt("wavelength grid fields disagree"));
    }
    let n = m
        .width
        .checked_mul(m.height)
        .ok_or_else(|| corrupt("image size overflows"))?;
    let l = grid.len();
    let weights = read_payload(dir, &m.weights, 4 * n * m.pigments, "weights")?;
    let palette = read_payload(dir, &m.palette, 4 * m.pigments * 2 * l, "palette")?;

    let into_corrupt = |e: pigment_core::Error| corrupt(e.to_string());
    let palette = Palette::new(grid, read_f32(&palette)).map_err(into_corrupt)?;
    let weights = WeightMap::new(m.pigments, read_f32(&weights)).map_err(into_corrupt)?;
    let ctx = RenderContext::from_settings(&m.render).map_err(into_corrupt)?;
    let mut bundle = DecompositionBundle::new(m.width, m.height, palette, weights, ctx).map_err(into_corrupt)?;

    let layer_len: usize = m.layers.iter().map(|r| r.pixels * (4 + 4 * m.pigments)).sum();
    let layers = match (&m.layers_payload, m.layers.is_empty()) {
        (None, true) => Vec::new(),
        (Some(p), false) => {
            let bytes = read_payload(dir, p, layer_len, "layers")?;
            let mut offset = 0;
            let mut out = Vec::with_capacity(m.layers.len());
            for r in &m.layers {
                let idx = &bytes[offset..offset + 4 * r.pixels];
                offset += idx.len();
                let w = &bytes[offset..offset + 4 * r.pixels * m.pigments];
                offset += w.len();
                out.push(PasteLayer {
                    thickness: r.thickness,
                    pixels: idx
                        .chunks_exact(4)
                        .map(|c| u32::from_le_bytes([c[0], c[1], c[2], c[3]]) as usize)
                        .collect(),
                    weights: read_f32(w),
                });
            }
            out
        }
        _ => return Err(corrupt("layer records and layer payload disagree")),
    };
    if !layers.is_empty() {
        bundle = bundle.with_layers(layers).map_err(into_corrupt)?;
    }
    Ok(bundle.with_provenance(Provenance {
        source_sha256: m.source_sha256,
        config: m.config,
    }))
}
