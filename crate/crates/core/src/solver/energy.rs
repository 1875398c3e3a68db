//! Energy terms and their analytic gradients.
//!
//! Shapes: `w` is `N × M` row-major, `h` is `M × 2L` row-major with each row
//! `[a_1..a_L, s_1..s_L]`, images are `N` sRGB triples.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::spectral::km::km_scalar_grad;
use crate::spectral::render::{srgb_encode, srgb_encode_deriv};
use crate::spectral::{RenderContext, Rgb};

use super::bilateral::SmoothingOperator;

/// Pixels per parallel work item. Partial sums are combined in chunk order,
/// so results do not depend on the thread count.
const CHUNK: usize = 256;

/// `Σ ‖I − φ(km(WH))‖²`, optionally accumulating `∂/∂W` and `∂/∂H`.
///
/// Returns `+∞` if some weight row sums to zero (so a line search backs off).
pub(crate) fn data_term(
    w: &[f64],
    h: &[f64],
    m: usize,
    image: &[Rgb],
    ctx: &RenderContext,
    gw: Option<&mut [f64]>,
    gh: Option<&mut [f64]>,
) -> f64 {
    let l = ctx.len();
    let want_h = gh.is_some();
    let mut scratch_gw;
    let gw: &mut [f64] = match gw {
        Some(g) => g,
        None => {
            scratch_gw = Vec::new();
            &mut scratch_gw
        }
    };
    let want_w = !gw.is_empty();

    let run = |(ci, (pix, gw_chunk)): (usize, (&[Rgb], &mut [f64]))| -> (f64, Vec<f64>) {
        let mut gh_local = if want_h { vec![0.0; m * 2 * l] } else { Vec::new() };
        let mut k = vec![0.0; 2 * l];
        let mut gk = vec![0.0; 2 * l];
        let mut energy = 0.0;
        for (j, target) in pix.iter().enumerate() {
            let p = ci * CHUNK + j;
            let row = &w[p * m..(p + 1) * m];
            let gw_row = if want_w {
                Some(&mut gw_chunk[j * m..(j + 1) * m])
            } else {
                None
            };
            let gh_opt = if want_h { Some(gh_local.as_mut_slice()) } else { None };
            energy += pixel_term(row, h, target, ctx, &mut k, &mut gk, gw_row, gh_opt);
        }
        (energy, gh_local)
    };

    let partials: Vec<(f64, Vec<f64>)> = if want_w {
        image
            .par_chunks(CHUNK)
            .zip(gw.par_chunks_mut(CHUNK * m))
            .enumerate()
            .map(run)
            .collect()
    } else {
        image
            .par_chunks(CHUNK)
            .enumerate()
            .map(|(ci, pix)| run((ci, (pix, &mut []))))
            .collect()
    };

    let mut total = 0.0;
    let mut gh_out = gh;
    if let Some(g) = gh_out.as_deref_mut() {
        g.iter_mut().for_each(|v| *v = 0.0);
    }
    for (e, part) in partials {
        total += e;
        if let Some(g) = gh_out.as_deref_mut() {
            for (a, b) in g.iter_mut().zip(&part) {
                *a += b;
            }
        }
    }
    total
}

/// One pixel's squared residual. Gradients are written (not accumulated) into
/// `gw` and accumulated into `gh`.
#[allow(clippy::too_many_arguments)]
#[inline]
fn pixel_term(
    row: &[f64],
    h: &[f64],
    target: &Rgb,
    ctx: &RenderContext,
    k: &mut [f64],
    gk: &mut [f64],
    gw: Option<&mut [f64]>,
    gh: Option<&mut [f64]>,
) -> f64 {
    let m = row.len();
    let l2 = k.len();
    let l = l2 / 2;
    let total: f64 = row.iter().sum();
    if !(total > 0.0) {
        return f64::INFINITY;
    }
    k.iter_mut().for_each(|v| *v = 0.0);
    for (i, &wi) in row.iter().enumerate() {
        if wi != 0.0 {
            for (kv, hv) in k.iter_mut().zip(&h[i * l2..(i + 1) * l2]) {
                *kv += wi * hv;
            }
        }
    }
    k.iter_mut().for_each(|v| *v /= total);

    let xi = ctx.substrate();
    let t = ctx.thickness();
    let resp = ctx.response();
    let mut lin = [0.0; 3];
    let mut da_buf = [0.0f64; 33];
    let mut ds_buf = [0.0f64; 33];
    for j in 0..l {
        let (r, da, ds) = km_scalar_grad(k[j], k[l + j], xi[j], t);
        let rc = r.clamp(0.0, 1.0);
        da_buf[j] = da;
        ds_buf[j] = ds;
        for c in 0..3 {
            lin[c] += resp[c][j] * rc;
        }
    }
    let mut e = 0.0;
    let mut coef = [0.0; 3];
    for c in 0..3 {
        let lc = lin[c].clamp(0.0, 1.0);
        let res = srgb_encode(lc) - target[c];
        e += res * res;
        let slope = if lin[c] > 0.0 && lin[c] < 1.0 { srgb_encode_deriv(lin[c]) } else { 0.0 };
        coef[c] = 2.0 * res * slope;
    }
    if gw.is_none() && gh.is_none() {
        return e;
    }
    for j in 0..l {
        let gr = coef[0] * resp[0][j] + coef[1] * resp[1][j] + coef[2] * resp[2][j];
        gk[j] = gr * da_buf[j];
        gk[l + j] = gr * ds_buf[j];
    }
    if let Some(gw) = gw {
        for i in 0..m {
            let hi = &h[i * l2..(i + 1) * l2];
            let mut acc = 0.0;
            for q in 0..l2 {
                acc += gk[q] * (hi[q] - k[q]);
            }
            gw[i] = acc / total;
        }
    }
    if let Some(gh) = gh {
        for (i, &wi) in row.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            let f = wi / total;
            for (g, d) in gh[i * l2..(i + 1) * l2].iter_mut().zip(gk.iter()) {
                *g += f * d;
            }
        }
    }
    e
}

fn check_shapes(w: &[f64], h: &[f64], m: usize, image: &[Rgb], ctx: &RenderContext) -> Result<()> {
    if m == 0 || w.len() != image.len() * m {
        return Err(invalid("weight matrix shape does not match the image"));
    }
    if h.len() != m * 2 * ctx.len() {
        return Err(invalid("palette shape does not match the weights or grid"));
    }
    if ctx.len() > 33 {
        return Err(invalid("at most 33 wavelengths are supported"));
    }
    Ok(())
}

/// Data energy with gradients `(E, ∂E/∂W, ∂E/∂H)`.
pub fn e_data(w: &[f64], h: &[f64], m: usize, image: &[Rgb], ctx: &RenderContext) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    check_shapes(w, h, m, image, ctx)?;
    let mut gw = vec![0.0; w.len()];
    let mut gh = vec![0.0; h.len()];
    let e = data_term(w, h, m, image, ctx, Some(&mut gw), Some(&mut gh));
    if e.is_infinite() {
        return Err(Error::DegenerateMixture);
    }
    Ok((e, gw, gh))
}

/// `‖W·1 − 1‖²`.
pub fn e_sum(w: &[f64], m: usize) -> (f64, Vec<f64>) {
    let mut g = vec![0.0; w.len()];
    let e = sum_term(w, m, &mut g);
    (e, g)
}

/// Writes the gradient into `g` and returns the energy.
pub(crate) fn sum_term(w: &[f64], m: usize, g: &mut [f64]) -> f64 {
    let mut e = 0.0;
    for (row, grow) in w.chunks_exact(m).zip(g.chunks_exact_mut(m)) {
        let d = row.iter().sum::<f64>() - 1.0;
        e += d * d;
        grow.iter_mut().for_each(|v| *v = 2.0 * d);
    }
    e
}

/// Wavelength-smoothness weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothWeights {
    pub w_a: f64,
    pub w_s: f64,
    pub w_ratio: f64,
}

/// Penalty on adjacent-wavelength differences of `a`, `s` and `a/s`, scaled by
/// `N / (M (L − 1))`. Zero for `L < 2`.
pub fn e_smooth(h: &[f64], m: usize, l: usize, n: usize, sw: SmoothWeights) -> (f64, Vec<f64>) {
    let mut g = vec![0.0; h.len()];
    if l < 2 || m == 0 {
        return (0.0, g);
    }
    let scale = n as f64 / (m * (l - 1)) as f64;
    let mut e = 0.0;
    for (row, grow) in h.chunks_exact(2 * l).zip(g.chunks_exact_mut(2 * l)) {
        let (a, s) = row.split_at(l);
        for j in 0..l - 1 {
            let da = a[j + 1] - a[j];
            let ds = s[j + 1] - s[j];
            let (q0, q1) = (a[j] / s[j], a[j + 1] / s[j + 1]);
            let dq = q1 - q0;
            e += sw.w_a * da * da + sw.w_s * ds * ds + sw.w_ratio * dq * dq;

            grow[j + 1] += 2.0 * sw.w_a * da;
            grow[j] -= 2.0 * sw.w_a * da;
            grow[l + j + 1] += 2.0 * sw.w_s * ds;
            grow[l + j] -= 2.0 * sw.w_s * ds;
            let cq = 2.0 * sw.w_ratio * dq;
            grow[j + 1] += cq / s[j + 1];
            grow[l + j + 1] -= cq * q1 / s[j + 1];
            grow[j] -= cq / s[j];
            grow[l + j] += cq * q0 / s[j];
        }
    }
    g.iter_mut().for_each(|v| *v *= scale);
    (scale * e, g)
}

/// `−(1/M) ‖1 − W‖²`; rewards weights far from one.
pub fn e_sparse(w: &[f64], m: usize) -> (f64, Vec<f64>) {
    let mut g = vec![0.0; w.len()];
    let e = sparse_term(w, m, &mut g);
    (e, g)
}

pub(crate) fn sparse_term(w: &[f64], m: usize, g: &mut [f64]) -> f64 {
    let inv_m = 1.0 / m as f64;
    let mut e = 0.0;
    for (v, gv) in w.iter().zip(g.iter_mut()) {
        let d = 1.0 - v;
        e += d * d;
        *gv = 2.0 * inv_m * d;
    }
    -inv_m * e
}

/// `(1/M) ‖S W‖²` with gradient `(2/M) Sᵀ S W`.
pub fn e_spatial(w: &[f64], m: usize, op: &SmoothingOperator) -> Result<(f64, Vec<f64>)> {
    if w.len() != op.len() * m {
        return Err(invalid("smoothing operator size does not match the weights"));
    }
    let mut g = vec![0.0; w.len()];
    let e = spatial_term(w, m, op, &mut g);
    Ok((e, g))
}

pub(crate) fn spatial_term(w: &[f64], m: usize, op: &SmoothingOperator, g: &mut [f64]) -> f64 {
    let sw = op.apply(w, m);
    let inv_m = 1.0 / m as f64;
    let e = sw.iter().map(|v| v * v).sum::<f64>() * inv_m;
    let back = op.apply_transpose(&sw, m);
    for (gv, b) in g.iter_mut().zip(back) {
        *gv = 2.0 * inv_m * b;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::WavelengthGrid;

    #[test]
    fn smooth_hand_example() {
        let h = [1.0, 2.0, 1.0, 1.0];
        let sw = SmoothWeights { w_a: 1.0, w_s: 1.0, w_ratio: 0.001 };
        let (e, _) = e_smooth(&h, 1, 2, 1, sw);
        assert!((e - 1.001).abs() < 1e-12);
        let (e0, g0) = e_smooth(&[2.0, 2.0, 2.0, 0.5, 0.5, 0.5], 1, 3, 10, sw);
        assert_eq!(e0, 0.0);
        assert!(g0.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn sum_and_sparse_examples() {
        let w = [0.5, 0.5, 1.0, 0.5, 0.25, 0.75];
        assert!((e_sum(&w, 2).0 - 0.25).abs() < 1e-15);
        assert_eq!(e_sparse(&[0.0; 6], 3).0, -2.0);
        assert_eq!(e_sparse(&[1.0; 6], 3).0, 0.0);
    }

    #[test]
    fn data_is_zero_on_exact_reconstruction() {
        let ctx = RenderContext::standard(WavelengthGrid::Bands8);
        let h: Vec<f64> = (0..3 * 16).map(|i| 0.1 + (i % 7) as f64 * 0.3).collect();
        let w = vec![0.2, 0.3, 0.5, 1.0, 0.0, 0.0];
        let pal = crate::model::Palette::new(WavelengthGrid::Bands8, h.clone()).unwrap();
        let img: Vec<Rgb> = w
            .chunks(3)
            .map(|r| crate::model::render_pixel(r, &pal, &ctx).unwrap())
            .collect();
        let (e, _, _) = e_data(&w, &h, 3, &img, &ctx).unwrap();
        assert!(e < 1e-24, "{e}");
    }

    #[test]
    fn data_rejects_zero_row() {
        let ctx = RenderContext::standard(WavelengthGrid::Bands8);
        let h = vec![1.0; 2 * 16];
        assert_eq!(
            e_data(&[0.0, 0.0], &h, 2, &[[0.5; 3]], &ctx).unwrap_err(),
            Error::DegenerateMixture
        );
    }
}
