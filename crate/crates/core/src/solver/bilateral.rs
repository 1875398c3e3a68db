//! Edge-aware smoothing operator `S = A − I`, with `A` a row-normalised
//! bilateral affinity matrix.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::image::RgbImage;

use super::config::BilateralParams;

/// Sparse `N × N` matrix in CSR form. Every row sums to zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothingOperator {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    // Transpose, kept for the gradient `Sᵀ (S W)`.
    t_row_ptr: Vec<usize>,
    t_cols: Vec<usize>,
    t_vals: Vec<f64>,
}

impl SmoothingOperator {
    /// Build from non-negative affinities `(row, col, value)`. Each row is
    /// normalised to sum to one and the identity is subtracted. Rows without
    /// any affinity become zero rows.
    pub fn from_affinities(n: usize, entries: &[(usize, usize, f64)]) -> Result<Self> {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(i, j, v) in entries {
            if i >= n || j >= n {
                return Err(invalid("affinity index out of range"));
            }
            if !v.is_finite() || v < 0.0 {
                return Err(invalid("affinities must be finite and non-negative"));
            }
            rows[i].push((j, v));
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            let total: f64 = row.iter().map(|e| e.1).sum();
            if total > 0.0 {
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len() + 1);
                for (j, v) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == j => last.1 += v / total,
                        _ => merged.push((j, v / total)),
                    }
                }
                match merged.binary_search_by_key(&i, |e| e.0) {
                    Ok(k) => merged[k].1 -= 1.0,
                    Err(k) => merged.insert(k, (i, -1.0)),
                }
                for (j, v) in merged {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(Self::from_csr(n, row_ptr, cols, vals))
    }

    fn from_csr(n: usize, row_ptr: Vec<usize>, cols: Vec<usize>, vals: Vec<f64>) -> Self {
        let mut counts = vec![0usize; n + 1];
        for &c in &cols {
            counts[c + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let t_row_ptr = counts.clone();
        let mut next = counts;
        let mut t_cols = vec![0; cols.len()];
        let mut t_vals = vec![0.0; vals.len()];
        for i in 0..n {
            for k in row_ptr[i]..row_ptr[i + 1] {
                let c = cols[k];
                t_cols[next[c]] = i;
                t_vals[next[c]] = vals[k];
                next[c] += 1;
            }
        }
        Self {
            n,
            row_ptr,
            cols,
            vals,
            t_row_ptr,
            t_cols,
            t_vals,
        }
    }

    /// Bilateral affinities over a `(2r+1)²` window (the pixel itself
    /// included): `exp(−d²/2σ_s²) · exp(−‖Δc‖²/2σ_c²)`.
    pub fn bilateral(image: &RgbImage, params: &BilateralParams) -> Self {
        let (w, h) = (image.width(), image.height());
        let r = params.radius as isize;
        let inv_s = 1.0 / (2.0 * params.sigma_spatial * params.sigma_spatial);
        let inv_c = 1.0 / (2.0 * params.sigma_color * params.sigma_color);
        let px = image.pixels();
        let rows: Vec<Vec<(usize, f64)>> = (0..w * h)
            .into_par_iter()
            .map(|p| {
                let (x, y) = ((p % w) as isize, (p / w) as isize);
                let mut row = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (qx, qy) = (x + dx, y + dy);
                        if qx < 0 || qy < 0 || qx >= w as isize || qy >= h as isize {
                            continue;
                        }
                        let q = qy as usize * w + qx as usize;
                        let dc: f64 = (0..3).map(|c| (px[p][c] - px[q][c]).powi(2)).sum();
                        let d2 = (dx * dx + dy * dy) as f64;
                        row.push((q, (-d2 * inv_s - dc * inv_c).exp()));
                    }
                }
                row
            })
            .collect();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for (p, row) in rows.into_iter().enumerate() {
            let total: f64 = row.iter().map(|e| e.1).sum();
            for (q, v) in row {
                cols.push(q);
                vals.push(if q == p { v / total - 1.0 } else { v / total });
            }
            row_ptr.push(cols.len());
        }
        Self::from_csr(w * h, row_ptr, cols, vals)
    }

    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        (&self.cols[r.clone()], &self.vals[r])
    }

    /// Entry `(i, j)`, zero when not stored.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (c, v) = self.row(i);
        c.iter().position(|&k| k == j).map_or(0.0, |k| v[k])
    }

    /// `S W` for an `N × M` row-major `W`.
    pub fn apply(&self, w: &[f64], m: usize) -> Vec<f64> {
        spmm(&self.row_ptr, &self.cols, &self.vals, w, m)
    }

    /// `Sᵀ V` for an `N × M` row-major `V`.
    pub fn apply_transpose(&self, v: &[f64], m: usize) -> Vec<f64> {
        spmm(&self.t_row_ptr, &self.t_cols, &self.t_vals, v, m)
    }
}

fn spmm(row_ptr: &[usize], cols: &[usize], vals: &[f64], w: &[f64], m: usize) -> Vec<f64> {
    let mut out = vec![0.0; w.len()];
    out.par_chunks_mut(m).enumerate().for_each(|(i, o)| {
        for k in row_ptr[i]..row_ptr[i + 1] {
            let src = &w[cols[k] * m..(cols[k] + 1) * m];
            for (a, b) in o.iter_mut().zip(src) {
                *a += vals[k] * b;
            }
        }
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_sum_to_zero() {
        let px: Vec<[f64; 3]> = (0..35).map(|i| [(i % 5) as f64 / 5.0, 0.3, (i / 5) as f64 / 7.0]).collect();
        let img = RgbImage::new(5, 7, px).unwrap();
        let op = SmoothingOperator::bilateral(&img, &BilateralParams::default());
        for i in 0..op.len() {
            let (c, v) = op.row(i);
            assert!(v.iter().sum::<f64>().abs() < 1e-14);
            for (&j, &x) in c.iter().zip(v) {
                if j != i {
                    assert!(x >= 0.0);
                }
            }
        }
    }

    #[test]
    fn constant_image_gives_spatial_gaussian() {
        let img = RgbImage::filled(9, 9, [0.4; 3]).unwrap();
        let op = SmoothingOperator::bilateral(&img, &BilateralParams::default());
        let centre = 4 * 9 + 4;
        let g = |d2: f64| (-d2 / 8.0).exp();
        let total: f64 = (-2i32..=2)
            .flat_map(|dy| (-2i32..=2).map(move |dx| g((dx * dx + dy * dy) as f64)))
            .sum();
        assert!((op.get(centre, centre) - (1.0 / total - 1.0)).abs() < 1e-15);
        assert!((op.get(centre, centre + 1) - g(1.0) / total).abs() < 1e-15);
        assert!((op.get(centre, centre + 2 * 9 + 2) - g(8.0) / total).abs() < 1e-15);
        assert_eq!(op.get(centre, centre + 3), 0.0);
    }

    #[test]
    fn hard_edge_blocks_affinity() {
        let px: Vec<[f64; 3]> = (0..64).map(|i| if i % 8 < 4 { [0.1; 3] } else { [0.9; 3] }).collect();
        let img = RgbImage::new(8, 8, px).unwrap();
        let op = SmoothingOperator::bilateral(&img, &BilateralParams::default());
        for i in 0..64 {
            let (c, v) = op.row(i);
            for (&j, &x) in c.iter().zip(v) {
                if (i % 8 < 4) != (j % 8 < 4) {
                    assert!(x < 1e-6, "{i}->{j}: {x}");
                }
            }
        }
    }

    #[test]
    fn transpose_matches_dense() {
        let op = SmoothingOperator::from_affinities(3, &[(0, 0, 1.0), (0, 1, 3.0), (1, 2, 1.0), (2, 0, 2.0), (2, 2, 2.0)]).unwrap();
        let v = [1.0, -2.0, 0.5];
        let t = op.apply_transpose(&v, 1);
        for j in 0..3 {
            let dense: f64 = (0..3).map(|i| op.get(i, j) * v[i]).sum();
            assert!((t[j] - dense).abs() < 1e-15);
        }
    }
}
