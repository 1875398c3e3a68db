use serde::{Deserialize, Serialize};

use super::tables::{FIRST_NM, SAMPLE_COUNT, STEP_NM};
use crate::error::{invalid, Result};

/// Band edges (nm) of the 8-band grid.
pub const EDGES_8: [f64; 9] = [380.0, 420.0, 460.0, 500.0, 540.0, 580.0, 620.0, 660.0, 700.0];
/// Band edges (nm) of the 3-band grid. Every edge is also an 8-band edge so
/// the two band layouts nest.
pub const EDGES_3: [f64; 4] = [380.0, 500.0, 580.0, 700.0];

/// A supported wavelength sampling of the visible range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub enum WavelengthGrid {
    /// 33 point samples every 10 nm over 380–700 nm.
    Full,
    /// 8 contiguous 40 nm bands.
    Bands8,
    /// 3 bands (blue, green, red) used with the direct RGB pipeline.
    Bands3,
}

impl WavelengthGrid {
    pub fn with_count(count: usize) -> Result<Self> {
        match count {
            33 => Ok(Self::Full),
            8 => Ok(Self::Bands8),
            3 => Ok(Self::Bands3),
            other => Err(invalid(format!(
                "unsupported wavelength count {other} (expected 3, 8 or 33)"
            ))),
        }
    }

    pub fn len(self) -> usize {
        match self {
            Self::Full => SAMPLE_COUNT,
            Self::Bands8 => 8,
            Self::Bands3 => 3,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    /// Band edges, or `None` for the point-sampled grid.
    pub fn edges(self) -> Option<&'static [f64]> {
        match self {
            Self::Full => None,
            Self::Bands8 => Some(&EDGES_8),
            Self::Bands3 => Some(&EDGES_3),
        }
    }

    /// Wavelength of each sample (band midpoints for banded grids).
    pub fn centers(self) -> Vec<f64> {
        match self.edges() {
            None => (0..SAMPLE_COUNT)
                .map(|i| FIRST_NM + STEP_NM * i as f64)
                .collect(),
            Some(edges) => edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        }
    }

    /// Resample per-wavelength values defined on `self` onto `target` by band
    /// averaging. The 33-point data is treated as the piecewise-linear
    /// interpolant of the samples, so the average over a band is the
    /// trapezoid integral divided by its width.
    pub fn downsample(self, values: &[f64], target: WavelengthGrid) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(invalid(format!(
                "expected {} values for the source grid, got {}",
                self.len(),
                values.len()
            )));
        }
        if self == target {
            return Ok(values.to_vec());
        }
        let target_edges = match target.edges() {
            Some(e) => e,
            None => return Err(invalid("cannot upsample onto the 33-sample grid")),
        };
        match self.edges() {
            None => Ok(target_edges
                .windows(2)
                .map(|band| trapezoid_mean(values, band[0], band[1]))
                .collect()),
            Some(_) if target.len() > self.len() => {
                Err(invalid("target grid is finer than the source grid"))
            }
            Some(src_edges) => {
                let mut out = Vec::with_capacity(target.len());
                for band in target_edges.windows(2) {
                    let (lo, hi) = (band[0], band[1]);
                    let mut acc = 0.0;
                    let mut covered = 0.0;
                    for (k, src) in src_edges.windows(2).enumerate() {
                        if src[0] >= lo && src[1] <= hi {
                            acc += values[k] * (src[1] - src[0]);
                            covered += src[1] - src[0];
                        } else if src[0] < hi && src[1] > lo {
                            return Err(invalid("band layouts do not nest"));
                        }
                    }
                    out.push(acc / covered);
                }
                Ok(out)
            }
        }
    }
}

fn sample_index(nm: f64) -> usize {
    ((nm - FIRST_NM) / STEP_NM).round() as usize
}

fn trapezoid_mean(values: &[f64], lo: f64, hi: f64) -> f64 {
    let (i0, i1) = (sample_index(lo), sample_index(hi));
    let mut acc = 0.5 * (values[i0] + values[i1]);
    for v in &values[i0 + 1..i1] {
        acc += v;
    }
    acc / (i1 - i0) as f64
}

impl TryFrom<usize> for WavelengthGrid {
    type Error = crate::Error;
    fn try_from(value: usize) -> Result<Self> {
        Self::with_count(value)
    }
}

impl From<WavelengthGrid> for usize {
    fn from(g: WavelengthGrid) -> usize {
        g.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centers_are_increasing_and_in_range() {
        for g in [WavelengthGrid::Full, WavelengthGrid::Bands8, WavelengthGrid::Bands3] {
            let c = g.centers();
            assert_eq!(c.len(), g.len());
            assert!(c.windows(2).all(|w| w[0] < w[1]));
            assert!(c.iter().all(|&x| (380.0..=700.0).contains(&x)));
        }
        assert_eq!(WavelengthGrid::Bands8.centers()[0], 400.0);
        assert_eq!(WavelengthGrid::Bands3.centers(), vec![440.0, 540.0, 640.0]);
    }

    #[test]
    fn unsupported_count_is_rejected() {
        assert!(WavelengthGrid::with_count(5).is_err());
        assert!(WavelengthGrid::with_count(0).is_err());
    }

    #[test]
    fn constant_is_preserved() {
        let v = vec![2.0; 33];
        let d = WavelengthGrid::Full.downsample(&v, WavelengthGrid::Bands8).unwrap();
        assert!(d.iter().all(|&x| (x - 2.0).abs() < 1e-15));
    }

    #[test]
    fn ramp_band_means() {
        // Trapezoid mean of indices 4k..4k+4 is 4k+2.
        let v: Vec<f64> = (0..33).map(|i| i as f64).collect();
        let d = WavelengthGrid::Full.downsample(&v, WavelengthGrid::Bands8).unwrap();
        let expected = [2.0, 6.0, 10.0, 14.0, 18.0, 22.0, 26.0, 30.0];
        for (x, e) in d.iter().zip(expected) {
            assert!((x - e).abs() < 1e-12, "{x} vs {e}");
        }
        // 3 bands: [0,12], [12,20], [20,32] -> 6, 16, 26.
        let d3 = WavelengthGrid::Full.downsample(&v, WavelengthGrid::Bands3).unwrap();
        for (x, e) in d3.iter().zip([6.0, 16.0, 26.0]) {
            assert!((x - e).abs() < 1e-12, "{x} vs {e}");
        }
    }

    #[test]
    fn upsampling_is_rejected() {
        let v = vec![1.0; 3];
        assert!(WavelengthGrid::Bands3.downsample(&v, WavelengthGrid::Bands8).is_err());
        assert!(WavelengthGrid::Bands3.downsample(&v, WavelengthGrid::Full).is_err());
    }
}
