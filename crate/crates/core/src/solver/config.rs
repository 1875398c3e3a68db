use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Energy weights, convergence tests and inner-solver limits.
///
/// Every field has a default, so a config file only needs the values it
/// overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub w_sum: f64,
    pub w_smooth: f64,
    pub w_a: f64,
    pub w_s: f64,
    pub w_ratio: f64,
    pub w_sparse: f64,
    pub w_spatial: f64,

    /// Outer loop stops when the largest relative palette change drops below this.
    pub rel_tol: f64,
    pub max_anls_iters: usize,
    /// Coarse-to-fine halving continues while the short edge is at least this.
    pub min_short_edge: usize,

    pub subset_max_iters: usize,
    pub full_max_iters: usize,
    /// Projected-gradient infinity-norm tolerance of the inner minimiser.
    pub pgtol: f64,
    /// Relative objective-decrease tolerance of the inner minimiser.
    pub ftol: f64,
    pub history: usize,

    pub bilateral: BilateralParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilateralParams {
    pub radius: usize,
    pub sigma_spatial: f64,
    pub sigma_color: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            radius: 2,
            sigma_spatial: 2.0,
            sigma_color: 0.1,
        }
    }
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            w_sum: 10.0,
            w_smooth: 0.001,
            w_a: 1.0,
            w_s: 1.0,
            w_ratio: 0.001,
            w_sparse: 0.1,
            w_spatial: 1.0,
            rel_tol: 1e-3,
            max_anls_iters: 1000,
            min_short_edge: 80,
            subset_max_iters: 200,
            full_max_iters: 500,
            pgtol: 1e-9,
            ftol: 1e-12,
            history: 10,
            bilateral: BilateralParams::default(),
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            self.w_sum,
            self.w_smooth,
            self.w_a,
            self.w_s,
            self.w_ratio,
            self.w_sparse,
            self.w_spatial,
        ];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("energy weights must be finite and non-negative"));
        }
        if !(self.rel_tol > 0.0) || !(self.pgtol >= 0.0) || !(self.ftol >= 0.0) {
            return Err(invalid("tolerances must be non-negative (rel_tol positive)"));
        }
        if self.max_anls_iters == 0 || self.subset_max_iters == 0 || self.full_max_iters == 0 {
            return Err(invalid("iteration caps must be positive"));
        }
        if self.history == 0 {
            return Err(invalid("history must be positive"));
        }
        if self.min_short_edge == 0 {
            return Err(invalid("min_short_edge must be positive"));
        }
        let b = &self.bilateral;
        if !(b.sigma_spatial > 0.0) || !(b.sigma_color > 0.0) {
            return Err(invalid("bilateral sigmas must be positive"));
        }
        Ok(())
    }
}
