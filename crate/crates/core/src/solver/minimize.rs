//! Box-constrained limited-memory quasi-Newton minimisation.
//!
//! Search directions come from the L-BFGS two-loop recursion restricted to
//! the variables that are not pinned at a bound; steps are projected back
//! into the box and accepted by a backtracking Armijo test along the
//! projected path.

use std::collections::VecDeque;

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimizeOptions {
    pub max_iters: usize,
    pub history: usize,
    /// Stop when `‖P(x − g) − x‖∞` is at most this.
    pub pgtol: f64,
    /// Stop when the relative decrease of one step is at most this.
    pub ftol: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iters: 500,
            history: 10,
            pgtol: 1e-9,
            ftol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Gradient,
    Stalled,
    MaxIterations,
    /// No step along the search direction decreased the objective.
    LineSearch,
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
}

const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 50;

/// Minimise `f` over `lower ≤ x ≤ upper` starting from `x0` (clamped into the
/// box). `f(x, g)` returns the objective and writes the gradient into `g`.
///
/// The returned point is feasible and its value never exceeds `f(x0)`. A
/// non-finite trial value just shrinks the step; [`Error::SolverFailure`] is
/// returned only when `f(x0)` is not finite or no finite trial value can be
/// found at all.
pub fn bounded_minimize<F>(
    mut f: F,
    x0: &[f64],
    lower: &[f64],
    upper: &[f64],
    opts: &MinimizeOptions,
) -> Result<Minimum>
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    let n = x0.len();
    if lower.len() != n || upper.len() != n {
        return Err(invalid("bounds do not match the number of variables"));
    }
    if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
        return Err(invalid("lower bound exceeds upper bound"));
    }
    let project = |x: &mut [f64]| {
        for ((v, &l), &u) in x.iter_mut().zip(lower).zip(upper) {
            *v = v.clamp(l, u);
        }
    };

    let mut x = x0.to_vec();
    project(&mut x);
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut evaluations = 1;
    if !fx.is_finite() || g.iter().any(|v| !v.is_finite()) {
        return Err(Error::SolverFailure {
            reason: "objective is not finite at the starting point".into(),
            best: x,
            value: fx,
        });
    }

    let mut s_hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(opts.history);
    let mut y_hist: VecDeque<Vec<f64>> = VecDeque::with_capacity(opts.history);
    let mut free = vec![true; n];
    let mut d = vec![0.0; n];
    let mut xt = vec![0.0; n];
    let mut gt = vec![0.0; n];

    for iter in 0..opts.max_iters {
        // Projected gradient and the free set.
        let mut pg_norm: f64 = 0.0;
        for i in 0..n {
            let at_lower = x[i] <= lower[i] && g[i] > 0.0;
            let at_upper = x[i] >= upper[i] && g[i] < 0.0;
            free[i] = !(at_lower || at_upper);
            let step = (x[i] - g[i]).clamp(lower[i], upper[i]) - x[i];
            pg_norm = pg_norm.max(step.abs());
        }
        if pg_norm <= opts.pgtol {
            return Ok(done(x, fx, iter, evaluations, StopReason::Gradient));
        }

        two_loop(&g, &free, &s_hist, &y_hist, &mut d);
        let mut slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            s_hist.clear();
            y_hist.clear();
            for i in 0..n {
                d[i] = if free[i] { -g[i] } else { 0.0 };
            }
            slope = d.iter().zip(&g).map(|(a, b)| a * b).sum();
            if !(slope < 0.0) {
                return Ok(done(x, fx, iter, evaluations, StopReason::Gradient));
            }
        }

        // Without curvature information, start with a unit-length move.
        let mut alpha = if s_hist.is_empty() {
            let dmax = d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            (1.0 / dmax).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        let mut any_finite = false;
        for _ in 0..MAX_BACKTRACKS {
            for i in 0..n {
                xt[i] = x[i] + alpha * d[i];
            }
            project(&mut xt);
            let ft = f(&xt, &mut gt);
            evaluations += 1;
            if ft.is_finite() && gt.iter().all(|v| v.is_finite()) {
                any_finite = true;
                let decrease: f64 = (0..n).map(|i| g[i] * (xt[i] - x[i])).sum();
                if ft <= fx + ARMIJO_C1 * decrease.min(0.0) && ft <= fx {
                    accepted = Some(ft);
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some(ft) = accepted else {
            if !any_finite {
                return Err(Error::SolverFailure {
                    reason: "objective is not finite along the search direction".into(),
                    best: x,
                    value: fx,
                });
            }
            return Ok(done(x, fx, iter, evaluations, StopReason::LineSearch));
        };

        let s: Vec<f64> = xt.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gt.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let yy: f64 = y.iter().map(|v| v * v).sum();
        if sy > 1e-12 * yy && sy > 0.0 {
            if s_hist.len() == opts.history {
                s_hist.pop_front();
                y_hist.pop_front();
            }
            s_hist.push_back(s);
            y_hist.push_back(y);
        }

        let prev = fx;
        std::mem::swap(&mut x, &mut xt);
        std::mem::swap(&mut g, &mut gt);
        fx = ft;
        if prev - fx <= opts.ftol * prev.abs().max(fx.abs()).max(1.0) {
            return Ok(done(x, fx, iter + 1, evaluations, StopReason::Stalled));
        }
    }
    Ok(done(x, fx, opts.max_iters, evaluations, StopReason::MaxIterations))
}

fn done(x: Vec<f64>, value: f64, iterations: usize, evaluations: usize, reason: StopReason) -> Minimum {
    Minimum {
        x,
        value,
        iterations,
        evaluations,
        reason,
    }
}

/// `d = −H g` on the free variables, zero elsewhere.
fn two_loop(g: &[f64], free: &[bool], s_hist: &VecDeque<Vec<f64>>, y_hist: &VecDeque<Vec<f64>>, d: &mut [f64]) {
    let dotf = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(free)
            .filter(|(_, &f)| f)
            .map(|((x, y), _)| x * y)
            .sum()
    };
    for i in 0..g.len() {
        d[i] = if free[i] { g[i] } else { 0.0 };
    }
    let k = s_hist.len();
    let mut alphas = vec![0.0; k];
    let mut rhos = vec![0.0; k];
    for j in (0..k).rev() {
        let sy = dotf(&s_hist[j], &y_hist[j]);
        rhos[j] = if sy > 0.0 { 1.0 / sy } else { 0.0 };
        alphas[j] = rhos[j] * dotf(&s_hist[j], d);
        for i in 0..d.len() {
            if free[i] {
                d[i] -= alphas[j] * y_hist[j][i];
            }
        }
    }
    if k > 0 {
        let sy = dotf(&s_hist[k - 1], &y_hist[k - 1]);
        let yy = dotf(&y_hist[k - 1], &y_hist[k - 1]);
        if sy > 0.0 && yy > 0.0 {
            let gamma = sy / yy;
            d.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for j in 0..k {
        let beta = rhos[j] * dotf(&y_hist[j], d);
        for i in 0..d.len() {
            if free[i] {
                d[i] += s_hist[j][i] * (alphas[j] - beta);
            }
        }
    }
    d.iter_mut().for_each(|v| *v = -*v);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad(center: [f64; 2]) -> impl FnMut(&[f64], &mut [f64]) -> f64 {
        move |x, g| {
            // 0.5 xᵀAx − bᵀx with A = [[3, 1], [1, 2]], minimiser `center`.
            let dx = [x[0] - center[0], x[1] - center[1]];
            g[0] = 3.0 * dx[0] + dx[1];
            g[1] = dx[0] + 2.0 * dx[1];
            0.5 * (dx[0] * g[0] + dx[1] * g[1])
        }
    }

    #[test]
    fn interior_quadratic_minimum() {
        let m = bounded_minimize(quad([0.3, -0.4]), &[2.0, 2.0], &[-5.0; 2], &[5.0; 2], &Default::default()).unwrap();
        assert!((m.x[0] - 0.3).abs() < 1e-6 && (m.x[1] + 0.4).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn exterior_minimum_lands_on_bound() {
        // Unconstrained minimiser (3, 0.5) lies outside x₀ ≤ 1. On the face
        // x₀ = 1 the minimum is at x₁ = 0.5 − (1 − 3)/2 = 1.5.
        let m = bounded_minimize(quad([3.0, 0.5]), &[0.0, 0.0], &[-1.0; 2], &[1.0, 5.0], &Default::default()).unwrap();
        assert_eq!(m.x[0], 1.0);
        assert!((m.x[1] - 1.5).abs() < 1e-6, "{:?}", m.x);
    }

    #[test]
    fn rosenbrock_from_standard_start() {
        let rosen = |x: &[f64], g: &mut [f64]| {
            let (a, b) = (x[0], x[1]);
            g[0] = -2.0 * (1.0 - a) - 400.0 * a * (b - a * a);
            g[1] = 200.0 * (b - a * a);
            (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2)
        };
        let opts = MinimizeOptions {
            max_iters: 2000,
            pgtol: 1e-10,
            ftol: 0.0,
            ..Default::default()
        };
        let m = bounded_minimize(rosen, &[-1.2, 1.0], &[-2.0; 2], &[2.0; 2], &opts).unwrap();
        assert!((m.x[0] - 1.0).abs() < 1e-4 && (m.x[1] - 1.0).abs() < 1e-4, "{:?}", m);
    }

    #[test]
    fn non_finite_region_shrinks_step() {
        // Objective is +inf for x > 0.5; minimiser of the finite part is 1.
        let f = |x: &[f64], g: &mut [f64]| {
            if x[0] > 0.5 {
                return f64::INFINITY;
            }
            g[0] = 2.0 * (x[0] - 1.0);
            (x[0] - 1.0).powi(2)
        };
        // Steps that overshoot are shrunk until the iterate creeps up to the
        // wall; once every direction is non-finite the best point is reported.
        match bounded_minimize(f, &[0.0], &[-10.0], &[10.0], &Default::default()) {
            Ok(m) => assert!(m.x[0] <= 0.5 && m.value < 1.0),
            Err(Error::SolverFailure { best, value, .. }) => {
                assert!(best[0] <= 0.5 && best[0] > 0.4 && value < 1.0);
            }
            Err(e) => panic!("{e}"),
        }
    }

    #[test]
    fn non_finite_start_is_failure() {
        let f = |_: &[f64], _: &mut [f64]| f64::NAN;
        match bounded_minimize(f, &[0.0], &[-1.0], &[1.0], &Default::default()) {
            Err(Error::SolverFailure { best, .. }) => assert_eq!(best, vec![0.0]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn never_leaves_box_or_increases() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let x0 = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let mut q = quad(c);
            let mut g0 = [0.0; 2];
            let f0 = q(&x0, &mut g0);
            let m = bounded_minimize(quad(c), &x0, &[-1.0; 2], &[1.0; 2], &Default::default()).unwrap();
            assert!(m.x.iter().all(|v| (-1.0..=1.0).contains(v)));
            assert!(m.value <= f0);
        }
    }
}
