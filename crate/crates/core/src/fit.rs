//! Robust coordinate fitting: minimize `y ↦ cost(x − Uy)` with a short,
//! warm-started run of Polak–Ribière+ nonlinear conjugate gradient.

use nalgebra::DVector;

use crate::cost::{cost_and_gradient, LpConfig, PixelWeights};
use crate::error::{ensure_finite, ensure_len, Error, Result};
use crate::manifold::SubspaceBasis;

/// Armijo backtracking parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSearch {
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    pub max_backtracks: u32,
}

impl Default for LineSearch {
    fn default() -> Self {
        LineSearch {
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 20,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgOptions {
    pub max_iters: u32,
    /// Stop once `‖∇_y‖₂` falls to this value.
    pub grad_tol: f64,
    pub line_search: LineSearch,
}

impl Default for CgOptions {
    fn default() -> Self {
        CgOptions {
            max_iters: 5,
            grad_tol: 1e-8,
            line_search: LineSearch::default(),
        }
    }
}

impl CgOptions {
    pub fn validate(&self) -> Result<()> {
        let ls = &self.line_search;
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("CG max_iters must be ≥ 1".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::InvalidParameter("CG grad_tol must be ≥ 0".into()));
        }
        if !(ls.shrink > 0.0 && ls.shrink < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "line-search shrink factor must lie in (0, 1), got {}",
                ls.shrink
            )));
        }
        if !(ls.sufficient_decrease > 0.0 && ls.sufficient_decrease <= 0.5) {
            return Err(Error::InvalidParameter(format!(
                "sufficient-decrease constant must lie in (0, 0.5], got {}",
                ls.sufficient_decrease
            )));
        }
        if !(ls.initial_step > 0.0) || !ls.initial_step.is_finite() {
            return Err(Error::InvalidParameter(
                "line-search initial step must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FitResult {
    pub y: DVector<f64>,
    /// `x − U·y`.
    pub residual: DVector<f64>,
    pub cost: f64,
    pub iterations: u32,
    /// `true` when the loop stopped on `grad_tol`.
    pub converged: bool,
}

/// Fits coordinates `y` to frame `x` starting from `y0`.
///
/// Every accepted step satisfies the Armijo condition, so the returned cost
/// never exceeds the cost at `y0`. If the line search cannot find such a step
/// within its backtracking budget the current iterate is returned.
pub fn fit_coordinates(
    basis: &SubspaceBasis,
    x: &DVector<f64>,
    y0: &DVector<f64>,
    cfg: LpConfig,
    w: &PixelWeights,
    opts: &CgOptions,
) -> Result<FitResult> {
    let m = basis.ambient_dim();
    let k = basis.dim();
    ensure_len(x.len(), m, "frame")?;
    ensure_len(y0.len(), k, "warm start")?;
    ensure_len(w.len(), m, "weights")?;
    ensure_finite(x.as_slice(), "frame")?;
    ensure_finite(y0.as_slice(), "warm start")?;
    opts.validate()?;

    let u = basis.as_matrix();
    let ls = &opts.line_search;

    let mut y = y0.clone();
    let mut r = x.clone();
    r.gemv(-1.0, u, &y, 1.0);
    let (mut f, g_r) = cost_and_gradient(&r, cfg, w)?;
    // ∇_y cost(x − Uy) = −Uᵀ g_r
    let mut grad = -u.tr_mul(&g_r);
    let mut dir = -&grad;

    let mut iterations = 0;
    let mut converged = false;
    let mut since_reset = 0usize;

    while iterations < opts.max_iters {
        let grad_sq = grad.norm_squared();
        if grad_sq.sqrt() <= opts.grad_tol {
            converged = true;
            break;
        }

        let mut slope = grad.dot(&dir);
        if !(slope < 0.0) {
            dir = -&grad;
            slope = -grad_sq;
            since_reset = 0;
        }

        // Along the search line the residual moves as r − α·U·d.
        let u_dir = u * &dir;
        let mut alpha = ls.initial_step;
        let mut accepted = None;
        for _ in 0..=ls.max_backtracks {
            let trial_r = &r - &u_dir * alpha;
            let (trial_f, trial_g) = cost_and_gradient(&trial_r, cfg, w)?;
            if trial_f <= f + ls.sufficient_decrease * alpha * slope {
                accepted = Some((trial_r, trial_f, trial_g));
                break;
            }
            alpha *= ls.shrink;
        }
        let Some((next_r, next_f, next_g_r)) = accepted else {
            break;
        };

        iterations += 1;
        since_reset += 1;
        y.axpy(alpha, &dir, 1.0);
        r = next_r;
        f = next_f;

        let next_grad = -u.tr_mul(&next_g_r);
        let beta = if since_reset >= k {
            since_reset = 0;
            0.0
        } else {
            (next_grad.dot(&(&next_grad - &grad)) / grad_sq).max(0.0)
        };
        dir = &dir * beta - &next_grad;
        grad = next_grad;
    }

    if !converged && grad.norm() <= opts.grad_tol {
        converged = true;
    }

    Ok(FitResult {
        y,
        residual: r,
        cost: f,
        iterations,
        converged,
    })
}
