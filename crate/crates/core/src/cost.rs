//! Weighted smoothed ℓp cost `Σ wᵢ (rᵢ² + μ)^{p/2}` and its gradients.
//!
//! Powers are evaluated as `exp(e · ln(rᵢ² + μ))`; the argument of the log is
//! at least `μ > 0`, so no branch is needed for signs or zeros.

use nalgebra::DVector;

use crate::error::{ensure_len, Error, Result};

/// Exponent `p ∈ (0, 2]` and smoothing offset `μ > 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LpConfig {
    p: f64,
    mu: f64,
}

impl LpConfig {
    pub fn new(p: f64, mu: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "exponent p must lie in (0, 2], got {p}"
            )));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "smoothing offset mu must be positive and finite, got {mu}"
            )));
        }
        Ok(LpConfig { p, mu })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

/// Per-coordinate cost weights.
///
/// The tracker only ever produces the two values `1` and `ω`, but any
/// nonnegative finite weights are accepted here.
#[derive(Clone, Debug, PartialEq)]
pub struct PixelWeights {
    values: DVector<f64>,
}

impl PixelWeights {
    pub fn ones(len: usize) -> Self {
        PixelWeights {
            values: DVector::from_element(len, 1.0),
        }
    }

    pub fn from_values(values: DVector<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "weight {i} is {} (must be finite and nonnegative)",
                values[i]
            )));
        }
        Ok(PixelWeights { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }
}

/// `Σ wᵢ (rᵢ² + μ)^{p/2}`.
pub fn cost(r: &DVector<f64>, cfg: LpConfig, w: &PixelWeights) -> Result<f64> {
    ensure_len(w.len(), r.len(), "weights")?;
    let half_p = 0.5 * cfg.p;
    Ok(r.iter()
        .zip(w.as_slice())
        .map(|(&ri, &wi)| wi * (half_p * (ri * ri + cfg.mu).ln()).exp())
        .sum())
}

/// `∂cost/∂rᵢ = p wᵢ rᵢ (rᵢ² + μ)^{p/2 − 1}`.
pub fn residual_gradient(
    r: &DVector<f64>,
    cfg: LpConfig,
    w: &PixelWeights,
) -> Result<DVector<f64>> {
    Ok(cost_and_gradient(r, cfg, w)?.1)
}

/// The ambient basis-gradient factor `η = −∂cost/∂r`; the Euclidean gradient
/// of `U ↦ cost(x − Uy)` is `η·yᵀ`.
pub fn eta(r: &DVector<f64>, cfg: LpConfig, w: &PixelWeights) -> Result<DVector<f64>> {
    Ok(-residual_gradient(r, cfg, w)?)
}

/// Cost and residual gradient in a single pass.
pub fn cost_and_gradient(
    r: &DVector<f64>,
    cfg: LpConfig,
    w: &PixelWeights,
) -> Result<(f64, DVector<f64>)> {
    ensure_len(w.len(), r.len(), "weights")?;
    let expo = 0.5 * cfg.p - 1.0;
    let mut total = 0.0;
    let mut grad = DVector::zeros(r.len());
    for ((g, &ri), &wi) in grad.iter_mut().zip(r.iter()).zip(w.as_slice()) {
        let s = ri * ri + cfg.mu;
        let pow = (expo * s.ln()).exp();
        total += wi * s * pow;
        *g = cfg.p * wi * ri * pow;
    }
    Ok((total, grad))
}

/// Smoothing offset `μ = δ²(1 − p)`, at which the summand `(r² + μ)^{p/2}`
/// has its inflection point exactly at `|r| = δ`.
pub fn mu_heuristic(delta: f64, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the mu heuristic needs 0 < p < 1, got p = {p}"
        )));
    }
    if !(delta > 0.0) || !delta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "threshold delta must be positive, got {delta}"
        )));
    }
    Ok(delta * delta * (1.0 - p))
}
