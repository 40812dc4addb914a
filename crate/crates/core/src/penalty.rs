//! Clipped-L1 sparse penalty and parameter-vector norms.
//!
//! The clipped L1 norm `Σ_j min(|θ_j|/τ, 1)` interpolates between `‖θ‖_1/τ`
//! (small weights) and `‖θ‖_0` (weights beyond the clipping threshold).

use crate::error::{Error, Result};

/// Magnitudes below this are treated as exact zeros when counting nonzeros.
pub const ZERO_SNAP: f64 = 1e-12;

/// Regularization pair `(λ, τ)` of the sparse penalty `λ‖θ‖_{clip,τ}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyConfig {
    pub lambda: f64,
    pub tau: f64,
}

impl PenaltyConfig {
    pub fn new(lambda: f64, tau: f64) -> Result<Self> {
        let cfg = PenaltyConfig { lambda, tau };
        cfg.validate()?;
        Ok(cfg)
    }

    /// `λ = 0`: the non-penalized objective. `τ` is irrelevant and set to 1.
    pub fn unpenalized() -> Self {
        PenaltyConfig { lambda: 0.0, tau: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::Argument(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::Argument(format!("lambda must be nonnegative, got {}", self.lambda)));
        }
        Ok(())
    }
}

fn check_tau(tau: f64) -> Result<()> {
    if tau > 0.0 && tau.is_finite() {
        Ok(())
    } else {
        Err(Error::Argument(format!("tau must be positive, got {tau}")))
    }
}

pub fn clipped_norm(theta: &[f64], tau: f64) -> Result<f64> {
    check_tau(tau)?;
    Ok(theta.iter().map(|t| (t.abs() / tau).min(1.0)).sum())
}

/// Subgradient of the clipped norm.
///
/// Coordinate `j` is `sign(θ_j)/τ` when `0 < |θ_j| ≤ τ` and zero otherwise.
/// Zero weights get a zero subgradient so they stay at zero.
pub fn clipped_norm_subgrad(theta: &[f64], tau: f64) -> Result<Vec<f64>> {
    check_tau(tau)?;
    let mut out = vec![0.0; theta.len()];
    add_scaled_subgrad(theta, tau, 1.0, &mut out);
    Ok(out)
}

/// `out += scale · ∂‖θ‖_{clip,τ}` without allocating. Callers validate `tau`.
pub(crate) fn add_scaled_subgrad(theta: &[f64], tau: f64, scale: f64, out: &mut [f64]) {
    let step = scale / tau;
    for (o, &t) in out.iter_mut().zip(theta) {
        let a = t.abs();
        if a > 0.0 && a <= tau {
            *o += step.copysign(t);
        }
    }
}

pub fn penalty_value(theta: &[f64], cfg: &PenaltyConfig) -> Result<f64> {
    cfg.validate()?;
    if cfg.lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(cfg.lambda * clipped_norm(theta, cfg.tau)?)
}

pub fn l0_norm(theta: &[f64]) -> usize {
    theta.iter().filter(|t| t.abs() >= ZERO_SNAP).count()
}

pub fn l1_norm(theta: &[f64]) -> f64 {
    theta.iter().map(|t| t.abs()).sum()
}

pub fn linf_norm(theta: &[f64]) -> f64 {
    theta.iter().fold(0.0, |m, t| m.max(t.abs()))
}
