//! Jump detection and jump-diffusion calibration.
//!
//! Returns deviating from their mean by more than `ĉ = β̂·√Δ·Φ⁻¹(1 − p̂/2)` are
//! classified as jumps. The diffusion volatility β̂, jump intensity Λ̂ and jump
//! variance V are coupled through `SD² = β̂²Δ + Λ̂ΔV` and solved by fixed-point
//! iteration starting from `Λ̂₀ = V₀ = 0`.

use crate::error::{Error, Result};
use crate::special::norm_upper_quantile;
use crate::timeseries::ReturnSeries;

/// Default number of fixed-point iterations.
pub const DEFAULT_MAX_ITERS: usize = 20;

const REL_TOL: f64 = 1e-10;

/// Calibrated jump-diffusion split of a return series.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpEstimates {
    /// Annualized diffusion volatility (per √year).
    pub beta_hat: f64,
    /// Jump intensity (per year).
    pub lambda_hat: f64,
    /// Sample variance of jump sizes.
    pub v: f64,
    /// Return threshold ĉ.
    pub c_hat: f64,
    /// 0-based positions in the return series with `|r − r̄| > ĉ`.
    pub jump_indices: Vec<usize>,
    pub iterations_used: usize,
    /// False when the iteration hit `max_iters` or the β̂ radicand went negative.
    pub converged: bool,
    /// Set when `SD² − Λ̂ΔV < 0` forced β̂ to zero at some iterate.
    pub radicand_clamped: bool,
}

impl JumpEstimates {
    fn zero() -> Self {
        Self {
            beta_hat: 0.0,
            lambda_hat: 0.0,
            v: 0.0,
            c_hat: 0.0,
            jump_indices: Vec::new(),
            iterations_used: 0,
            converged: true,
            radicand_clamped: false,
        }
    }
}

/// `ĉ = β̂·√Δ·Φ⁻¹(1 − p̂/2)`.
pub fn threshold(beta_hat: f64, delta: f64, p_hat: f64) -> Result<f64> {
    if !(p_hat > 0.0 && p_hat < 1.0) {
        return Err(Error::param(format!("p_hat must lie in (0, 1), got {p_hat}")));
    }
    if !(delta > 0.0) {
        return Err(Error::param(format!("delta must be positive, got {delta}")));
    }
    if !(beta_hat >= 0.0) {
        return Err(Error::param(format!("beta_hat must be >= 0, got {beta_hat}")));
    }
    Ok(beta_hat * delta.sqrt() * norm_upper_quantile(p_hat / 2.0))
}

/// Maximum likelihood jump intensity `n / (N·Δ)`.
pub fn mle_lambda(jump_count: usize, n_steps: usize, delta: f64) -> f64 {
    jump_count as f64 / (n_steps as f64 * delta)
}

fn jump_set(ret: &ReturnSeries, c_hat: f64) -> Vec<usize> {
    let rbar = ret.rbar();
    ret.r()
        .iter()
        .enumerate()
        .filter(|(_, r)| (*r - rbar).abs() > c_hat)
        .map(|(i, _)| i)
        .collect()
}

fn jump_variance(ret: &ReturnSeries, idx: &[usize]) -> f64 {
    if idx.len() < 2 {
        return 0.0;
    }
    let rbar = ret.rbar();
    let ss = crate::timeseries::compensated_sum(idx.iter().map(|&i| {
        let d = ret.r()[i] - rbar;
        d * d
    }));
    ss / (idx.len() - 1) as f64
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= REL_TOL * a.abs().max(b.abs())
}

/// Solve for (β̂, Λ̂, V) by fixed-point iteration.
pub fn estimate_jump_params(
    ret: &ReturnSeries,
    p_hat: f64,
    max_iters: usize,
) -> Result<JumpEstimates> {
    if max_iters == 0 {
        return Err(Error::param("max_iters must be at least 1"));
    }
    // Validates p_hat even on the degenerate path.
    threshold(0.0, ret.delta(), p_hat)?;
    let sd = ret.sd();
    if sd == 0.0 || ret.is_empty() {
        return Ok(JumpEstimates::zero());
    }
    let delta = ret.delta();
    let n = ret.len();
    let sd2 = sd * sd;

    let (mut beta, mut lambda, mut v) = (f64::NAN, 0.0, 0.0);
    let mut c_hat = 0.0;
    let mut idx = Vec::new();
    let mut clamped = false;
    let mut converged = false;
    let mut iters = 0;

    for k in 1..=max_iters {
        iters = k;
        let radicand = sd2 - lambda * delta * v;
        let beta_k = if radicand < 0.0 {
            clamped = true;
            0.0
        } else {
            (radicand / delta).sqrt()
        };
        c_hat = threshold(beta_k, delta, p_hat)?;
        idx = jump_set(ret, c_hat);
        let lambda_k = mle_lambda(idx.len(), n, delta);
        let v_k = jump_variance(ret, &idx);

        let stable = close(beta, beta_k) && close(lambda, lambda_k) && close(v, v_k);
        beta = beta_k;
        lambda = lambda_k;
        v = v_k;
        if stable {
            converged = true;
            break;
        }
    }

    Ok(JumpEstimates {
        beta_hat: beta,
        lambda_hat: lambda,
        v,
        c_hat,
        jump_indices: idx,
        iterations_used: iters,
        converged: converged && !clamped,
        radicand_clamped: clamped,
    })
}

/// Replace every return with `|r − r̄| > ĉ` by `r̄`; moments are recomputed.
pub fn strip_jumps(ret: &ReturnSeries, c_hat: f64) -> ReturnSeries {
    let rbar = ret.rbar();
    let stripped = ret
        .r()
        .iter()
        .map(|&r| if (r - rbar).abs() <= c_hat { r } else { rbar })
        .collect();
    ReturnSeries::from_returns(stripped, ret.delta())
}
