// SPDX-License-Identifier: MIT OR Apache-2.0

//! Weighted CUSUM statistic and the change-point estimator built on it.
//!
//! For `1 ≤ k < n`,
//!
//! ```text
//! U_k = a_k · Σ_{j≤k} Y_j − b_k · Σ_{j>k} Y_j
//! a_k = (n−k)^(1−γ) / (n^(1−γ) k^γ)
//! b_k = k^(1−γ) / (n^(1−γ) (n−k)^γ)
//! ```
//!
//! Since `a_k·k = b_k·(n−k)`, adding a constant to every observation leaves
//! `U_k` unchanged.

use crate::error::{LabError, Result};
use crate::model::{change_index, mean_vector, BaselineMean, ChangePointConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumParams {
    gamma: f64,
}

impl CusumParams {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&gamma) {
            return Err(LabError::invalid_input(format!(
                "gamma must lie in [0, 1); got {gamma}"
            )));
        }
        Ok(Self { gamma })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// `U_{n,k}` for `k = 1..n−1`, stored at index `k − 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct CusumProfile {
    u: Vec<f64>,
}

impl CusumProfile {
    pub fn from_values(u: Vec<f64>) -> Result<Self> {
        if u.iter().any(|x| !x.is_finite()) {
            return Err(LabError::invalid_input("profile entries must be finite"));
        }
        Ok(Self { u })
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// Series length `n` the profile was computed from.
    pub fn series_len(&self) -> usize {
        self.u.len() + 1
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// `U_k` with 1-based `k`.
    pub fn at(&self, k: usize) -> f64 {
        self.u[k - 1]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub k_hat: usize,
    pub tau_hat: f64,
}

#[derive(Debug, Clone, Copy)]
struct Weights {
    prefix: f64,
    suffix: f64,
}

/// `(a_k, b_k)`; powers as `exp(p·ln x)`.
#[inline]
fn weights(n: usize, k: usize, gamma: f64) -> Weights {
    let ln_n = (n as f64).ln();
    let ln_k = (k as f64).ln();
    let ln_rest = ((n - k) as f64).ln();
    let norm = (1.0 - gamma) * ln_n;
    Weights {
        prefix: ((1.0 - gamma) * ln_rest - norm - gamma * ln_k).exp(),
        suffix: ((1.0 - gamma) * ln_k - norm - gamma * ln_rest).exp(),
    }
}

/// O(n) prefix-sum evaluation of the CUSUM profile.
pub fn cusum_profile(y: &[f64], params: CusumParams) -> Result<CusumProfile> {
    let n = y.len();
    if n < 2 {
        return Err(LabError::invalid_input(format!(
            "CUSUM needs at least 2 observations; got {n}"
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(LabError::invalid_input("observations must be finite"));
    }
    // U is invariant under shifts of y; centering keeps the prefix sums small
    let mean = y.iter().sum::<f64>() / n as f64;
    let total: f64 = y.iter().map(|v| v - mean).sum();
    let mut prefix = 0.0;
    let mut u = Vec::with_capacity(n - 1);
    for k in 1..n {
        prefix += y[k - 1] - mean;
        let w = weights(n, k, params.gamma);
        u.push(w.prefix * prefix - w.suffix * (total - prefix));
    }
    Ok(CusumProfile { u })
}

/// `E U_{n,k}` under the model, evaluated in closed form:
/// `−b_k·Δ·(n−k*)` for `k ≤ k*` and `Δ·[a_k·(k−k*) − b_k·(n−k)]` beyond.
/// A non-constant baseline adds its own (deterministic) profile.
pub fn expected_profile(
    cfg: &ChangePointConfig,
    n: usize,
    params: CusumParams,
) -> Result<CusumProfile> {
    let k_star = change_index(n, cfg.tau_star())?;
    let delta = cfg.delta();
    let mut u: Vec<f64> = (1..n)
        .map(|k| {
            let w = weights(n, k, params.gamma);
            if k <= k_star {
                -w.suffix * delta * (n - k_star) as f64
            } else {
                delta * (w.prefix * (k - k_star) as f64 - w.suffix * (n - k) as f64)
            }
        })
        .collect();
    if let BaselineMean::PerIndex(_) = cfg.mu() {
        let baseline: Vec<f64> = (1..=n).map(|k| cfg.mu().at(n, k)).collect();
        let extra = cusum_profile(&baseline, params)?;
        for (a, b) in u.iter_mut().zip(extra.values()) {
            *a += b;
        }
    }
    Ok(CusumProfile { u })
}

/// Smallest maximiser of `|U_k|` (exact float comparison) and `τ̂ = k̂/n`.
pub fn estimate(profile: &CusumProfile, n: usize) -> Result<Estimate> {
    if profile.is_empty() {
        return Err(LabError::invalid_input("empty CUSUM profile"));
    }
    if profile.len() + 1 != n {
        return Err(LabError::invalid_input(format!(
            "profile has {} entries but n = {n} needs {}",
            profile.len(),
            n.saturating_sub(1)
        )));
    }
    let mut k_hat = 1;
    let mut best = profile.u[0].abs();
    for (i, v) in profile.u.iter().enumerate().skip(1) {
        if v.abs() > best {
            best = v.abs();
            k_hat = i + 1;
        }
    }
    Ok(Estimate {
        k_hat,
        tau_hat: k_hat as f64 / n as f64,
    })
}

/// Convenience: profile then estimate.
pub fn estimate_change(y: &[f64], params: CusumParams) -> Result<(CusumProfile, Estimate)> {
    let profile = cusum_profile(y, params)?;
    let est = estimate(&profile, y.len())?;
    Ok((profile, est))
}

/// Both sides of the pathwise deviation bound
///
/// ```text
/// |Δ|(1−γ)(τ*)^(−γ)(1−τ*)·min{τ*, 1−τ*}·|τ* − τ̂|  ≤  2 n^(γ−1) max_k |U_k − E U_k|
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSides {
    pub lhs: f64,
    pub rhs: f64,
}

impl BoundSides {
    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs
    }
}

pub fn deviation_bound_sides(
    cfg: &ChangePointConfig,
    n: usize,
    params: CusumParams,
    profile: &CusumProfile,
) -> Result<BoundSides> {
    if cfg.delta() == 0.0 {
        return Err(LabError::BoundUndefined("shift Δ must be non-zero".into()));
    }
    let expected = expected_profile(cfg, n, params)?;
    if expected.len() != profile.len() {
        return Err(LabError::invalid_input(format!(
            "profile has {} entries but n = {n} needs {}",
            profile.len(),
            expected.len()
        )));
    }
    let est = estimate(profile, n)?;
    let g = params.gamma;
    let tau = cfg.tau_star();
    let lhs = cfg.delta().abs()
        * (1.0 - g)
        * tau.powf(-g)
        * (1.0 - tau)
        * tau.min(1.0 - tau)
        * (tau - est.tau_hat).abs();
    let max_dev = profile
        .u
        .iter()
        .zip(&expected.u)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0_f64, f64::max);
    let rhs = 2.0 * (n as f64).powf(g - 1.0) * max_dev;
    Ok(BoundSides { lhs, rhs })
}

/// Noiseless profile, evaluated through the generic statistic.
pub fn noiseless_profile(
    cfg: &ChangePointConfig,
    n: usize,
    params: CusumParams,
) -> Result<CusumProfile> {
    cusum_profile(&mean_vector(cfg, n)?, params)
}
