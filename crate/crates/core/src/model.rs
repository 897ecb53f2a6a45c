// SPDX-License-Identifier: MIT OR Apache-2.0

//! Mean-shift change-point model: `Y_k = μ_k + Δ·1{k > k*} + X_k`, with
//! `k* = ⌊n·τ*⌋`.

use crate::error::{ensure_finite, LabError, Result};
use crate::trunc::SampleRow;
use std::fmt;
use std::sync::Arc;

/// Baseline mean `μ_{n,k}`.
#[derive(Clone)]
pub enum BaselineMean {
    Constant(f64),
    /// Index-dependent mean, called with `(n, k)` and 1-based `k`.
    PerIndex(Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>),
}

impl fmt::Debug for BaselineMean {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(mu) => f.debug_tuple("Constant").field(mu).finish(),
            Self::PerIndex(_) => f.write_str("PerIndex(..)"),
        }
    }
}

impl BaselineMean {
    #[inline]
    pub fn at(&self, n: usize, k: usize) -> f64 {
        match self {
            Self::Constant(mu) => *mu,
            Self::PerIndex(f) => f(n, k),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChangePointConfig {
    mu: BaselineMean,
    delta: f64,
    tau_star: f64,
}

impl ChangePointConfig {
    /// `delta = 0` is accepted here (diagnostic runs); estimation-side
    /// operations that need a shift reject it themselves.
    pub fn new(mu: f64, delta: f64, tau_star: f64) -> Result<Self> {
        ensure_finite(mu, "mu")?;
        Self::with_baseline(BaselineMean::Constant(mu), delta, tau_star)
    }

    pub fn with_baseline(mu: BaselineMean, delta: f64, tau_star: f64) -> Result<Self> {
        ensure_finite(delta, "delta")?;
        if !(tau_star > 0.0 && tau_star < 1.0) {
            return Err(LabError::invalid_input(format!(
                "tau_star must lie in (0, 1); got {tau_star}"
            )));
        }
        Ok(Self {
            mu,
            delta,
            tau_star,
        })
    }

    /// Shift `Δ_n = n^θ`.
    pub fn power_shift(mu: f64, theta: f64, n: usize, tau_star: f64) -> Result<Self> {
        ensure_finite(theta, "theta")?;
        Self::new(mu, (n as f64).powf(theta), tau_star)
    }

    pub fn mu(&self) -> &BaselineMean {
        &self.mu
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn tau_star(&self) -> f64 {
        self.tau_star
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self {
            delta,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationRow {
    pub values: Vec<f64>,
    pub k_star: usize,
}

/// `⌊n·τ*⌋`; errors unless both segments are non-empty.
pub fn change_index(n: usize, tau_star: f64) -> Result<usize> {
    if n < 2 {
        return Err(LabError::invalid_input(format!("n must be >= 2; got {n}")));
    }
    if !(tau_star > 0.0 && tau_star < 1.0) {
        return Err(LabError::invalid_input(format!(
            "tau_star must lie in (0, 1); got {tau_star}"
        )));
    }
    let k = (n as f64 * tau_star).floor() as usize;
    if k == 0 || k >= n {
        return Err(LabError::DegenerateConfig(format!(
            "change index floor({n}·{tau_star}) = {k} leaves an empty segment"
        )));
    }
    Ok(k)
}

/// `E Y_k = μ_k + Δ·1{k > k*}` for `k = 1..=n`.
pub fn mean_vector(cfg: &ChangePointConfig, n: usize) -> Result<Vec<f64>> {
    let k_star = change_index(n, cfg.tau_star)?;
    Ok((1..=n)
        .map(|k| {
            let base = cfg.mu.at(n, k);
            if k > k_star {
                base + cfg.delta
            } else {
                base
            }
        })
        .collect())
}

/// `Y = mean_vector + noise`, element-wise.
pub fn generate_row(cfg: &ChangePointConfig, noise: &SampleRow) -> Result<ObservationRow> {
    let n = noise.len();
    let k_star = change_index(n, cfg.tau_star)?;
    let mut values = mean_vector(cfg, n)?;
    for (y, x) in values.iter_mut().zip(noise.values()) {
        *y += x;
    }
    Ok(ObservationRow { values, k_star })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn change_index_examples() {
        assert_eq!(change_index(4, 0.5).unwrap(), 2);
        assert_eq!(change_index(10, 0.35).unwrap(), 3);
        assert_eq!(change_index(3, 0.9).unwrap(), 2);
    }

    #[test]
    fn change_index_degenerate() {
        assert!(matches!(
            change_index(3, 0.2),
            Err(LabError::DegenerateConfig(_))
        ));
        assert!(change_index(1, 0.5).is_err());
        assert!(change_index(10, 0.0).is_err());
        assert!(change_index(10, 1.0).is_err());
    }

    #[test]
    fn mean_vector_examples() {
        let cfg = ChangePointConfig::new(1.0, 2.0, 0.5).unwrap();
        assert_eq!(mean_vector(&cfg, 4).unwrap(), vec![1.0, 1.0, 3.0, 3.0]);

        let flat = ChangePointConfig::new(1.5, 0.0, 0.5).unwrap();
        assert_eq!(mean_vector(&flat, 5).unwrap(), vec![1.5; 5]);

        let neg = ChangePointConfig::new(0.0, -1.0, 0.4).unwrap();
        assert_eq!(mean_vector(&neg, 3).unwrap(), vec![0.0, -1.0, -1.0]);
    }

    #[test]
    fn per_index_baseline() {
        let mu = BaselineMean::PerIndex(Arc::new(|n, k| k as f64 / n as f64));
        let cfg = ChangePointConfig::with_baseline(mu, 1.0, 0.5).unwrap();
        assert_eq!(mean_vector(&cfg, 4).unwrap(), vec![0.25, 0.5, 1.75, 2.0]);
    }

    #[test]
    fn power_shift() {
        let cfg = ChangePointConfig::power_shift(1.0, 0.5, 100, 0.5).unwrap();
        assert!((cfg.delta() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn generate_row_examples() {
        let cfg = ChangePointConfig::new(1.0, 2.0, 0.5).unwrap();
        let zero = SampleRow::new(vec![0.0; 4]).unwrap();
        assert_eq!(
            generate_row(&cfg, &zero).unwrap().values,
            mean_vector(&cfg, 4).unwrap()
        );

        let noise = SampleRow::new(vec![0.1, -0.1, 0.0, 0.2]).unwrap();
        let row = generate_row(&cfg, &noise).unwrap();
        assert_eq!(row.k_star, 2);
        let expected = [1.1, 0.9, 3.0, 3.2];
        for (a, b) in row.values.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        assert!(ChangePointConfig::new(1.0, f64::NAN, 0.5).is_err());
        assert!(ChangePointConfig::new(1.0, 1.0, 1.0).is_err());
        assert!(ChangePointConfig::new(f64::INFINITY, 1.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn subtracting_mean_recovers_noise(
            // dyadic values keep the addition and subtraction exact
            noise in proptest::collection::vec(-1024i32..1024, 2..40),
            mu in -64i32..64,
            delta in -64i32..64,
            tau in 0.05f64..0.95,
        ) {
            let n = noise.len();
            prop_assume!(change_index(n, tau).is_ok());
            let noise: Vec<f64> = noise.into_iter().map(|v| v as f64 / 8.0).collect();
            let cfg = ChangePointConfig::new(mu as f64 / 4.0, delta as f64 / 4.0, tau).unwrap();
            let row = generate_row(&cfg, &SampleRow::new(noise.clone()).unwrap()).unwrap();
            let means = mean_vector(&cfg, n).unwrap();
            for ((y, m), x) in row.values.iter().zip(&means).zip(&noise) {
                prop_assert_eq!((y - m).to_bits(), x.to_bits());
            }
        }

        #[test]
        fn mean_monotone_iff_nonnegative_shift(delta in -5.0f64..5.0, n in 2usize..50, tau in 0.05f64..0.95) {
            prop_assume!(change_index(n, tau).is_ok());
            let cfg = ChangePointConfig::new(1.0, delta, tau).unwrap();
            let m = mean_vector(&cfg, n).unwrap();
            let nondecreasing = m.windows(2).all(|w| w[0] <= w[1]);
            prop_assert_eq!(nondecreasing, delta >= 0.0);
        }
    }
}
