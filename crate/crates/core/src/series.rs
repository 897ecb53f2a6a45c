// SPDX-License-Identifier: MIT OR Apache-2.0

//! Rate-condition calculus for the CUSUM consistency series, with numeric
//! partial-sum diagnostics and a Monte Carlo probe of the row-wise
//! exponential maximal inequality.
//!
//! With a shift `Δ_n = n^θ`, every summand of the moment conditions is a sum
//! of at most two terms of the form `n^e · (ln n)^c`. The series converges
//! iff each term has `e < −1`, or `e = −1` and `c < −1`.

use crate::error::{LabError, Result};
use crate::stream::{RandomStream, StreamKey};
use crate::trunc::{
    clamp, empirical_clamped_means, truncated_variance_sum, SampleRow, TruncationLevel,
};
use rayon::prelude::*;
use serde::Serialize;

/// Tolerance used to decide `γ = 1/r` and `γ = 1/2`.
pub const REGIME_EQ_TOL: f64 = 1e-12;

/// Moment order `r`, CUSUM weight `γ` and shift exponent `θ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateParams {
    pub r: f64,
    pub gamma: f64,
    pub theta: f64,
}

impl RateParams {
    pub fn new(r: f64, gamma: f64, theta: f64) -> Result<Self> {
        if !(r.is_finite() && r > 1.0) {
            return Err(LabError::invalid_input(format!(
                "moment order r must be > 1; got {r}"
            )));
        }
        if !(0.0..1.0).contains(&gamma) {
            return Err(LabError::invalid_input(format!(
                "gamma must lie in [0, 1); got {gamma}"
            )));
        }
        if !theta.is_finite() {
            return Err(LabError::invalid_input(format!(
                "theta must be finite; got {theta}"
            )));
        }
        Ok(Self { r, gamma, theta })
    }
}

/// Position of `γ` relative to `1/r` and `1/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Regime {
    #[serde(rename = "g_lt_1_over_r")]
    BelowInverseOrder,
    #[serde(rename = "g_eq_1_over_r")]
    AtInverseOrder,
    #[serde(rename = "r_inv_lt_g_lt_half")]
    BetweenInverseOrderAndHalf,
    #[serde(rename = "g_eq_half")]
    AtHalf,
    #[serde(rename = "g_gt_half")]
    AboveHalf,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::BelowInverseOrder => "g_lt_1_over_r",
            Self::AtInverseOrder => "g_eq_1_over_r",
            Self::BetweenInverseOrderAndHalf => "r_inv_lt_g_lt_half",
            Self::AtHalf => "g_eq_half",
            Self::AboveHalf => "g_gt_half",
        }
    }

    /// For `r ≤ 2` (so `1/r ≥ 1/2`) only the first two regimes and
    /// `AboveHalf` (meaning `γ > 1/r`) occur.
    pub fn of(r: f64, gamma: f64) -> Self {
        let inv = 1.0 / r;
        let at = |v: f64| (gamma - v).abs() <= REGIME_EQ_TOL;
        if at(inv) {
            Self::AtInverseOrder
        } else if gamma < inv {
            Self::BelowInverseOrder
        } else if r <= 2.0 {
            Self::AboveHalf
        } else if at(0.5) {
            Self::AtHalf
        } else if gamma < 0.5 {
            Self::BetweenInverseOrderAndHalf
        } else {
            Self::AboveHalf
        }
    }
}

/// Which family of moment conditions applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentCondition {
    /// `1 < r ≤ 2`: single-term summands.
    Low,
    /// `r > 2`: two-term summands.
    High,
}

impl MomentCondition {
    pub fn for_order(r: f64) -> Self {
        if r <= 2.0 {
            Self::Low
        } else {
            Self::High
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeriesVerdict {
    pub converges: bool,
    #[serde(rename = "regime")]
    pub binding_regime: Regime,
    pub threshold_theta: f64,
}

/// Strict-threshold convergence verdict for `Δ_n = n^θ`.
///
/// For `r > 2` the thresholds are
///
/// ```text
/// θ > (2−r)/(2r−2)         0 ≤ γ ≤ 1/r
/// θ > 1/(2r−2rγ) − 1/2     1/r < γ < 1/2
/// θ > (2−r)/(2r)           γ = 1/2
/// θ > γ − 1 + 1/r          1/2 < γ < 1
/// ```
///
/// and for `1 < r ≤ 2` the single-term conditions give `θ > (2−r)/r` for
/// `γ ≤ 1/r` and `θ > γ − 1 + 1/r` above. A θ exactly on the threshold is
/// divergent.
pub fn classify_rate(p: RateParams) -> Result<SeriesVerdict> {
    let p = RateParams::new(p.r, p.gamma, p.theta)?;
    let (r, g) = (p.r, p.gamma);
    let regime = Regime::of(r, g);
    let threshold_theta = match (MomentCondition::for_order(r), regime) {
        (MomentCondition::Low, Regime::BelowInverseOrder | Regime::AtInverseOrder) => (2.0 - r) / r,
        (MomentCondition::Low, _) => g - 1.0 + 1.0 / r,
        (MomentCondition::High, Regime::BelowInverseOrder | Regime::AtInverseOrder) => {
            (2.0 - r) / (2.0 * r - 2.0)
        }
        (MomentCondition::High, Regime::BetweenInverseOrderAndHalf) => {
            1.0 / (2.0 * r - 2.0 * r * g) - 0.5
        }
        (MomentCondition::High, Regime::AtHalf) => (2.0 - r) / (2.0 * r),
        (MomentCondition::High, Regime::AboveHalf) => g - 1.0 + 1.0 / r,
    };
    // θ within rounding of the threshold is the (divergent) boundary
    Ok(SeriesVerdict {
        converges: p.theta - threshold_theta > REGIME_EQ_TOL,
        binding_regime: regime,
        threshold_theta,
    })
}

/// `n^exponent · (ln n)^log_power`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowerLogTerm {
    pub exponent: f64,
    pub log_power: f64,
}

impl PowerLogTerm {
    const fn power(exponent: f64) -> Self {
        Self {
            exponent,
            log_power: 0.0,
        }
    }

    #[inline]
    pub fn value(&self, n: f64) -> f64 {
        let ln = n.ln();
        let base = (self.exponent * ln).exp();
        if self.log_power == 0.0 {
            base
        } else {
            base * ln.powf(self.log_power)
        }
    }

    /// Exact convergence of `Σ_n n^e (ln n)^c`.
    pub fn series_converges(&self) -> bool {
        self.exponent < -1.0 || (self.exponent == -1.0 && self.log_power < -1.0)
    }
}

/// The (at most two) terms of the summand for `Δ_n = n^θ`.
pub fn series_components(p: RateParams, condition: MomentCondition) -> Vec<PowerLogTerm> {
    let RateParams { r, gamma: g, theta } = p;
    // |Δ_n|^a contributes a·θ to the exponent
    match (condition, Regime::of(r, g)) {
        (MomentCondition::Low, Regime::BelowInverseOrder) => {
            vec![PowerLogTerm::power(-r * theta + 1.0 - r)]
        }
        (MomentCondition::Low, Regime::AtInverseOrder) => vec![PowerLogTerm {
            exponent: -r * theta + 1.0 - r,
            log_power: 1.0,
        }],
        (MomentCondition::Low, _) => vec![PowerLogTerm::power(-r * theta + r * (g - 1.0))],
        (MomentCondition::High, Regime::BelowInverseOrder) => vec![
            PowerLogTerm::power(-r * theta + 1.0 - r),
            PowerLogTerm::power(2.0 * (1.0 - r) * theta + 1.0 - r),
        ],
        (MomentCondition::High, Regime::AtInverseOrder) => vec![
            PowerLogTerm {
                exponent: -r * theta + 1.0 - r,
                log_power: 1.0,
            },
            PowerLogTerm::power(2.0 * (1.0 - r) * theta + 1.0 - r),
        ],
        (MomentCondition::High, Regime::BetweenInverseOrderAndHalf) => vec![
            PowerLogTerm::power(-r * theta + r * (g - 1.0)),
            PowerLogTerm::power(2.0 * r * (g - 1.0) * theta + r * (g - 1.0)),
        ],
        (MomentCondition::High, Regime::AtHalf) => vec![
            PowerLogTerm::power(-r * theta + r / 2.0 - 1.0 + 1.0 - r),
            PowerLogTerm {
                exponent: 2.0 * (1.0 - r) * theta + 1.0 - r,
                log_power: r - 1.0,
            },
        ],
        (MomentCondition::High, Regime::AboveHalf) => {
            vec![PowerLogTerm::power(-r * theta + r * (g - 1.0))]
        }
    }
}

/// Summand of the moment condition at index `n ≥ 2`.
pub fn series_term(p: RateParams, condition: MomentCondition, n: u64) -> f64 {
    let nf = n as f64;
    series_components(p, condition)
        .iter()
        .map(|t| t.value(nf))
        .sum()
}

/// Partial sum `Σ_{n=2}^{N}` and tail ratio `S(N)/S(⌊N/2⌋)` of one series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailRatio {
    pub sum: f64,
    pub half_sum: f64,
    pub tail_ratio: f64,
}

/// Evaluates `Σ_{n=2}^{N} term(n)` together with the sum up to `⌊N/2⌋`.
/// Non-finite sums give an infinite ratio.
pub fn tail_ratio_of(term: impl Fn(u64) -> f64, big_n: u64) -> TailRatio {
    let half = big_n / 2;
    let mut sum = 0.0_f64;
    let mut half_sum = 0.0_f64;
    for n in 2..=big_n {
        sum += term(n);
        if n == half {
            half_sum = sum;
        }
    }
    let tail_ratio = if sum.is_finite() && half_sum.is_finite() && half_sum > 0.0 {
        sum / half_sum
    } else {
        f64::INFINITY
    };
    TailRatio {
        sum,
        half_sum,
        tail_ratio,
    }
}

/// Numeric cross-check of [`classify_rate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartialSumDiagnostic {
    pub sum: f64,
    pub tail_ratio: f64,
    /// One entry per summand term.
    pub components: Vec<TailRatio>,
    /// Tail ratio of the harmonic series `Σ 1/n` at the same `N`.
    pub reference_ratio: f64,
}

impl PartialSumDiagnostic {
    /// A series of non-negative terms converges iff each of its terms does;
    /// a term is judged convergent when its tail ratio stays below that of
    /// the harmonic series, the slowest divergent power.
    pub fn looks_convergent(&self) -> bool {
        self.components
            .iter()
            .all(|c| c.tail_ratio.is_finite() && c.tail_ratio < self.reference_ratio)
    }
}

pub const MIN_DIAGNOSTIC_N: u64 = 100;

pub fn partial_sum_diagnostic(p: RateParams, big_n: u64) -> Result<PartialSumDiagnostic> {
    let p = RateParams::new(p.r, p.gamma, p.theta)?;
    if big_n < MIN_DIAGNOSTIC_N {
        return Err(LabError::invalid_input(format!(
            "partial-sum diagnostic needs N >= {MIN_DIAGNOSTIC_N}; got {big_n}"
        )));
    }
    let condition = MomentCondition::for_order(p.r);
    let components: Vec<TailRatio> = series_components(p, condition)
        .into_iter()
        .map(|t| tail_ratio_of(|n| t.value(n as f64), big_n))
        .collect();
    let sum: f64 = components.iter().map(|c| c.sum).sum();
    let half_sum: f64 = components.iter().map(|c| c.half_sum).sum();
    let tail_ratio = if sum.is_finite() && half_sum.is_finite() && half_sum > 0.0 {
        sum / half_sum
    } else {
        f64::INFINITY
    };
    let reference_ratio = tail_ratio_of(|n| 1.0 / n as f64, big_n).tail_ratio;
    Ok(PartialSumDiagnostic {
        sum,
        tail_ratio,
        components,
        reference_ratio,
    })
}

/// Exact `Σ_{j=1}^{n} j^(−s)`.
pub fn power_sum_bound(n: u64, s: f64) -> f64 {
    (1..=n).map(|j| (j as f64).powf(-s)).sum()
}

/// Envelope `C(s)·n^(1−s)`, `C(s)·ln n` or `C(s)` with
/// `C(s) = 1/(1−s) + 1`, `2`, `s/(s−1)` respectively. The logarithmic case
/// only dominates the exact sum from `n = 3` on (`ln 1 = 0`).
pub fn power_sum_envelope(n: u64, s: f64) -> f64 {
    let nf = n as f64;
    if s < 1.0 {
        (1.0 / (1.0 - s) + 1.0) * nf.powf(1.0 - s)
    } else if s == 1.0 {
        2.0 * nf.ln()
    } else {
        s / (s - 1.0)
    }
}

/// Constants of the row-wise `m`-NA exponential inequality, obtained from the
/// general template with `λ = x`, `η = 12ma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InequalityParams {
    pub m: u32,
    pub x: f64,
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    pub c1: f64,
    pub c2: f64,
}

impl InequalityParams {
    pub fn new(m: u32, x: f64, a: f64) -> Result<Self> {
        if m == 0 {
            return Err(LabError::invalid_input("m must be >= 1"));
        }
        if !(x.is_finite() && x > 0.0 && a.is_finite() && a > 0.0) {
            return Err(LabError::invalid_input(format!(
                "x and a must be positive and finite; got x={x}, a={a}"
            )));
        }
        let mf = m as f64;
        Ok(Self {
            m,
            x,
            a,
            alpha: 2.0 * mf,
            beta: 8.0 * mf,
            c1: 1.0 / (12.0 * mf),
            c2: 1.0 / (8.0 * mf * mf),
        })
    }

    pub fn lambda(&self) -> f64 {
        self.x
    }

    pub fn eta(&self) -> f64 {
        12.0 * self.m as f64 * self.a
    }

    /// `β·[s/(C₂λη)]^(λ/η)`.
    pub fn exponential_term(&self, variance_sum: f64) -> f64 {
        let (lambda, eta) = (self.lambda(), self.eta());
        self.beta * (variance_sum / (self.c2 * lambda * eta)).powf(lambda / eta)
    }

    /// `α·P_tail + β·[s/(C₂λη)]^(λ/η)`, where `P_tail` is the probability that
    /// some centered truncated coordinate exceeds `C₁η = a`.
    pub fn rhs(&self, tail_probability: f64, variance_sum: f64) -> f64 {
        self.alpha * tail_probability + self.exponential_term(variance_sum)
    }
}

/// Source of rows for the probe.
pub trait RowSampler: Sync {
    fn row_len(&self) -> usize;
    fn fill_row(&self, rng: &mut RandomStream, out: &mut [f64]);
}

impl RowSampler for crate::gaussian::NaGaussian {
    fn row_len(&self) -> usize {
        self.n()
    }

    fn fill_row(&self, rng: &mut RandomStream, out: &mut [f64]) {
        crate::gaussian::NaGaussian::fill_row(self, rng, out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub n: usize,
    pub m: u32,
    pub x: f64,
    pub a: f64,
    pub level: f64,
    pub reps: u64,
    /// `P̂{max_i |Σ_{j≤i} [g_ℓ(X_j) − E g_ℓ(X_j)]| ≥ x}`.
    pub lhs: f64,
    pub lhs_stderr: f64,
    /// `P̂{max_j |g_ℓ(X_j) − E g_ℓ(X_j)| > a}`.
    pub tail_probability: f64,
    /// `2m · tail_probability`.
    pub rhs_tail_term: f64,
    pub rhs_tail_stderr: f64,
    /// `8m·[2m s_n(ℓ)/(3xa)]^(x/(12ma))`.
    pub rhs_exponential_term: f64,
    pub rhs: f64,
    /// Pilot estimate of `s_n(ℓ)`.
    pub variance_sum: f64,
    pub truncated_means: Vec<f64>,
    pub combined_stderr: f64,
    /// `lhs ≤ rhs + 3·combined_stderr`.
    pub holds: bool,
}

pub const MIN_PROBE_REPS: u64 = 10_000;
const PROBE_BATCH: u64 = 10_000;
const PROBE_STREAM_TAG: u32 = 0x5052_4f42;

fn probe_stream(seed: u64, phase: u32, n: usize, batch: u64) -> RandomStream {
    RandomStream::from_key(StreamKey {
        base_seed: seed,
        gamma_index: PROBE_STREAM_TAG,
        theta_index: phase,
        n: n as u64,
        rep_index: batch,
    })
}

fn batches(reps: u64) -> Vec<(u64, u64)> {
    (0..reps.div_ceil(PROBE_BATCH))
        .map(|b| (b, PROBE_BATCH.min(reps - b * PROBE_BATCH)))
        .collect()
}

/// Monte Carlo probe of the exponential maximal inequality.
///
/// Truncated means and `s_n(ℓ)` come from an independent pilot sample of
/// the same size; the probabilities come from a second sample. Each phase is
/// drawn in fixed batches with their own streams, so the report depends only
/// on `seed`.
pub fn probe_exponential_inequality(
    params: &InequalityParams,
    sampler: &dyn RowSampler,
    level: TruncationLevel,
    reps: u64,
    seed: u64,
) -> Result<ProbeReport> {
    if reps < MIN_PROBE_REPS {
        return Err(LabError::invalid_input(format!(
            "probe needs at least {MIN_PROBE_REPS} replications; got {reps}"
        )));
    }
    let n = sampler.row_len();
    let l = level.get();

    let pilot: Vec<SampleRow> = batches(reps)
        .into_par_iter()
        .map(|(b, count)| {
            let mut rng = probe_stream(seed, 0, n, b);
            (0..count)
                .map(|_| {
                    let mut row = vec![0.0; n];
                    sampler.fill_row(&mut rng, &mut row);
                    SampleRow::new(row).expect("sampler rows are finite")
                })
                .collect::<Vec<_>>()
        })
        .flatten()
        .collect();
    let means = empirical_clamped_means(&pilot, level)?;
    let variance_sum = truncated_variance_sum(&pilot, level)?;
    drop(pilot);
    if variance_sum == 0.0 {
        return Err(LabError::DegenerateProbe(
            "estimated truncated variance sum is zero".into(),
        ));
    }

    let (max_sum_hits, tail_hits) = batches(reps)
        .into_par_iter()
        .map(|(b, count)| {
            let mut rng = probe_stream(seed, 1, n, b);
            let mut row = vec![0.0; n];
            let (mut sum_hits, mut tail_hits) = (0u64, 0u64);
            for _ in 0..count {
                sampler.fill_row(&mut rng, &mut row);
                let mut acc = 0.0_f64;
                let mut max_partial = 0.0_f64;
                let mut max_single = 0.0_f64;
                for (x, m) in row.iter().zip(&means) {
                    let c = clamp(*x, l) - m;
                    acc += c;
                    max_partial = max_partial.max(acc.abs());
                    max_single = max_single.max(c.abs());
                }
                sum_hits += u64::from(max_partial >= params.x);
                tail_hits += u64::from(max_single > params.a);
            }
            (sum_hits, tail_hits)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    let repsf = reps as f64;
    let lhs = max_sum_hits as f64 / repsf;
    let tail_probability = tail_hits as f64 / repsf;
    let binomial_se = |p: f64| (p * (1.0 - p) / repsf).sqrt();
    let lhs_stderr = binomial_se(lhs);
    let rhs_tail_term = params.alpha * tail_probability;
    let rhs_tail_stderr = params.alpha * binomial_se(tail_probability);
    let rhs_exponential_term = params.exponential_term(variance_sum);
    let rhs = rhs_tail_term + rhs_exponential_term;
    let combined_stderr = lhs_stderr + rhs_tail_stderr;
    Ok(ProbeReport {
        n,
        m: params.m,
        x: params.x,
        a: params.a,
        level: l,
        reps,
        lhs,
        lhs_stderr,
        tail_probability,
        rhs_tail_term,
        rhs_tail_stderr,
        rhs_exponential_term,
        rhs,
        variance_sum,
        truncated_means: means,
        combined_stderr,
        holds: lhs <= rhs + 3.0 * combined_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{CovarianceSpec, NaGaussian};

    fn rp(r: f64, g: f64, t: f64) -> RateParams {
        RateParams::new(r, g, t).unwrap()
    }

    #[test]
    fn classify_examples() {
        let v = classify_rate(rp(3.0, 0.0, -0.2)).unwrap();
        assert!(v.converges);
        assert!((v.threshold_theta + 0.25).abs() < 1e-15);
        assert_eq!(v.binding_regime, Regime::BelowInverseOrder);

        let v = classify_rate(rp(4.0, 0.7, -0.01)).unwrap();
        assert!(v.converges);
        assert!((v.threshold_theta + 0.05).abs() < 1e-15);
        assert_eq!(v.binding_regime, Regime::AboveHalf);

        let v = classify_rate(rp(3.0, 0.5, -1.0 / 6.0)).unwrap();
        assert_eq!(v.binding_regime, Regime::AtHalf);
        assert_eq!(v.threshold_theta, -1.0 / 6.0);
        assert!(!v.converges);
    }

    #[test]
    fn classify_low_order() {
        // r = 1.5: γ < 2/3 needs θ > 1/3
        let v = classify_rate(rp(1.5, 0.2, 0.4)).unwrap();
        assert!(v.converges);
        assert!((v.threshold_theta - 1.0 / 3.0).abs() < 1e-15);
        let v = classify_rate(rp(1.5, 2.0 / 3.0, 1.0 / 3.0)).unwrap();
        assert_eq!(v.binding_regime, Regime::AtInverseOrder);
        assert!(!v.converges);
        let v = classify_rate(rp(1.5, 0.8, 0.5)).unwrap();
        assert_eq!(v.binding_regime, Regime::AboveHalf);
        assert!((v.threshold_theta - (0.8 - 1.0 + 2.0 / 3.0)).abs() < 1e-15);
        assert!(v.converges);
    }

    #[test]
    fn classify_rejects_bad_params() {
        assert!(classify_rate(RateParams {
            r: 3.0,
            gamma: 1.0,
            theta: 0.0
        })
        .is_err());
        assert!(RateParams::new(1.0, 0.5, 0.0).is_err());
        assert!(RateParams::new(3.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn regime_boundaries_are_continuous() {
        // the middle-regime formula meets the γ = 1/r and γ = 1/2 values
        for &r in &[2.5, 3.0, 4.0, 7.0] {
            let mid = |g: f64| 1.0 / (2.0 * r - 2.0 * r * g) - 0.5;
            assert!((mid(1.0 / r) - (2.0 - r) / (2.0 * r - 2.0)).abs() < 1e-12);
            assert!((mid(0.5) - (2.0 - r) / (2.0 * r)).abs() < 1e-12);
        }
    }

    #[test]
    fn components_bind_at_threshold() {
        // at the threshold the slowest term has exponent exactly -1
        for &(r, g) in &[(3.0, 0.0), (3.0, 0.4), (4.0, 0.5), (4.0, 0.9), (5.0, 0.2)] {
            let t = classify_rate(rp(r, g, 0.0)).unwrap().threshold_theta;
            let comps = series_components(rp(r, g, t), MomentCondition::High);
            let max_e = comps.iter().map(|c| c.exponent).fold(f64::MIN, f64::max);
            assert!((max_e + 1.0).abs() < 1e-12, "r={r} g={g}: {comps:?}");
        }
    }

    #[test]
    fn series_term_examples() {
        assert!((series_term(rp(3.0, 0.0, 0.0), MomentCondition::High, 10) - 0.02).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for k in 0..20 {
            let t = series_term(
                rp(3.0, 0.2, -0.5 + 0.1 * k as f64),
                MomentCondition::High,
                7,
            );
            assert!(t < prev);
            prev = t;
        }
        let log_term = PowerLogTerm {
            exponent: 0.0,
            log_power: 1.0,
        };
        assert!((log_term.value(std::f64::consts::E) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagnostic_examples() {
        let conv = partial_sum_diagnostic(rp(3.0, 0.0, 0.0), 1_000_000).unwrap();
        assert!(conv.tail_ratio >= 1.0 && conv.tail_ratio <= 1.02);
        assert!(conv.looks_convergent());

        // θ = γ − 1 + 1/r exactly: the only term is n^(-1)
        let edge = rp(4.0, 0.75, 0.0);
        let t = classify_rate(edge).unwrap().threshold_theta;
        let div = partial_sum_diagnostic(rp(4.0, 0.75, t), 1_000_000).unwrap();
        assert!(div.tail_ratio - 1.0 >= 0.05, "{div:?}");
        assert!(!div.looks_convergent());

        let basel = tail_ratio_of(|n| (n as f64).powi(-2), 1_000_000);
        let expected = std::f64::consts::PI.powi(2) / 6.0 - 1.0;
        assert!((basel.sum - expected).abs() < 1e-5);
    }

    #[test]
    fn diagnostic_overflow_is_divergent() {
        let d = partial_sum_diagnostic(rp(3.0, 0.0, -300.0), 1000).unwrap();
        assert!(!d.looks_convergent());
        assert!(d.tail_ratio.is_infinite());
    }

    #[test]
    fn diagnostic_requires_large_n() {
        assert!(partial_sum_diagnostic(rp(3.0, 0.0, 0.0), 99).is_err());
    }

    #[test]
    fn power_sum_examples() {
        assert_eq!(power_sum_bound(1, 0.3), 1.0);
        assert_eq!(power_sum_bound(1, 2.0), 1.0);
        let s = power_sum_bound(100, 2.0);
        assert!(s <= 2.0 && s >= std::f64::consts::PI.powi(2) / 6.0 - 0.01);
        assert!(power_sum_bound(10_000, 0.5) <= 3.0 * 100.0);
    }

    #[test]
    fn power_sum_respects_envelope_on_grid() {
        for &s in &[0.3, 0.5, 0.9, 1.0, 1.1, 2.0, 3.0] {
            let mut acc = 0.0;
            for n in 1..=1_000_000u64 {
                acc += (n as f64).powf(-s);
                if s == 1.0 && n < 3 {
                    continue;
                }
                assert!(acc <= power_sum_envelope(n, s), "s={s} n={n}");
            }
        }
    }

    #[test]
    fn inequality_constants() {
        let p = InequalityParams::new(1, 3.0, 1.0).unwrap();
        assert_eq!((p.alpha, p.beta), (2.0, 8.0));
        assert_eq!(p.c1 * p.eta(), p.a);
        let direct = 8.0 * (4.0f64 / 9.0).powf(0.25);
        assert!((p.exponential_term(2.0) - direct).abs() < 1e-12);

        // m = 2 instantiation matches 8m[2ms/(3xa)]^(x/(12ma))
        let p = InequalityParams::new(2, 5.0, 0.5).unwrap();
        let s: f64 = 3.7;
        let direct = 16.0 * (4.0 * s / (3.0 * 5.0 * 0.5)).powf(5.0 / (24.0 * 0.5));
        assert!((p.exponential_term(s) - direct).abs() < 1e-12 * direct);
        assert!((p.c1 * p.eta() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn inequality_params_validation() {
        assert!(InequalityParams::new(0, 1.0, 1.0).is_err());
        assert!(InequalityParams::new(1, 0.0, 1.0).is_err());
        assert!(InequalityParams::new(1, 1.0, f64::NAN).is_err());
    }

    fn sampler(n: usize) -> NaGaussian {
        NaGaussian::new(CovarianceSpec::new(n, 2.0).unwrap()).unwrap()
    }

    #[test]
    fn probe_far_threshold_is_zero() {
        let p = InequalityParams::new(1, 1e6, 1.0).unwrap();
        let r = probe_exponential_inequality(
            &p,
            &sampler(5),
            TruncationLevel::new(10.0).unwrap(),
            10_000,
            3,
        )
        .unwrap();
        assert_eq!(r.lhs, 0.0);
        assert!(r.lhs <= r.rhs);
        assert!(r.holds);
    }

    #[test]
    fn probe_is_deterministic() {
        let p = InequalityParams::new(1, 2.0, 0.5).unwrap();
        let s = sampler(8);
        let lvl = TruncationLevel::new(1.0).unwrap();
        let a = probe_exponential_inequality(&p, &s, lvl, 20_000, 17).unwrap();
        let b = probe_exponential_inequality(&p, &s, lvl, 20_000, 17).unwrap();
        assert_eq!(a, b);
        assert!(a.lhs > 0.0 && a.lhs < 1.0);
    }

    #[test]
    fn probe_rejects_few_reps() {
        let p = InequalityParams::new(1, 2.0, 0.5).unwrap();
        let err = probe_exponential_inequality(
            &p,
            &sampler(3),
            TruncationLevel::new(1.0).unwrap(),
            100,
            1,
        );
        assert!(err.is_err());
    }

    struct ConstantRows;

    impl RowSampler for ConstantRows {
        fn row_len(&self) -> usize {
            4
        }
        fn fill_row(&self, _rng: &mut RandomStream, out: &mut [f64]) {
            out.fill(0.25);
        }
    }

    #[test]
    fn probe_degenerate_variance() {
        let p = InequalityParams::new(1, 2.0, 0.5).unwrap();
        let err = probe_exponential_inequality(
            &p,
            &ConstantRows,
            TruncationLevel::new(1.0).unwrap(),
            10_000,
            1,
        );
        assert!(matches!(err, Err(LabError::DegenerateProbe(_))));
    }
}
