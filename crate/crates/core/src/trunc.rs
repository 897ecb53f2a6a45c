// SPDX-License-Identifier: MIT OR Apache-2.0

//! Truncation operators and centered partial-sum statistics.
//!
//! `truncate` clamps a value to `[-level, level]`. `split_tail` separates a
//! value into the part that survives inside the band and the saturated tail,
//! so that `bounded_part + tail_part == truncate(x, t)`.

use crate::error::{ensure_finite, LabError, Result};

/// Positive truncation level (also used as the tail-split threshold).
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TruncationLevel(f64);

impl TruncationLevel {
    pub fn new(level: f64) -> Result<Self> {
        if level.is_finite() && level > 0.0 {
            Ok(Self(level))
        } else {
            Err(LabError::invalid_input(format!(
                "truncation level must be positive and finite; got {level}"
            )))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }
}

/// Bounded core and saturated tail of a single value at threshold `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSplit {
    pub bounded_part: f64,
    pub tail_part: f64,
    pub threshold: f64,
}

/// One row of the triangular array: a non-empty vector of finite reals.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRow {
    values: Vec<f64>,
}

impl SampleRow {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(LabError::invalid_input("sample row must have length >= 1"));
        }
        if let Some((j, x)) = values.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(LabError::invalid_input(format!(
                "sample row entry {j} is not finite: {x}"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}

impl AsRef<[f64]> for SampleRow {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// `(x ∧ ℓ) ∨ (−ℓ)`.
pub fn truncate(x: f64, level: TruncationLevel) -> Result<f64> {
    ensure_finite(x, "value")?;
    Ok(clamp(x, level.get()))
}

#[inline]
pub(crate) fn clamp(x: f64, level: f64) -> f64 {
    x.min(level).max(-level)
}

/// Values exactly at `±t` belong to the bounded part.
pub fn split_tail(x: f64, t: TruncationLevel) -> Result<TailSplit> {
    ensure_finite(x, "value")?;
    let t = t.get();
    let (bounded_part, tail_part) = if x > t {
        (0.0, t)
    } else if x < -t {
        (0.0, -t)
    } else {
        (x, 0.0)
    };
    Ok(TailSplit {
        bounded_part,
        tail_part,
        threshold: t,
    })
}

/// `max_i |Σ_{j≤i} (x_j − m_j)|` where `m_j` are caller-supplied truncated means.
pub fn max_abs_centered_partial_sums(row: &SampleRow, truncated_means: &[f64]) -> Result<f64> {
    if truncated_means.len() != row.len() {
        return Err(LabError::invalid_input(format!(
            "truncated means have length {} but row has length {}",
            truncated_means.len(),
            row.len()
        )));
    }
    let mut acc = 0.0_f64;
    let mut best = 0.0_f64;
    for (x, m) in row.values().iter().zip(truncated_means) {
        acc += x - m;
        best = best.max(acc.abs());
    }
    Ok(best)
}

/// True iff every entry of the row lies in `[-t, t]`, i.e. the row is
/// unchanged by truncation at `t`.
pub fn all_within(row: &SampleRow, t: TruncationLevel) -> bool {
    let t = t.get();
    row.values().iter().all(|x| x.abs() <= t)
}

/// Sum over coordinates of the sample variance of `g_ℓ(X_j)` across
/// realizations (divisor `reps − 1`).
pub fn truncated_variance_sum(rows: &[SampleRow], level: TruncationLevel) -> Result<f64> {
    if rows.len() < 2 {
        return Err(LabError::InsufficientData(format!(
            "need at least 2 realizations; got {}",
            rows.len()
        )));
    }
    let width = rows[0].len();
    if let Some(bad) = rows.iter().find(|r| r.len() != width) {
        return Err(LabError::invalid_input(format!(
            "realizations must share a length; got {} and {}",
            width,
            bad.len()
        )));
    }
    let l = level.get();
    let reps = rows.len() as f64;
    let mut total = 0.0;
    for j in 0..width {
        let mean = rows.iter().map(|r| clamp(r.values()[j], l)).sum::<f64>() / reps;
        let ss: f64 = rows
            .iter()
            .map(|r| {
                let d = clamp(r.values()[j], l) - mean;
                d * d
            })
            .sum();
        total += ss / (reps - 1.0);
    }
    Ok(total)
}

/// Coordinate-wise empirical mean of `X_j · 1{|X_j| ≤ t}`.
pub fn empirical_truncated_means(rows: &[SampleRow], t: TruncationLevel) -> Result<Vec<f64>> {
    coordinate_means(rows, |x| if x.abs() <= t.get() { x } else { 0.0 })
}

/// Coordinate-wise empirical mean of `g_ℓ(X_j)`.
pub fn empirical_clamped_means(rows: &[SampleRow], level: TruncationLevel) -> Result<Vec<f64>> {
    coordinate_means(rows, |x| clamp(x, level.get()))
}

fn coordinate_means(rows: &[SampleRow], f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
    let first = rows
        .first()
        .ok_or_else(|| LabError::InsufficientData("no realizations".into()))?;
    let mut sums = vec![0.0; first.len()];
    for row in rows {
        if row.len() != sums.len() {
            return Err(LabError::invalid_input("realizations must share a length"));
        }
        for (s, &x) in sums.iter_mut().zip(row.values()) {
            *s += f(x);
        }
    }
    let n = rows.len() as f64;
    Ok(sums.into_iter().map(|s| s / n).collect())
}
