// SPDX-License-Identifier: MIT OR Apache-2.0

//! Negatively associated Gaussian rows.
//!
//! The covariance of a row of length `n` (1-based indices) is
//!
//! ```text
//! Σ[i,i] = i/n + i·σ^(−n−i)/(σ−1)
//! Σ[i,j] = −σ^(−n−i−j)        (i ≠ j)
//! ```
//!
//! with `σ > 1`. All off-diagonal entries are negative, so the row is
//! negatively associated. Row `i` is strictly diagonally dominant since
//! `Σ_{j≠i} σ^(−n−i−j) < σ^(−n−i)/(σ−1)`, which makes Σ positive definite.
//! Only the four corner entries of the matrix are pinned down explicitly;
//! the interior off-diagonal pattern is the natural reading of those corners.
//!
//! For large `n` the off-diagonal powers underflow to zero and the matrix is
//! numerically diagonal. That is accepted as-is.

use crate::error::{LabError, Result};
use crate::special::gamma_fn;
use crate::stream::RandomStream;
use crate::trunc::SampleRow;

/// Row length and decay base of the covariance construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceSpec {
    n: usize,
    sigma: f64,
}

impl CovarianceSpec {
    pub fn new(n: usize, sigma: f64) -> Result<Self> {
        if n == 0 {
            return Err(LabError::invalid_input(
                "covariance dimension n must be >= 1",
            ));
        }
        if !(sigma.is_finite() && sigma > 1.0) {
            return Err(LabError::invalid_input(format!(
                "sigma must be finite and > 1; got {sigma}"
            )));
        }
        Ok(Self { n, sigma })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// `σ^(−m)`; exact for powers of two, flushes to zero on underflow.
    #[inline]
    fn neg_power(&self, m: usize) -> f64 {
        match i32::try_from(m) {
            Ok(m) => self.sigma.powi(m).recip(),
            Err(_) => (-(m as f64) * self.sigma.ln()).exp(),
        }
    }

    /// Entry `(i, j)` with 1-based indices.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            self.diagonal(i)
        } else {
            -self.neg_power(self.n + i + j)
        }
    }

    #[inline]
    fn diagonal(&self, j: usize) -> f64 {
        let n = self.n as f64;
        let jf = j as f64;
        jf / n + jf * self.neg_power(self.n + j) / (self.sigma - 1.0)
    }
}

/// Dense symmetric matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseCovariance {
    n: usize,
    entries: Vec<f64>,
}

impl DenseCovariance {
    /// Wraps a row-major `n × n` matrix; entries must be finite.
    pub fn from_row_major(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(LabError::invalid_input(format!(
                "expected {n}x{n} entries; got {}",
                entries.len()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(LabError::invalid_input("covariance entries must be finite"));
        }
        Ok(Self { n, entries })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry with 0-based indices.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.entries
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0_f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Builds Σ_n for the given spec.
pub fn build_sigma(spec: &CovarianceSpec) -> DenseCovariance {
    let n = spec.n;
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = spec.entry(i + 1, j + 1);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    DenseCovariance { n, entries }
}

/// Variance of coordinate `j` (1-based); identical to `build_sigma(spec)[j,j]`.
pub fn marginal_variance(spec: &CovarianceSpec, j: usize) -> Result<f64> {
    if j == 0 || j > spec.n {
        return Err(LabError::invalid_input(format!(
            "coordinate index {j} outside 1..={}",
            spec.n
        )));
    }
    Ok(spec.diagonal(j))
}

/// Lower-triangular Cholesky factor in packed row storage.
#[derive(Debug, Clone, PartialEq)]
pub struct CholeskyFactor {
    n: usize,
    // row i holds L[i, 0..=i] at offset i(i+1)/2
    packed: Vec<f64>,
    // first structurally non-zero column of each row
    start: Vec<usize>,
}

#[inline]
fn row_offset(i: usize) -> usize {
    i * (i + 1) / 2
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().min(b.len());
    let (a, b) = (&a[..len], &b[..len]);
    let mut acc = [0.0_f64; 4];
    let chunks = len / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut tail = 0.0;
    for k in 4 * chunks..len {
        tail += a[k] * b[k];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

impl CholeskyFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Row `i` of L, entries `0..=i`.
    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.packed[row_offset(i)..row_offset(i + 1)]
    }

    /// Entry with 0-based indices; zero above the diagonal.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.packed[row_offset(i) + j]
        }
    }

    /// `‖L·Lᵀ − Σ‖_F / ‖Σ‖_F`.
    pub fn relative_reconstruction_error(&self, cov: &DenseCovariance) -> f64 {
        self.reconstruction_error(cov) / cov.frobenius_norm()
    }

    /// `‖L·Lᵀ − Σ‖_F`.
    pub fn reconstruction_error(&self, cov: &DenseCovariance) -> f64 {
        assert_eq!(self.n, cov.n(), "dimension mismatch");
        let mut err2 = 0.0;
        for i in 0..self.n {
            let ri = self.row(i);
            for j in 0..=i {
                let lo = self.start[i].max(self.start[j]).min(j);
                let d = dot(&ri[lo..=j], &self.row(j)[lo..=j]) - cov.get(i, j);
                err2 += if i == j { d * d } else { 2.0 * d * d };
            }
        }
        err2.sqrt()
    }

    /// Overwrites `z` with `L·z`. Rows are processed bottom-up, so row `i`
    /// only reads entries `0..=i` that are still untouched.
    pub fn apply_in_place(&self, z: &mut [f64]) {
        assert_eq!(z.len(), self.n);
        for i in (0..self.n).rev() {
            let lo = self.start[i];
            z[i] = dot(&self.row(i)[lo..], &z[lo..=i]);
        }
    }
}

/// Cholesky–Banachiewicz factorization over the row envelope: entries left of
/// the first non-zero of a row of Σ stay zero in L and are skipped. Fails on
/// the first non-positive pivot (0-based index) with no jitter fallback.
pub fn cholesky_factor(cov: &DenseCovariance) -> Result<CholeskyFactor> {
    let asym = cov.max_asymmetry();
    if asym > 1e-12 {
        return Err(LabError::invalid_input(format!(
            "matrix is not symmetric: max asymmetry {asym:e}"
        )));
    }
    let n = cov.n();
    let mut packed = vec![0.0; row_offset(n)];
    let start: Vec<usize> = (0..n)
        .map(|i| cov.row(i)[..i].iter().position(|&v| v != 0.0).unwrap_or(i))
        .collect();
    for i in 0..n {
        let (done, rest) = packed.split_at_mut(row_offset(i));
        let row_i = &mut rest[..=i];
        for j in start[i]..i {
            let row_j = &done[row_offset(j)..row_offset(j + 1)];
            let lo = start[i].max(start[j]).min(j);
            let s = dot(&row_i[lo..j], &row_j[lo..j]);
            row_i[j] = (cov.get(i, j) - s) / row_j[j];
        }
        let lo = start[i];
        let d = cov.get(i, i) - dot(&row_i[lo..i], &row_i[lo..i]);
        if d.is_nan() || d <= 0.0 || d.is_infinite() {
            return Err(LabError::NotPositiveDefinite { pivot: i, value: d });
        }
        row_i[i] = d.sqrt();
    }
    Ok(CholeskyFactor { n, packed, start })
}

/// Draws one row `L·z`, `z` a vector of independent standard normals.
pub fn sample_row(factor: &CholeskyFactor, rng: &mut RandomStream) -> SampleRow {
    let mut out = vec![0.0; factor.n()];
    fill_row(factor, rng, &mut out);
    SampleRow::new(out).expect("L·z of finite normals is finite")
}

/// Allocation-free variant of [`sample_row`].
pub fn fill_row(factor: &CholeskyFactor, rng: &mut RandomStream, out: &mut [f64]) {
    rng.fill_normal(out);
    factor.apply_in_place(out);
}

/// Covariance spec together with its factor, ready for sampling.
#[derive(Debug, Clone)]
pub struct NaGaussian {
    spec: CovarianceSpec,
    factor: CholeskyFactor,
}

impl NaGaussian {
    pub fn new(spec: CovarianceSpec) -> Result<Self> {
        let factor = cholesky_factor(&build_sigma(&spec))?;
        Ok(Self { spec, factor })
    }

    pub fn spec(&self) -> &CovarianceSpec {
        &self.spec
    }

    pub fn factor(&self) -> &CholeskyFactor {
        &self.factor
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn sample(&self, rng: &mut RandomStream) -> SampleRow {
        sample_row(&self.factor, rng)
    }

    pub fn fill_row(&self, rng: &mut RandomStream, out: &mut [f64]) {
        fill_row(&self.factor, rng, out)
    }
}

/// `E|X|^r` for `X ~ N(0, variance)`:
/// `2^(r/2) Γ((r+1)/2) variance^(r/2) / √π`.
pub fn abs_moment(r: f64, variance: f64) -> Result<f64> {
    if !(r.is_finite() && r > 0.0) {
        return Err(LabError::invalid_input(format!(
            "moment order must be > 0; got {r}"
        )));
    }
    if !(variance.is_finite() && variance >= 0.0) {
        return Err(LabError::invalid_input(format!(
            "variance must be finite and >= 0; got {variance}"
        )));
    }
    if r == 2.0 {
        // 2·Γ(3/2)/√π = 1
        return Ok(variance);
    }
    let coeff = 2f64.powf(r / 2.0) * gamma_fn((r + 1.0) / 2.0)? / std::f64::consts::PI.sqrt();
    Ok(coeff * variance.powf(r / 2.0))
}
