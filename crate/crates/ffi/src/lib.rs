// SPDX-License-Identifier: MIT OR Apache-2.0

//! C ABI over `cusum-lab`.
//!
//! Every function returns a `CusumLabStatus`; results go through out
//! pointers. On failure, `cusum_lab_last_error()` returns a message for the
//! calling thread. Matrix indices are 0-based. Handles are created by
//! `*_new` and released by the matching `*_free`.

use cusum_lab::cusum::{cusum_profile, estimate, CusumParams};
use cusum_lab::error::LabError;
use cusum_lab::gaussian::{abs_moment, CovarianceSpec, NaGaussian};
use cusum_lab::model::{change_index, mean_vector, ChangePointConfig};
use cusum_lab::series::{classify_rate, RateParams, Regime};
use cusum_lab::special::gamma_fn;
use cusum_lab::stream::{derive_stream, RandomStream};
use cusum_lab::trunc::{truncate, TruncationLevel};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CusumLabStatus {
    Ok = 0,
    InvalidInput = 1,
    InsufficientData = 2,
    DegenerateConfig = 3,
    NotPositiveDefinite = 4,
    Domain = 5,
    BoundUndefined = 6,
    DegenerateProbe = 7,
    Config = 8,
    Io = 9,
    NullPointer = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CusumLabRegime {
    BelowInverseOrder = 0,
    AtInverseOrder = 1,
    BetweenInverseOrderAndHalf = 2,
    AtHalf = 3,
    AboveHalf = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CusumLabVerdict {
    pub converges: bool,
    pub regime: CusumLabRegime,
    pub threshold_theta: f64,
}

/// Zero-mean Gaussian vector with the lab's dependent covariance.
pub struct CusumLabSampler {
    inner: NaGaussian,
}

/// Deterministic random stream.
pub struct CusumLabStream {
    inner: RandomStream,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &LabError) -> CusumLabStatus {
    match err {
        LabError::InvalidInput(_) => CusumLabStatus::InvalidInput,
        LabError::InsufficientData(_) => CusumLabStatus::InsufficientData,
        LabError::DegenerateConfig(_) => CusumLabStatus::DegenerateConfig,
        LabError::NotPositiveDefinite { .. } => CusumLabStatus::NotPositiveDefinite,
        LabError::Domain(_) => CusumLabStatus::Domain,
        LabError::BoundUndefined(_) => CusumLabStatus::BoundUndefined,
        LabError::DegenerateProbe(_) => CusumLabStatus::DegenerateProbe,
        LabError::Config(_) => CusumLabStatus::Config,
        LabError::Io(_) => CusumLabStatus::Io,
    }
}

enum Failure {
    Lab(LabError),
    Status(CusumLabStatus, String),
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        Failure::Lab(e)
    }
}

fn null(what: &str) -> Failure {
    Failure::Status(CusumLabStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> CusumLabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => CusumLabStatus::Ok,
        Ok(Err(Failure::Lab(e))) => {
            set_last_error(&e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Status(s, msg))) => {
            set_last_error(&msg);
            s
        }
        Err(_) => {
            set_last_error("internal panic");
            CusumLabStatus::Panic
        }
    }
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn input<'a>(data: *const f64, len: usize) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("input buffer"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn output<'a>(data: *mut f64, len: usize, needed: usize) -> Result<&'a mut [f64], Failure> {
    if len < needed {
        return Err(Failure::Status(
            CusumLabStatus::BufferTooSmall,
            format!("output buffer holds {len} values; {needed} needed"),
        ));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if data.is_null() {
        return Err(null("output buffer"));
    }
    Ok(std::slice::from_raw_parts_mut(data, needed))
}

/// Message for the last failure on this thread. Valid until the next call
/// into the library from the same thread.
#[no_mangle]
pub extern "C" fn cusum_lab_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// `clamp(x, −level, level)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_truncate(x: f64, level: f64, out: *mut f64) -> CusumLabStatus {
    guard(|| write(out, truncate(x, TruncationLevel::new(level)?)?, "out"))
}

/// `E|N(0, variance)|^r`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_abs_moment(
    r: f64,
    variance: f64,
    out: *mut f64,
) -> CusumLabStatus {
    guard(|| write(out, abs_moment(r, variance)?, "out"))
}

/// Γ(z) for z in (0, 50].
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_gamma(z: f64, out: *mut f64) -> CusumLabStatus {
    guard(|| write(out, gamma_fn(z)?, "out"))
}

/// `floor(n·tau_star)`; fails unless it lies in `1..n`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_change_index(
    n: usize,
    tau_star: f64,
    out: *mut usize,
) -> CusumLabStatus {
    guard(|| write(out, change_index(n, tau_star)?, "out"))
}

/// Mean of the n observations: `mu` before the change, `mu + delta` after.
///
/// # Safety
/// `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_mean_vector(
    mu: f64,
    delta: f64,
    tau_star: f64,
    n: usize,
    out: *mut f64,
    out_len: usize,
) -> CusumLabStatus {
    guard(|| {
        let means = mean_vector(&ChangePointConfig::new(mu, delta, tau_star)?, n)?;
        output(out, out_len, n)?.copy_from_slice(&means);
        Ok(())
    })
}

/// CUSUM statistic `U_k` for `k = 1..n−1`, written to `out[k−1]`.
///
/// # Safety
/// `y` must point to `n` doubles and `out` to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_cusum_profile(
    y: *const f64,
    n: usize,
    gamma: f64,
    out: *mut f64,
    out_len: usize,
) -> CusumLabStatus {
    guard(|| {
        let profile = cusum_profile(input(y, n)?, CusumParams::new(gamma)?)?;
        output(out, out_len, profile.len())?.copy_from_slice(profile.values());
        Ok(())
    })
}

/// Change-point estimate `k̂` (1-based) and `τ̂ = k̂/n`.
///
/// # Safety
/// `y` must point to `n` doubles; `k_hat` and `tau_hat` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_estimate(
    y: *const f64,
    n: usize,
    gamma: f64,
    k_hat: *mut usize,
    tau_hat: *mut f64,
) -> CusumLabStatus {
    guard(|| {
        if k_hat.is_null() || tau_hat.is_null() {
            return Err(null("k_hat/tau_hat"));
        }
        let profile = cusum_profile(input(y, n)?, CusumParams::new(gamma)?)?;
        let est = estimate(&profile, n)?;
        write(k_hat, est.k_hat, "k_hat")?;
        write(tau_hat, est.tau_hat, "tau_hat")
    })
}

/// Rate-condition verdict for moment order `r`, weight `gamma` and shift
/// exponent `theta`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_classify_rate(
    r: f64,
    gamma: f64,
    theta: f64,
    out: *mut CusumLabVerdict,
) -> CusumLabStatus {
    guard(|| {
        let v = classify_rate(RateParams::new(r, gamma, theta)?)?;
        let regime = match v.binding_regime {
            Regime::BelowInverseOrder => CusumLabRegime::BelowInverseOrder,
            Regime::AtInverseOrder => CusumLabRegime::AtInverseOrder,
            Regime::BetweenInverseOrderAndHalf => CusumLabRegime::BetweenInverseOrderAndHalf,
            Regime::AtHalf => CusumLabRegime::AtHalf,
            Regime::AboveHalf => CusumLabRegime::AboveHalf,
        };
        write(
            out,
            CusumLabVerdict {
                converges: v.converges,
                regime,
                threshold_theta: v.threshold_theta,
            },
            "out",
        )
    })
}

/// Builds and factors the n×n covariance with parameter `sigma > 1`.
///
/// # Safety
/// `out` must be valid for writes. Release the handle with
/// `cusum_lab_sampler_free`.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_sampler_new(
    n: usize,
    sigma: f64,
    out: *mut *mut CusumLabSampler,
) -> CusumLabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = NaGaussian::new(CovarianceSpec::new(n, sigma)?)?;
        out.write(Box::into_raw(Box::new(CusumLabSampler { inner })));
        Ok(())
    })
}

/// # Safety
/// `sampler` must come from `cusum_lab_sampler_new` and not be used again.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_sampler_free(sampler: *mut CusumLabSampler) {
    if !sampler.is_null() {
        drop(Box::from_raw(sampler));
    }
}

/// Dimension of the sampler, or 0 for a null handle.
///
/// # Safety
/// `sampler` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_sampler_len(sampler: *const CusumLabSampler) -> usize {
    sampler.as_ref().map_or(0, |s| s.inner.n())
}

/// Covariance entry `(i, j)`, 0-based.
///
/// # Safety
/// `sampler` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_sampler_covariance(
    sampler: *const CusumLabSampler,
    i: usize,
    j: usize,
    out: *mut f64,
) -> CusumLabStatus {
    guard(|| {
        let s = sampler.as_ref().ok_or_else(|| null("sampler"))?;
        let n = s.inner.n();
        if i >= n || j >= n {
            return Err(
                LabError::invalid_input(format!("index ({i}, {j}) outside {n}x{n}")).into(),
            );
        }
        write(out, s.inner.spec().entry(i + 1, j + 1), "out")
    })
}

/// Draws one row from `sampler` using `stream`.
///
/// # Safety
/// Both handles must be live; `out` must point to `out_len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_sampler_draw(
    sampler: *const CusumLabSampler,
    stream: *mut CusumLabStream,
    out: *mut f64,
    out_len: usize,
) -> CusumLabStatus {
    guard(|| {
        let s = sampler.as_ref().ok_or_else(|| null("sampler"))?;
        let rng = stream.as_mut().ok_or_else(|| null("stream"))?;
        let buf = output(out, out_len, s.inner.n())?;
        s.inner.fill_row(&mut rng.inner, buf);
        Ok(())
    })
}

/// Stream keyed by `(base_seed, gamma_index, theta_index, n, rep)`; the
/// same key always yields the same sequence.
///
/// # Safety
/// `out` must be valid for writes. Release with `cusum_lab_stream_free`.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_stream_new(
    base_seed: u64,
    gamma_index: u32,
    theta_index: u32,
    n: u64,
    rep: u64,
    out: *mut *mut CusumLabStream,
) -> CusumLabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let inner = derive_stream(base_seed, gamma_index, theta_index, n, rep);
        out.write(Box::into_raw(Box::new(CusumLabStream { inner })));
        Ok(())
    })
}

/// # Safety
/// `stream` must come from `cusum_lab_stream_new` and not be used again.
/// Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_stream_free(stream: *mut CusumLabStream) {
    if !stream.is_null() {
        drop(Box::from_raw(stream));
    }
}

/// Next standard normal draw.
///
/// # Safety
/// `stream` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn cusum_lab_stream_next_normal(
    stream: *mut CusumLabStream,
    out: *mut f64,
) -> CusumLabStatus {
    guard(|| {
        let rng = stream.as_mut().ok_or_else(|| null("stream"))?;
        write(out, rng.inner.next_normal(), "out")
    })
}
