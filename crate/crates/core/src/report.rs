// SPDX-License-Identifier: MIT OR Apache-2.0

//! CSV and JSON writers for simulation output.

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::gaussian::DenseCovariance;
use crate::harness::{CellFailure, CellSummary, GridOutcome, ReplicationRecord};
use serde::Serialize;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

pub const RECORDS_HEADER: &str =
    "gamma,theta,n,rep,tau_hat,k_hat,abs_err,bound_lhs,bound_rhs,bound_ok";
pub const BOXPLOT_HEADER: &str = "gamma,theta,n,min,q1,median,q3,max,mean,count";

/// C's `%.17g`: 17 significant digits, trailing zeros removed.
pub fn fmt_g17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{x:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..17).contains(&exp) {
        let decimals = (16 - exp) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!(
            "{}e{sign}{:02}",
            trim_zeros(mantissa.to_string()),
            exp.abs()
        )
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Rounds to 6 decimal places for display.
pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

pub fn records_csv(records: &[ReplicationRecord]) -> String {
    let mut out = String::with_capacity(records.len() * 96);
    out.push_str(RECORDS_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_g17(r.gamma),
            fmt_g17(r.theta),
            r.n,
            r.rep,
            fmt_g17(r.tau_hat),
            r.k_hat,
            fmt_g17(r.abs_err),
            fmt_g17(r.bound_lhs),
            fmt_g17(r.bound_rhs),
            r.bound_ok
        );
    }
    out
}

/// One row per (cell, n), statistics of `τ̂`.
pub fn boxplot_csv(summaries: &[CellSummary]) -> String {
    let mut out = String::from(BOXPLOT_HEADER);
    out.push('\n');
    for s in summaries {
        let b = &s.tau_hat;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_g17(s.gamma),
            fmt_g17(s.theta),
            s.n,
            fmt_g17(b.min),
            fmt_g17(b.q1),
            fmt_g17(b.median),
            fmt_g17(b.q3),
            fmt_g17(b.max),
            fmt_g17(b.mean),
            b.count
        );
    }
    out
}

pub fn sigma_csv(cov: &DenseCovariance) -> String {
    let n = cov.n();
    let mut out = String::with_capacity(n * n * 24);
    for i in 0..n {
        for (j, v) in cov.row(i).iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            out.push_str(&fmt_g17(*v));
        }
        out.push('\n');
    }
    out
}

#[derive(Debug, Serialize)]
struct SummaryCell {
    gamma: f64,
    theta: f64,
    n: usize,
    median_tau_hat: f64,
    mean_abs_err: f64,
    median_abs_err: f64,
    bound_violations: usize,
    count: usize,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    config: &'a ExperimentConfig,
    records: usize,
    bound_violations: usize,
    cells: Vec<SummaryCell>,
    failures: &'a [CellFailure],
}

pub fn summary_json(cfg: &ExperimentConfig, outcome: &GridOutcome) -> String {
    let summary = Summary {
        config: cfg,
        records: outcome.records.len(),
        bound_violations: outcome.bound_violations().count(),
        cells: outcome
            .summaries
            .iter()
            .map(|s| SummaryCell {
                gamma: s.gamma,
                theta: s.theta,
                n: s.n,
                median_tau_hat: round6(s.tau_hat.median),
                mean_abs_err: round6(s.abs_err.mean),
                median_abs_err: round6(s.abs_err.median),
                bound_violations: s.bound_violations,
                count: s.abs_err.count,
            })
            .collect(),
        failures: &outcome.failures,
    };
    serde_json::to_string_pretty(&summary).expect("summary serializes")
}

pub fn diagnostics_json(outcome: &GridOutcome) -> String {
    serde_json::to_string_pretty(&outcome.diagnostics).expect("diagnostics serialize")
}

/// Writes records.csv, boxplot.csv, bound_violations.csv, diagnostics.json
/// and summary.json into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, outcome: &GridOutcome) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("records.csv"), records_csv(&outcome.records))?;
    fs::write(dir.join("boxplot.csv"), boxplot_csv(&outcome.summaries))?;
    let violations: Vec<ReplicationRecord> = outcome.bound_violations().copied().collect();
    fs::write(dir.join("bound_violations.csv"), records_csv(&violations))?;
    fs::write(dir.join("diagnostics.json"), diagnostics_json(outcome))?;
    fs::write(dir.join("summary.json"), summary_json(cfg, outcome))?;
    Ok(())
}
