// SPDX-License-Identifier: MIT OR Apache-2.0

//! Replicates the CUSUM estimator over a (γ, θ, n) grid.
//!
//! Each replication draws its noise from a stream keyed by
//! `(base_seed, γ index, θ index, n, rep)`, so results do not depend on the
//! thread count or the order in which tasks run. Duplicate γ or θ entries in
//! the config map to the index of their first occurrence and therefore
//! reproduce the same records.

use crate::config::ExperimentConfig;
use crate::cusum::{cusum_profile, deviation_bound_sides, estimate, CusumParams};
use crate::error::{LabError, Result};
use crate::gaussian::{CovarianceSpec, NaGaussian};
use crate::model::{generate_row, ChangePointConfig};
use crate::stream::derive_stream;
use crate::trunc::SampleRow;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;

/// One (γ, θ) pair of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    /// Position in the expanded cell list.
    pub id: usize,
    pub gamma: f64,
    pub theta: f64,
    /// Stream coordinates (first occurrence of the value).
    pub gamma_index: u32,
    pub theta_index: u32,
}

/// Expands `gamma_list × theta_map` in config order.
pub fn cells(cfg: &ExperimentConfig) -> Vec<Cell> {
    let mut out = Vec::new();
    for (gi, (&gamma, thetas)) in cfg.gamma_list.iter().zip(&cfg.theta_map).enumerate() {
        let g_first = cfg
            .gamma_list
            .iter()
            .position(|g| g.to_bits() == gamma.to_bits())
            .unwrap_or(gi);
        // duplicated γ entries share the θ list of the first occurrence's indices
        let canonical_thetas = &cfg.theta_map[g_first];
        for (ti, &theta) in thetas.iter().enumerate() {
            let t_first = canonical_thetas
                .iter()
                .position(|t| t.to_bits() == theta.to_bits())
                .unwrap_or(ti);
            out.push(Cell {
                id: out.len(),
                gamma,
                theta,
                gamma_index: g_first as u32,
                theta_index: t_first as u32,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicationRecord {
    #[serde(skip)]
    pub cell: usize,
    pub gamma: f64,
    pub theta: f64,
    pub n: usize,
    pub rep: u64,
    pub tau_hat: f64,
    pub k_hat: usize,
    pub abs_err: f64,
    pub bound_lhs: f64,
    pub bound_rhs: f64,
    pub bound_ok: bool,
}

impl ReplicationRecord {
    fn sort_key_cmp(&self, other: &Self) -> Ordering {
        self.gamma
            .total_cmp(&other.gamma)
            .then(self.theta.total_cmp(&other.theta))
            .then(self.n.cmp(&other.n))
            .then(self.rep.cmp(&other.rep))
            .then(self.cell.cmp(&other.cell))
    }
}

/// Test hooks for a replication.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ReplicationOptions {
    /// Replace the Gaussian noise by zeros.
    pub zero_noise: bool,
    /// Use `−n^θ` as the shift.
    pub negate_delta: bool,
}

/// Noise row used by replication `rep` of `cell` at size `n`.
pub fn replication_noise(
    cfg: &ExperimentConfig,
    gaussian: &NaGaussian,
    cell: &Cell,
    rep: u64,
) -> SampleRow {
    let n = gaussian.n();
    let mut rng = derive_stream(
        cfg.base_seed,
        cell.gamma_index,
        cell.theta_index,
        n as u64,
        rep,
    );
    gaussian.sample(&mut rng)
}

/// Shift `Δ_n = n^θ`.
pub fn shift(n: usize, theta: f64) -> f64 {
    (n as f64).powf(theta)
}

pub fn run_replication(
    cfg: &ExperimentConfig,
    gaussian: &NaGaussian,
    cell: &Cell,
    rep: u64,
    opts: ReplicationOptions,
) -> Result<ReplicationRecord> {
    let n = gaussian.n();
    let delta = if opts.negate_delta {
        -shift(n, cell.theta)
    } else {
        shift(n, cell.theta)
    };
    let model = ChangePointConfig::new(cfg.mu, delta, cfg.tau_star)?;
    let params = CusumParams::new(cell.gamma)?;
    let noise = if opts.zero_noise {
        SampleRow::new(vec![0.0; n])?
    } else {
        replication_noise(cfg, gaussian, cell, rep)
    };
    let obs = generate_row(&model, &noise)?;
    let profile = cusum_profile(&obs.values, params)?;
    let est = estimate(&profile, n)?;
    let sides = deviation_bound_sides(&model, n, params, &profile)?;
    Ok(ReplicationRecord {
        cell: cell.id,
        gamma: cell.gamma,
        theta: cell.theta,
        n,
        rep,
        tau_hat: est.tau_hat,
        k_hat: est.k_hat,
        abs_err: (est.tau_hat - cfg.tau_star).abs(),
        bound_lhs: sides.lhs,
        bound_rhs: sides.rhs,
        bound_ok: sides.holds(),
    })
}

/// Five-number summary plus mean and count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxplotStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
    pub count: usize,
}

/// Linear interpolation between order statistics at position `p·(count−1)`.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let pos = p * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats> {
    if values.is_empty() {
        return Err(LabError::InsufficientData(
            "boxplot of an empty sample".into(),
        ));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(BoxplotStats {
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
        mean: values.iter().sum::<f64>() / values.len() as f64,
        count: values.len(),
    })
}

/// Per-(cell, n) aggregate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSummary {
    pub cell: usize,
    pub gamma: f64,
    pub theta: f64,
    pub n: usize,
    pub tau_hat: BoxplotStats,
    pub abs_err: BoxplotStats,
    pub bound_violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellFailure {
    pub gamma: f64,
    pub theta: f64,
    pub n: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonDiagnostics {
    pub epsilon: f64,
    /// `P̂{|τ̂ − τ*| > ε}` per n.
    pub tail_prob: Vec<f64>,
    /// Mean of `(|τ̂ − τ*| − ε)₊^r` per n.
    pub plus_moment: Vec<f64>,
    /// Σ over the n grid of `tail_prob`.
    pub partial_tail_series: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaDiagnostics {
    pub theta: f64,
    pub n: Vec<usize>,
    /// Mean of `|τ̂ − τ*|^r` per n.
    pub rth_mean_error: Vec<f64>,
    pub by_epsilon: Vec<EpsilonDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GammaDiagnostics {
    pub gamma: f64,
    pub thetas: Vec<ThetaDiagnostics>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyDiagnostics {
    pub r_diag: f64,
    pub epsilons: Vec<f64>,
    pub gammas: Vec<GammaDiagnostics>,
}

/// Tail probabilities and plus-moments per cell, grouped γ → θ → n.
/// Records are grouped by cell id in order of first appearance.
pub fn consistency_diagnostics(
    records: &[ReplicationRecord],
    epsilons: &[f64],
    r_diag: f64,
) -> ConsistencyDiagnostics {
    // (cell, gamma, theta) in order of first appearance
    let mut cell_order: Vec<(usize, f64, f64)> = Vec::new();
    for r in records {
        if !cell_order.iter().any(|(c, _, _)| *c == r.cell) {
            cell_order.push((r.cell, r.gamma, r.theta));
        }
    }
    let mut gammas: Vec<GammaDiagnostics> = Vec::new();
    for (cell, gamma, theta) in cell_order {
        let cell_records: Vec<&ReplicationRecord> =
            records.iter().filter(|r| r.cell == cell).collect();
        let mut ns: Vec<usize> = cell_records.iter().map(|r| r.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let errs_by_n: Vec<Vec<f64>> = ns
            .iter()
            .map(|&n| {
                cell_records
                    .iter()
                    .filter(|r| r.n == n)
                    .map(|r| r.abs_err)
                    .collect()
            })
            .collect();
        let mean = |v: &[f64], f: &dyn Fn(f64) -> f64| {
            v.iter().map(|&e| f(e)).sum::<f64>() / v.len() as f64
        };
        let rth_mean_error = errs_by_n
            .iter()
            .map(|v| mean(v, &|e| e.powf(r_diag)))
            .collect();
        let by_epsilon = epsilons
            .iter()
            .map(|&eps| {
                let tail_prob: Vec<f64> = errs_by_n
                    .iter()
                    .map(|v| mean(v, &|e| if e > eps { 1.0 } else { 0.0 }))
                    .collect();
                let plus_moment = errs_by_n
                    .iter()
                    .map(|v| mean(v, &|e| (e - eps).max(0.0).powf(r_diag)))
                    .collect();
                EpsilonDiagnostics {
                    epsilon: eps,
                    partial_tail_series: tail_prob.iter().sum(),
                    tail_prob,
                    plus_moment,
                }
            })
            .collect();
        let theta_diag = ThetaDiagnostics {
            theta,
            n: ns,
            rth_mean_error,
            by_epsilon,
        };
        match gammas
            .iter_mut()
            .find(|g| g.gamma.to_bits() == gamma.to_bits())
        {
            Some(g) => g.thetas.push(theta_diag),
            None => gammas.push(GammaDiagnostics {
                gamma,
                thetas: vec![theta_diag],
            }),
        }
    }
    ConsistencyDiagnostics {
        r_diag,
        epsilons: epsilons.to_vec(),
        gammas,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridOutcome {
    /// Sorted by (γ, θ, n, rep).
    pub records: Vec<ReplicationRecord>,
    /// One entry per executed (cell, n), sorted like `records`.
    pub summaries: Vec<CellSummary>,
    pub diagnostics: ConsistencyDiagnostics,
    pub failures: Vec<CellFailure>,
}

impl GridOutcome {
    pub fn bound_violations(&self) -> impl Iterator<Item = &ReplicationRecord> {
        self.records.iter().filter(|r| !r.bound_ok)
    }
}

/// Runs every (cell, n) with `reps` replications. `threads = None` uses the
/// global rayon pool; `Some(1)` runs single-threaded. Output is identical
/// for any thread count.
pub fn run_grid(cfg: &ExperimentConfig, threads: Option<usize>) -> Result<GridOutcome> {
    cfg.validate()?;
    match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| LabError::config(format!("thread pool: {e}")))?;
            Ok(pool.install(|| run_grid_inner(cfg)))
        }
        None => Ok(run_grid_inner(cfg)),
    }
}

fn run_grid_inner(cfg: &ExperimentConfig) -> GridOutcome {
    let cells = cells(cfg);
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for &n in &cfg.n_grid {
        let gaussian = match CovarianceSpec::new(n, cfg.sigma).and_then(NaGaussian::new) {
            Ok(g) => g,
            Err(e) => {
                failures.extend(cells.iter().map(|c| CellFailure {
                    gamma: c.gamma,
                    theta: c.theta,
                    n,
                    error: e.to_string(),
                }));
                continue;
            }
        };
        let per_cell: Vec<std::result::Result<Vec<ReplicationRecord>, CellFailure>> = cells
            .par_iter()
            .map(|cell| {
                (0..cfg.reps)
                    .into_par_iter()
                    .map(|rep| {
                        run_replication(cfg, &gaussian, cell, rep, ReplicationOptions::default())
                    })
                    .collect::<Result<Vec<_>>>()
                    .map_err(|e| CellFailure {
                        gamma: cell.gamma,
                        theta: cell.theta,
                        n,
                        error: e.to_string(),
                    })
            })
            .collect();
        for outcome in per_cell {
            match outcome {
                Ok(recs) => records.extend(recs),
                Err(f) => failures.push(f),
            }
        }
    }
    records.sort_by(ReplicationRecord::sort_key_cmp);
    let summaries = summarize(&records);
    let diagnostics = consistency_diagnostics(&records, &cfg.epsilon_list, cfg.r_diag);
    GridOutcome {
        records,
        summaries,
        diagnostics,
        failures,
    }
}

/// Groups sorted records into per-(cell, n) summaries.
pub fn summarize(records: &[ReplicationRecord]) -> Vec<CellSummary> {
    let mut out = Vec::new();
    let mut keys: Vec<(usize, usize)> = records.iter().map(|r| (r.cell, r.n)).collect();
    keys.dedup();
    // records are sorted by (γ, θ, n, rep, cell); duplicate cells interleave
    let mut seen = std::collections::HashSet::new();
    keys.retain(|k| seen.insert(*k));
    for (cell, n) in keys {
        let group: Vec<&ReplicationRecord> = records
            .iter()
            .filter(|r| r.cell == cell && r.n == n)
            .collect();
        let taus: Vec<f64> = group.iter().map(|r| r.tau_hat).collect();
        let errs: Vec<f64> = group.iter().map(|r| r.abs_err).collect();
        out.push(CellSummary {
            cell,
            gamma: group[0].gamma,
            theta: group[0].theta,
            n,
            tau_hat: boxplot_stats(&taus).expect("group is non-empty"),
            abs_err: boxplot_stats(&errs).expect("group is non-empty"),
            bound_violations: group.iter().filter(|r| !r.bound_ok).count(),
        });
    }
    out
}
