// SPDX-License-Identifier: MIT OR Apache-2.0

//! Experiment configuration and its flat `key = value` text format.
//!
//! ```text
//! # comments start with '#'
//! sigma = 2
//! mu = 1
//! tau_star = 0.5
//! gamma_list = 0, 0.5
//! theta_map = 0: -0.29, 0, 0.1; 0.5: 0
//! n_grid = 50, 100, 500
//! reps = 200
//! base_seed = 20240601
//! epsilon_list = 0.01, 0.05, 0.1
//! r_diag = 2
//! enforce_rates = false
//! ```
//!
//! `theta_map` groups are separated by `;`, each `gamma: θ, θ, ...`. Every
//! entry of `gamma_list` needs a group. Keys not given keep the value of the
//! base profile.

use crate::error::{LabError, Result};
use crate::series::{classify_rate, RateParams};
use serde::Serialize;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Full simulation grid (1000 replications, n up to 4000).
    Paper,
    /// 200 replications, n up to 2000.
    Desk,
}

impl FromStr for Profile {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Self::Paper),
            "desk" => Ok(Self::Desk),
            other => Err(LabError::config(format!(
                "unknown profile '{other}' (expected desk|paper)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub sigma: f64,
    pub mu: f64,
    pub tau_star: f64,
    pub gamma_list: Vec<f64>,
    /// `theta_map[i]` lists the shift exponents run with `gamma_list[i]`.
    pub theta_map: Vec<Vec<f64>>,
    pub n_grid: Vec<usize>,
    pub reps: u64,
    pub base_seed: u64,
    pub epsilon_list: Vec<f64>,
    pub r_diag: f64,
    /// Reject (γ, θ) pairs that fail the rate conditions at order `r_diag`.
    pub enforce_rates: bool,
}

pub const DEFAULT_SEED: u64 = 20_240_601;

impl ExperimentConfig {
    pub fn paper() -> Self {
        let low = vec![-0.29, -0.2, -0.09, 0.0, 0.1];
        Self {
            sigma: 2.0,
            mu: 1.0,
            tau_star: 0.5,
            gamma_list: vec![0.0, 0.1, 0.5, 0.7, 0.9],
            theta_map: vec![
                low.clone(),
                low.clone(),
                low,
                vec![-0.19, -0.1, -0.01, 0.0, 0.1],
                vec![-0.01, 0.0, 0.1],
            ],
            n_grid: vec![50, 100, 500, 1000, 1500, 2000, 3000, 4000],
            reps: 1000,
            base_seed: DEFAULT_SEED,
            epsilon_list: vec![0.01, 0.05, 0.1],
            r_diag: 2.0,
            enforce_rates: false,
        }
    }

    pub fn desk() -> Self {
        Self {
            reps: 200,
            n_grid: vec![50, 100, 500, 1000, 1500, 2000],
            ..Self::paper()
        }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Paper => Self::paper(),
            Profile::Desk => Self::desk(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma.is_finite() && self.sigma > 1.0) {
            return Err(LabError::config(format!(
                "sigma must be > 1; got {}",
                self.sigma
            )));
        }
        if !self.mu.is_finite() {
            return Err(LabError::config("mu must be finite"));
        }
        if !(self.tau_star > 0.0 && self.tau_star < 1.0) {
            return Err(LabError::config(format!(
                "tau_star must lie in (0,1); got {}",
                self.tau_star
            )));
        }
        if self.gamma_list.is_empty() {
            return Err(LabError::config("gamma_list is empty"));
        }
        if let Some(g) = self.gamma_list.iter().find(|g| !(0.0..1.0).contains(*g)) {
            return Err(LabError::config(format!("gamma {g} outside [0, 1)")));
        }
        if self.theta_map.len() != self.gamma_list.len() {
            return Err(LabError::config(format!(
                "theta_map has {} groups for {} gammas",
                self.theta_map.len(),
                self.gamma_list.len()
            )));
        }
        for (g, thetas) in self.gamma_list.iter().zip(&self.theta_map) {
            if thetas.is_empty() {
                return Err(LabError::config(format!("no theta values for gamma {g}")));
            }
            if let Some(t) = thetas.iter().find(|t| !t.is_finite()) {
                return Err(LabError::config(format!("theta {t} is not finite")));
            }
        }
        if self.n_grid.is_empty() {
            return Err(LabError::config("n_grid is empty"));
        }
        if self.n_grid[0] < 2 {
            return Err(LabError::config("n_grid entries must be >= 2"));
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LabError::config("n_grid must be strictly increasing"));
        }
        if self.reps == 0 {
            return Err(LabError::config("reps must be >= 1"));
        }
        if let Some(e) = self
            .epsilon_list
            .iter()
            .find(|e| !(e.is_finite() && **e > 0.0))
        {
            return Err(LabError::config(format!("epsilon {e} must be positive")));
        }
        if !(self.r_diag.is_finite() && self.r_diag > 0.0) {
            return Err(LabError::config(format!(
                "r_diag must be positive; got {}",
                self.r_diag
            )));
        }
        if self.enforce_rates {
            for (g, thetas) in self.gamma_list.iter().zip(&self.theta_map) {
                for t in thetas {
                    let verdict = classify_rate(RateParams::new(self.r_diag, *g, *t)?)?;
                    if !verdict.converges {
                        return Err(LabError::config(format!(
                            "(gamma={g}, theta={t}) violates the rate condition at r={} (needs theta > {})",
                            self.r_diag, verdict.threshold_theta
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(mut self, text: &str) -> Result<Self> {
        let mut gammas_set = false;
        let mut theta_pairs: Option<Vec<(f64, Vec<f64>)>> = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                LabError::config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let ctx = |e: LabError| LabError::config(format!("line {} ({key}): {e}", lineno + 1));
            match key {
                "sigma" => self.sigma = parse_f64(value).map_err(ctx)?,
                "mu" => self.mu = parse_f64(value).map_err(ctx)?,
                "tau_star" => self.tau_star = parse_f64(value).map_err(ctx)?,
                "gamma_list" => {
                    self.gamma_list = parse_list(value).map_err(ctx)?;
                    gammas_set = true;
                }
                "theta_map" => theta_pairs = Some(parse_theta_map(value).map_err(ctx)?),
                "n_grid" => {
                    self.n_grid = value
                        .split(',')
                        .map(|v| {
                            v.trim()
                                .parse::<usize>()
                                .map_err(|e| LabError::config(format!("'{v}': {e}")))
                        })
                        .collect::<Result<_>>()
                        .map_err(ctx)?
                }
                "reps" => self.reps = parse_int(value).map_err(ctx)?,
                "base_seed" => self.base_seed = parse_int(value).map_err(ctx)?,
                "epsilon_list" => self.epsilon_list = parse_list(value).map_err(ctx)?,
                "r_diag" => self.r_diag = parse_f64(value).map_err(ctx)?,
                "enforce_rates" => {
                    self.enforce_rates = match value {
                        "true" | "1" | "yes" => true,
                        "false" | "0" | "no" => false,
                        other => {
                            return Err(ctx(LabError::config(format!(
                                "'{other}' is not a boolean"
                            ))))
                        }
                    }
                }
                other => {
                    return Err(LabError::config(format!(
                        "line {}: unknown key '{other}'",
                        lineno + 1
                    )))
                }
            }
        }
        match theta_pairs {
            Some(pairs) => {
                if !gammas_set {
                    self.gamma_list = pairs.iter().map(|(g, _)| *g).collect();
                }
                self.theta_map = self
                    .gamma_list
                    .iter()
                    .map(|g| {
                        pairs
                            .iter()
                            .find(|(pg, _)| pg == g)
                            .map(|(_, ts)| ts.clone())
                            .ok_or_else(|| {
                                LabError::config(format!("theta_map has no group for gamma {g}"))
                            })
                    })
                    .collect::<Result<_>>()?;
            }
            None if gammas_set => {
                return Err(LabError::config("gamma_list given without theta_map"));
            }
            None => {}
        }
        Ok(self)
    }

    pub fn to_text(&self) -> String {
        let list = |v: &[f64]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(", ")
        };
        let theta_map = self
            .gamma_list
            .iter()
            .zip(&self.theta_map)
            .map(|(g, ts)| format!("{g}: {}", list(ts)))
            .collect::<Vec<_>>()
            .join("; ");
        format!(
            "sigma = {}\nmu = {}\ntau_star = {}\ngamma_list = {}\ntheta_map = {}\nn_grid = {}\nreps = {}\nbase_seed = {}\nepsilon_list = {}\nr_diag = {}\nenforce_rates = {}\n",
            self.sigma,
            self.mu,
            self.tau_star,
            list(&self.gamma_list),
            theta_map,
            self.n_grid.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "),
            self.reps,
            self.base_seed,
            list(&self.epsilon_list),
            self.r_diag,
            self.enforce_rates
        )
    }
}

fn parse_f64(v: &str) -> Result<f64> {
    v.trim()
        .parse::<f64>()
        .map_err(|e| LabError::config(format!("'{v}': {e}")))
}

fn parse_int<T: FromStr<Err = std::num::ParseIntError>>(v: &str) -> Result<T> {
    v.trim()
        .parse::<T>()
        .map_err(|e| LabError::config(format!("'{v}': {e}")))
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split(',').map(parse_f64).collect()
}

fn parse_theta_map(v: &str) -> Result<Vec<(f64, Vec<f64>)>> {
    v.split(';')
        .filter(|g| !g.trim().is_empty())
        .map(|group| {
            let (g, ts) = group
                .split_once(':')
                .ok_or_else(|| LabError::config(format!("theta_map group '{group}' lacks ':'")))?;
            Ok((parse_f64(g)?, parse_list(ts)?))
        })
        .collect()
}
