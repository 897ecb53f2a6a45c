// SPDX-License-Identifier: MIT OR Apache-2.0

use clap::{Parser, Subcommand};
use cusum_lab::config::{ExperimentConfig, Profile};
use cusum_lab::cusum::{estimate_change, CusumParams};
use cusum_lab::error::{LabError, Result};
use cusum_lab::gaussian::{build_sigma, CovarianceSpec, NaGaussian};
use cusum_lab::report::{fmt_g17, sigma_csv, write_outputs};
use cusum_lab::series::{
    classify_rate, probe_exponential_inequality, InequalityParams, RateParams,
};
use cusum_lab::trunc::TruncationLevel;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "cusum-lab",
    version,
    about = "Weighted CUSUM change-point experiments under dependent Gaussian noise"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the n×n noise covariance as CSV.
    SigmaMatrix {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate the change point of a series read from CSV.
    Cusum {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        gamma: f64,
        /// Also print the statistic for every k.
        #[arg(long)]
        full: bool,
    },
    /// Classify a (r, γ, θ) triple against the rate conditions.
    CheckConditions {
        #[arg(long)]
        r: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long, allow_hyphen_values = true)]
        theta: f64,
    },
    /// Monte Carlo check of the exponential maximal inequality.
    ProbeInequality {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sigma: f64,
        #[arg(long)]
        x: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        m: u32,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Truncation level ℓ.
        #[arg(long, default_value_t = 10.0)]
        level: f64,
    },
    /// Run the replication grid and write CSV/JSON outputs.
    Simulate {
        /// `key = value` file applied on top of the profile defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        reps: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "cusum-lab-out")]
        out_dir: PathBuf,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "paper")]
        profile: String,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                LabError::Config(_) | LabError::InvalidInput(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(command: Command) -> Result<ExitCode> {
    match command {
        Command::SigmaMatrix { n, sigma, out } => {
            let cov = build_sigma(&CovarianceSpec::new(n, sigma)?);
            std::fs::write(&out, sigma_csv(&cov))?;
        }
        Command::Cusum { input, gamma, full } => {
            let text = std::fs::read_to_string(&input)?;
            let y = parse_series(&text)?;
            let (profile, est) = estimate_change(&y, CusumParams::new(gamma)?)?;
            println!("k_hat,tau_hat");
            println!("{},{}", est.k_hat, fmt_g17(est.tau_hat));
            if full {
                println!();
                println!("k,u");
                for (i, u) in profile.values().iter().enumerate() {
                    println!("{},{}", i + 1, fmt_g17(*u));
                }
            }
        }
        Command::CheckConditions { r, gamma, theta } => {
            let verdict = classify_rate(RateParams::new(r, gamma, theta)?)?;
            println!("{}", to_json(&verdict));
        }
        Command::ProbeInequality {
            n,
            sigma,
            x,
            a,
            m,
            reps,
            seed,
            level,
        } => {
            let params = InequalityParams::new(m, x, a)?;
            let sampler = NaGaussian::new(CovarianceSpec::new(n, sigma)?)?;
            let report = probe_exponential_inequality(
                &params,
                &sampler,
                TruncationLevel::new(level)?,
                reps,
                seed,
            )?;
            println!("{}", to_json(&report));
        }
        Command::Simulate {
            config,
            reps,
            seed,
            out_dir,
            threads,
            profile,
        } => {
            let mut cfg = ExperimentConfig::for_profile(profile.parse::<Profile>()?);
            if let Some(path) = config {
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| LabError::config(format!("{}: {e}", path.display())))?;
                cfg = cfg.apply_text(&text)?;
            }
            if let Some(r) = reps {
                cfg.reps = r;
            }
            if let Some(s) = seed {
                cfg.base_seed = s;
            }
            cfg.validate()?;
            let outcome = cusum_lab::harness::run_grid(&cfg, threads)?;
            write_outputs(&out_dir, &cfg, &outcome)?;
            println!(
                "{} records, {} bound violations, {} failed cells -> {}",
                outcome.records.len(),
                outcome.bound_violations().count(),
                outcome.failures.len(),
                out_dir.display()
            );
            if !outcome.failures.is_empty() {
                for f in &outcome.failures {
                    eprintln!(
                        "cell gamma={} theta={} n={} failed: {}",
                        f.gamma, f.theta, f.n, f.error
                    );
                }
                return Ok(ExitCode::from(3));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("report serializes")
}

/// Numbers separated by commas or whitespace; a non-numeric first line is
/// treated as a header.
fn parse_series(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let tokens: Vec<&str> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .collect();
        let parsed: std::result::Result<Vec<f64>, _> =
            tokens.iter().map(|t| t.parse::<f64>()).collect();
        match parsed {
            Ok(v) => values.extend(v),
            Err(_) if lineno == 0 => continue,
            Err(e) => {
                return Err(LabError::invalid_input(format!("line {}: {e}", lineno + 1)));
            }
        }
    }
    Ok(values)
}
