// SPDX-License-Identifier: MIT OR Apache-2.0

//! Change-point estimation with weighted CUSUM statistics under dependent
//! Gaussian noise, plus the tooling to study its consistency.

pub mod config;
pub mod cusum;
pub mod error;
pub mod gaussian;
pub mod harness;
pub mod model;
pub mod report;
pub mod series;
pub mod special;
pub mod stream;
pub mod trunc;

pub use config::{ExperimentConfig, Profile};
pub use cusum::{cusum_profile, estimate, estimate_change, CusumParams, CusumProfile, Estimate};
pub use error::{LabError, Result};
pub use gaussian::{build_sigma, cholesky_factor, CovarianceSpec, NaGaussian};
pub use harness::{run_grid, GridOutcome, ReplicationRecord};
pub use model::{generate_row, ChangePointConfig};
pub use series::{classify_rate, RateParams, SeriesVerdict};
pub use stream::{derive_stream, RandomStream};
pub use trunc::{SampleRow, TruncationLevel};
