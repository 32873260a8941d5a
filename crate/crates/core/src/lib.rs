//! Causal inference for ordinal outcomes in a completely randomized
//! experiment, framed through the finite-population science table.
//!
//! - [`model`]: categories, science tables, observed studies and the joint
//!   distribution of potential outcomes.
//! - [`estimands`]: causal estimands that need only the marginals and those
//!   that need the joint distribution.
//! - [`randomization`]: sharp and composite null tests and fiducial
//!   intervals for step-up probabilities.
//! - [`probit`]: ordered probit and rank-likelihood Gibbs samplers with
//!   posterior imputation of the missing potential outcomes.
//! - [`io`]: study files, run configuration and the command-line driver.
//!
//! # Examples
//!
//! ```
//! use ordinal_causal::io::gss_dataset;
//! use ordinal_causal::randomization::{sharp_null_test, StatisticChoice};
//! use ordinal_causal::rng::SeedSpec;
//!
//! let study = gss_dataset();
//! let r = sharp_null_test(&study, &StatisticChoice::L1, 1_000, SeedSpec::new(1)).unwrap();
//! assert!((r.observed - 0.804).abs() < 1e-3);
//! assert_eq!(r.p_value, 0.0);
//! ```

pub mod error;
pub mod estimands;
pub mod io;
pub mod model;
pub mod probit;
pub mod randomization;
pub mod rng;

pub use error::{Error, Result};
