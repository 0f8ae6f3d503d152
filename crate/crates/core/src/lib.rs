//! Tempered sequential Monte Carlo read as entropic mirror descent on the KL
//! divergence.
//!
//! The tempering path `mu_lambda ∝ mu0^(1 - lambda) pi^lambda` is the sequence
//! of mirror-descent iterates for `KL(. | pi)` with step sizes
//! `gamma_n = (lambda_n - lambda_{n-1}) / (1 - lambda_{n-1})`. This crate
//! provides
//!
//! - [`model`]: proposal/target pairs and exact Gaussian oracles,
//! - [`schedule`]: temperature/step-size conversion, convergence rates and
//!   the constant-divergence schedule ODE,
//! - [`smc`]: an adaptive SMC sampler with ESS, KL, Fisher and constant-rate
//!   temperature rules,
//! - [`altschemes`]: particle mirror descent and adaptive importance sampling
//!   with KDE proposals,
//! - [`diagnostics`]: f-divergences along the path and sample estimators.
//!
//! ```
//! use mirror_tempering::model::GaussianPair;
//! use mirror_tempering::smc::{run_smc, AdaptiveRule, SmcSettings};
//!
//! let pair = GaussianPair::isotropic(2, 1.0, 0.01)?;
//! let settings = SmcSettings::new(AdaptiveRule::EssBisection { beta: 1.0 }, 2_000);
//! let run = run_smc(&pair, &settings, 42)?;
//! assert_eq!(run.lambdas.last(), Some(&1.0));
//! # Ok::<(), mirror_tempering::Error>(())
//! ```

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod altschemes;
pub mod config;
pub mod diagnostics;
mod error;
pub mod experiments;
pub mod io;
pub mod model;
pub mod numeric;
pub mod rng;
pub mod schedule;
pub mod smc;

pub use error::{Error, Result};
