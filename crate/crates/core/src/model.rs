//! Proposal/target pairs and the tempered path between them.
//!
//! A [`LogDensityPair`] holds a normalized proposal `mu0` and an unnormalized
//! target `pi`. The tempered density at temperature `lambda` is
//! `mu0^(1 - lambda) * pi^lambda`, equivalently `mu0 * exp(lambda * s)` with the
//! score `s = log pi - log mu0`.
//!
//! [`GaussianPair`] fixes `mu0 = N(0, I)` and a diagonal Gaussian target. Every
//! point of its tempered path is Gaussian, which gives closed forms for the
//! tempered state, the Fisher information `Var[s(X)]` and KL divergences.

use std::f64::consts::PI;

use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A normalized proposal and an unnormalized target on `R^dim`.
pub trait LogDensityPair: Sync {
    fn dim(&self) -> usize;

    /// Normalized log density of the proposal.
    fn log_mu0(&self, x: &[f64]) -> f64;

    /// Unnormalized log density of the target.
    fn log_target(&self, x: &[f64]) -> f64;

    /// One exact draw from the proposal.
    fn sample_mu0(&self, rng: &mut dyn RngCore) -> Vec<f64>;

    /// Log density of the proposal convolved with an isotropic Gaussian kernel
    /// of standard deviation `bandwidth`. Pairs without a closed form return
    /// the zero-bandwidth limit.
    fn log_mu0_smoothed(&self, x: &[f64], bandwidth: f64) -> f64 {
        let _ = bandwidth;
        self.log_mu0(x)
    }

    /// `s(x) = log pi(x) - log mu0(x)`.
    fn score(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.log_target(x) - self.log_mu0(x))
    }

    /// Unnormalized `log mu_lambda(x) = (1 - lambda) log mu0(x) + lambda log pi(x)`.
    fn tempered_logpdf(&self, lambda: f64, x: &[f64]) -> Result<f64> {
        check_lambda(lambda)?;
        self.check_dim(x)?;
        Ok(self.tempered_unchecked(lambda, x))
    }

    #[doc(hidden)]
    fn tempered_unchecked(&self, lambda: f64, x: &[f64]) -> f64 {
        (1.0 - lambda) * self.log_mu0(x) + lambda * self.log_target(x)
    }

    #[doc(hidden)]
    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid(format!("lambda = {lambda} is outside [0, 1]")));
    }
    Ok(())
}

/// A pair assembled from closures, for targets without a dedicated type.
pub struct FnPair<M, T, S> {
    dim: usize,
    log_mu0: M,
    log_target: T,
    sampler: S,
}

impl<M, T, S> FnPair<M, T, S>
where
    M: Fn(&[f64]) -> f64 + Sync,
    T: Fn(&[f64]) -> f64 + Sync,
    S: Fn(&mut dyn RngCore) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, log_mu0: M, log_target: T, sampler: S) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        Ok(Self {
            dim,
            log_mu0,
            log_target,
            sampler,
        })
    }
}

impl<M, T, S> LogDensityPair for FnPair<M, T, S>
where
    M: Fn(&[f64]) -> f64 + Sync,
    T: Fn(&[f64]) -> f64 + Sync,
    S: Fn(&mut dyn RngCore) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn log_mu0(&self, x: &[f64]) -> f64 {
        (self.log_mu0)(x)
    }

    fn log_target(&self, x: &[f64]) -> f64 {
        (self.log_target)(x)
    }

    fn sample_mu0(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (self.sampler)(rng)
    }
}

/// `mu0 = N(0, I)` against `pi = N(mean, diag(var))`, optionally scaled by
/// `exp(log_scale)` so that the true log normalizing constant is `log_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPair {
    mean: Vec<f64>,
    var: Vec<f64>,
    log_scale: f64,
    zeros: Vec<f64>,
    ones: Vec<f64>,
}

impl GaussianPair {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::invalid("dim must be positive"));
        }
        if mean.len() != var.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: var.len(),
            });
        }
        if let Some(v) = var.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(format!("target variances must be positive, got {v}")));
        }
        if mean.iter().any(|m| !m.is_finite()) {
            return Err(Error::invalid("target mean must be finite"));
        }
        let d = mean.len();
        Ok(Self {
            mean,
            var,
            log_scale: 0.0,
            zeros: vec![0.0; d],
            ones: vec![1.0; d],
        })
    }

    /// `d` i.i.d. coordinates with target mean `m` and variance `tau2`.
    pub fn isotropic(dim: usize, m: f64, tau2: f64) -> Result<Self> {
        Self::new(vec![m; dim], vec![tau2; dim])
    }

    /// Multiplies the target density by `exp(log_scale)`.
    pub fn with_log_scale(mut self, log_scale: f64) -> Self {
        self.log_scale = log_scale;
        self
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn var(&self) -> &[f64] {
        &self.var
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    /// The target as a [`GaussianState`].
    pub fn target_state(&self) -> GaussianState {
        GaussianState {
            mean: self.mean.clone(),
            var: self.var.clone(),
        }
    }

    /// Coefficients `(a_i, b_i)` of `s(x) = sum_i a_i x_i^2 + b_i x_i + const`.
    fn score_coefficients(&self, i: usize) -> (f64, f64) {
        let tau2 = self.var[i];
        (0.5 * (1.0 - 1.0 / tau2), self.mean[i] / tau2)
    }
}

impl LogDensityPair for GaussianPair {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn log_mu0(&self, x: &[f64]) -> f64 {
        diag_logpdf(x, &self.zeros, &self.ones)
    }

    fn log_target(&self, x: &[f64]) -> f64 {
        diag_logpdf(x, &self.mean, &self.var) + self.log_scale
    }

    fn sample_mu0(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        (0..self.dim()).map(|_| StandardNormal.sample(rng)).collect()
    }

    fn log_mu0_smoothed(&self, x: &[f64], bandwidth: f64) -> f64 {
        let v = 1.0 + bandwidth * bandwidth;
        x.iter().map(|&xi| -0.5 * xi * xi / v - 0.5 * (LN_2PI + v.ln())).sum()
    }
}

// Also used for mu0 with zero mean / unit variance so that a pair with
// pi = mu0 yields a score that is exactly zero.
fn diag_logpdf(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    x.iter()
        .zip(mean.iter().zip(var))
        .map(|(&xi, (&m, &v))| {
            let z = xi - m;
            -0.5 * z * z / v - 0.5 * (LN_2PI + v.ln())
        })
        .sum()
}

/// A diagonal Gaussian; the tempered state of a [`GaussianPair`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianState {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl GaussianState {
    pub fn new(mean: Vec<f64>, var: Vec<f64>) -> Result<Self> {
        if mean.len() != var.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                got: var.len(),
            });
        }
        if var.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("variances must be positive"));
        }
        Ok(Self { mean, var })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Normalized log density.
    pub fn logpdf(&self, x: &[f64]) -> f64 {
        diag_logpdf(x, &self.mean, &self.var)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        self.mean
            .iter()
            .zip(&self.var)
            .map(|(&m, &v)| {
                let z: f64 = StandardNormal.sample(rng);
                m + v.sqrt() * z
            })
            .collect()
    }
}

/// Closed-form tempered state: per coordinate, precision
/// `(1 - lambda) + lambda / tau2` and mean `lambda * m / tau2 / precision`.
pub fn gaussian_state(pair: &GaussianPair, lambda: f64) -> Result<GaussianState> {
    check_lambda(lambda)?;
    let (mean, var) = pair
        .mean
        .iter()
        .zip(&pair.var)
        .map(|(&m, &tau2)| {
            let precision = (1.0 - lambda) + lambda / tau2;
            (lambda * m / tau2 / precision, 1.0 / precision)
        })
        .unzip();
    Ok(GaussianState { mean, var })
}

/// Exact `I(lambda) = Var_{mu_lambda}[s(X)]`.
///
/// With `s = sum_i a_i x_i^2 + b_i x_i + c` and `X_i ~ N(nu_i, sigma_i^2)`,
/// each coordinate contributes `2 a^2 sigma^4 + (2 a nu + b)^2 sigma^2`.
pub fn fisher_info(pair: &GaussianPair, lambda: f64) -> Result<f64> {
    let state = gaussian_state(pair, lambda)?;
    Ok((0..pair.dim())
        .map(|i| {
            let (a, b) = pair.score_coefficients(i);
            let s2 = state.var[i];
            let lin = 2.0 * a * state.mean[i] + b;
            2.0 * a * a * s2 * s2 + lin * lin * s2
        })
        .sum())
}

/// `KL(p | q)` between diagonal Gaussians.
pub fn kl_gaussian(p: &GaussianState, q: &GaussianState) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        });
    }
    Ok(p.mean
        .iter()
        .zip(&p.var)
        .zip(q.mean.iter().zip(&q.var))
        .map(|((&mp, &vp), (&mq, &vq))| {
            let r = vp / vq;
            let dm = mp - mq;
            0.5 * (r + dm * dm / vq - 1.0 - r.ln())
        })
        .sum())
}

/// Density of `N(mean, var)` at `x` (one dimension).
pub fn normal_pdf(x: f64, mean: f64, var: f64) -> f64 {
    let z = x - mean;
    (-0.5 * z * z / var).exp() / (2.0 * PI * var).sqrt()
}
