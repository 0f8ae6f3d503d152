//! Divergences along the tempered path and sample-based estimators of the
//! quantities that drive the adaptive rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{fisher_info, gaussian_state, GaussianPair, GaussianState, LogDensityPair};
use crate::numeric::{adaptive_simpson, population_variance, QuadTolerance};
use crate::smc::{incremental_log_weights, kl_estimate, scores, ParticleCloud};

/// Generators `f` of the f-divergences `D_f(q | p) = E_p[f(q / p)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FDivergence {
    /// `f(r) = r log r`
    Kl,
    /// `f(r) = -log r`
    ReverseKl,
    /// `f(r) = (r - 1)^2`
    Chi2,
}

impl FDivergence {
    pub const ALL: [FDivergence; 3] = [FDivergence::Kl, FDivergence::ReverseKl, FDivergence::Chi2];

    /// `f''(1)`.
    pub fn curvature(self) -> f64 {
        match self {
            FDivergence::Kl | FDivergence::ReverseKl => 1.0,
            FDivergence::Chi2 => 2.0,
        }
    }

    /// `f(e^u) - f'(1) (e^u - 1)`: same integral, but non-negative and
    /// second order in `u`, so small divergences keep their precision.
    fn reduced(self, u: f64) -> f64 {
        const SERIES_BELOW: f64 = 1e-2;
        match self {
            FDivergence::Kl => {
                if u.abs() < SERIES_BELOW {
                    // sum_k (k - 1) u^k / k!
                    u * u * (0.5 + u * (1.0 / 3.0 + u * (1.0 / 8.0 + u * (1.0 / 30.0 + u * (1.0 / 144.0)))))
                } else {
                    u.exp() * u - u.exp_m1()
                }
            }
            FDivergence::ReverseKl => {
                if u.abs() < SERIES_BELOW {
                    u * u * (0.5 + u * (1.0 / 6.0 + u * (1.0 / 24.0 + u * (1.0 / 120.0 + u * (1.0 / 720.0)))))
                } else {
                    u.exp_m1() - u
                }
            }
            FDivergence::Chi2 => {
                let e = u.exp_m1();
                e * e
            }
        }
    }
}

/// `D_f(lambda2 | lambda) = E_{mu_lambda}[f(mu_lambda2 / mu_lambda)]` for a
/// one-dimensional Gaussian pair, by adaptive quadrature over 12 standard
/// deviations on either side of both means.
pub fn f_divergence_1d(pair: &GaussianPair, lambda: f64, lambda2: f64, f: FDivergence) -> Result<f64> {
    if pair.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: pair.dim(),
        });
    }
    let p = gaussian_state(pair, lambda)?;
    let q = gaussian_state(pair, lambda2)?;
    if p == q {
        return Ok(0.0);
    }
    let sd = p.var[0].max(q.var[0]).sqrt();
    let lo = p.mean[0].min(q.mean[0]) - 12.0 * sd;
    let hi = p.mean[0].max(q.mean[0]) + 12.0 * sd;
    let integrand = |x: f64| {
        let lp = p.logpdf(&[x]);
        let lq = q.logpdf(&[x]);
        lp.exp() * f.reduced(lq - lp)
    };
    adaptive_simpson(integrand, lo, hi, QuadTolerance::relative(1e-10))
}

/// Exact divergence against its quadratic approximation at one step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DivergenceReport {
    pub lambda: f64,
    pub delta: f64,
    pub exact_divergence: f64,
    /// `f''(1) I(lambda) delta^2 / 2`
    pub expansion_value: f64,
    pub ratio: f64,
}

/// Compares `D_f(lambda + delta | lambda)` with `f''(1) I(lambda) delta^2 / 2`
/// for each `delta`.
pub fn expansion_check(
    pair: &GaussianPair,
    lambda: f64,
    deltas: &[f64],
    f: FDivergence,
) -> Result<Vec<DivergenceReport>> {
    let info = fisher_info(pair, lambda)?;
    deltas
        .iter()
        .map(|&delta| {
            if !(delta > 0.0) || lambda + delta > 1.0 {
                return Err(Error::invalid(format!(
                    "delta = {delta} must be positive with lambda + delta <= 1"
                )));
            }
            let exact = f_divergence_1d(pair, lambda, lambda + delta, f)?;
            let expansion = f.curvature() * info * delta * delta / 2.0;
            Ok(DivergenceReport {
                lambda,
                delta,
                exact_divergence: exact,
                expansion_value: expansion,
                ratio: exact / expansion,
            })
        })
        .collect()
}

/// Population variance of the score over the particle positions.
pub fn empirical_fisher<P: LogDensityPair + ?Sized>(cloud: &ParticleCloud, pair: &P) -> Result<f64> {
    if cloud.len() < 2 {
        return Err(Error::invalid("need at least two particles"));
    }
    Ok(population_variance(&scores(pair, cloud)?))
}

/// `-mean(log w) + log mean(w)` over the incremental weights that move the
/// cloud to `lambda_new`; estimates `KL(mu_lambda | mu_lambda_new)`.
pub fn empirical_kl_between_iterates<P: LogDensityPair + ?Sized>(
    cloud: &ParticleCloud,
    pair: &P,
    lambda_new: f64,
) -> Result<f64> {
    let log_w = incremental_log_weights(pair, cloud, lambda_new)?;
    if log_w.iter().any(|w| !w.is_finite()) {
        return Err(Error::DegenerateCloud);
    }
    Ok(kl_estimate(&log_w))
}

/// Sup-norm errors of the weighted mean and variance of `cloud` against
/// `reference`.
pub fn moment_error(cloud: &ParticleCloud, reference: &GaussianState) -> Result<(f64, f64)> {
    if cloud.dim() != reference.dim() {
        return Err(Error::DimensionMismatch {
            expected: reference.dim(),
            got: cloud.dim(),
        });
    }
    let (mean, var) = cloud.weighted_moments()?;
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok((sup(&mean, &reference.mean), sup(&var, &reference.var)))
}
