use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LogDensityPair;
use crate::numeric::{ess_from_log_weights, log_mean_exp, mean, population_variance};
use crate::schedule::Schedule;

use super::cloud::{scores, ParticleCloud};

/// How the next temperature is chosen from the current (equally weighted)
/// particle cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum AdaptiveRule {
    /// Bisection on `ESS(lambda) = N / (beta + 1)`, i.e. a chi-square
    /// divergence of about `beta` between consecutive distributions.
    #[serde(rename = "ess")]
    EssBisection { beta: f64 },
    /// Bisection on the log-weight KL estimate
    /// `-mean(log w) + log mean(w) = kappa`.
    #[serde(rename = "kl")]
    KlConstant { kappa: f64 },
    /// `lambda + sqrt(beta / I_hat)` with `I_hat` the empirical score variance.
    #[serde(rename = "fisher")]
    FisherStep { beta: f64 },
    /// Constant-rate annealing: `lambda + delta / ((1 - lambda) I_hat)`.
    #[serde(rename = "constant-rate")]
    ConstantRateAis { delta: f64 },
    /// A schedule fixed in advance.
    #[serde(rename = "fixed")]
    Fixed { schedule: Schedule },
}

impl AdaptiveRule {
    pub fn validate(&self) -> Result<()> {
        let (name, value) = match self {
            AdaptiveRule::EssBisection { beta } => ("beta", *beta),
            AdaptiveRule::KlConstant { kappa } => ("kappa", *kappa),
            AdaptiveRule::FisherStep { beta } => ("beta", *beta),
            AdaptiveRule::ConstantRateAis { delta } => ("delta", *delta),
            AdaptiveRule::Fixed { .. } => return Ok(()),
        };
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::invalid(format!("{name} must be positive, got {value}")));
        }
        Ok(())
    }
}

/// The chosen temperature and whether bisection had to fall back to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaChoice {
    pub lambda: f64,
    pub bracket_fallback: bool,
}

const BISECTION_MAX_ITER: usize = 100;
const BISECTION_TOL: f64 = 1e-10;

/// Next temperature in `(cloud.lambda, 1]` according to `rule`.
pub fn next_lambda<P: LogDensityPair + ?Sized>(
    pair: &P,
    cloud: &ParticleCloud,
    rule: &AdaptiveRule,
) -> Result<LambdaChoice> {
    next_lambda_from_scores(&scores(pair, cloud)?, cloud.lambda(), rule)
}

pub(crate) fn next_lambda_from_scores(scores: &[f64], lambda: f64, rule: &AdaptiveRule) -> Result<LambdaChoice> {
    rule.validate()?;
    if lambda >= 1.0 {
        return Err(Error::invalid("cloud is already at lambda = 1"));
    }
    let n = scores.len() as f64;
    let weights_at = |next: f64| -> Vec<f64> { scores.iter().map(|s| (next - lambda) * s).collect() };

    let choice = match rule {
        AdaptiveRule::EssBisection { beta } => {
            let target = n / (beta + 1.0);
            bisect(lambda, |next| {
                // ESS decreases in the step: f > 0 means the step is still too small.
                ess_from_log_weights(&weights_at(next)).map(|e| e - target)
            })?
        }
        AdaptiveRule::KlConstant { kappa } => bisect(lambda, |next| {
            let lw = weights_at(next);
            Ok(kappa - kl_estimate(&lw))
        })?,
        AdaptiveRule::FisherStep { beta } => {
            let info = score_variance(scores)?;
            LambdaChoice {
                lambda: (lambda + (beta / info).sqrt()).min(1.0),
                bracket_fallback: false,
            }
        }
        AdaptiveRule::ConstantRateAis { delta } => {
            let info = score_variance(scores)?;
            LambdaChoice {
                lambda: (lambda + delta / ((1.0 - lambda) * info)).min(1.0),
                bracket_fallback: false,
            }
        }
        AdaptiveRule::Fixed { schedule } => {
            let next = schedule.lambdas().iter().copied().find(|&l| l > lambda).unwrap_or(1.0);
            LambdaChoice {
                lambda: next,
                bracket_fallback: false,
            }
        }
    };
    if !(choice.lambda > lambda) {
        return Err(Error::Numeric(format!(
            "temperature increment underflowed at lambda = {lambda}"
        )));
    }
    Ok(choice)
}

/// `-mean(log w) + log mean(w)`, non-negative by Jensen.
pub(crate) fn kl_estimate(log_weights: &[f64]) -> f64 {
    let m = mean(log_weights);
    let centered: Vec<f64> = log_weights.iter().map(|lw| lw - m).collect();
    log_mean_exp(&centered)
}

fn score_variance(scores: &[f64]) -> Result<f64> {
    let v = population_variance(scores);
    if !(v > 0.0) {
        return Err(Error::DegenerateScore);
    }
    Ok(v)
}

/// Solves `f(next) = 0` on `(lambda, 1]` for an `f` that is positive for
/// small steps and decreases. Returns 1 when `f(1) >= 0`.
fn bisect<F>(lambda: f64, f: F) -> Result<LambdaChoice>
where
    F: Fn(f64) -> Result<f64>,
{
    let at_one = f(1.0)?;
    if at_one >= 0.0 {
        return Ok(LambdaChoice {
            lambda: 1.0,
            bracket_fallback: false,
        });
    }
    let at_lo = f(lambda)?;
    if !(at_lo >= 0.0) || at_one.is_nan() {
        warn!("bisection bracket failed at lambda = {lambda}; jumping to 1");
        return Ok(LambdaChoice {
            lambda: 1.0,
            bracket_fallback: true,
        });
    }
    let (mut lo, mut hi) = (lambda, 1.0);
    for _ in 0..BISECTION_MAX_ITER {
        if hi - lo <= BISECTION_TOL {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let v = f(mid)?;
        if v.is_nan() {
            warn!("bisection hit a NaN at lambda = {mid}; jumping to 1");
            return Ok(LambdaChoice {
                lambda: 1.0,
                bracket_fallback: true,
            });
        }
        if v >= 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(LambdaChoice {
        lambda: 0.5 * (lo + hi),
        bracket_fallback: false,
    })
}
