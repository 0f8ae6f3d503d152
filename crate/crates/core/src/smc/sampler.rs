use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::altschemes::KdeMixture;
use crate::error::{Error, Result};
use crate::model::LogDensityPair;
use crate::numeric::{ess_from_log_weights, log_mean_exp};
use crate::rng::{Purpose, StreamRng};
use crate::schedule::Schedule;

use super::cloud::{scores, ParticleCloud};
use super::kernel::{rwm_move, KernelConfig};
use super::resample::{resample, ResamplingMethod};
use super::rules::{next_lambda_from_scores, AdaptiveRule};

/// Which sampler produced a [`RunResult`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    #[default]
    Smc,
    Pmd,
    Srais,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmcSettings {
    pub rule: AdaptiveRule,
    pub n_particles: usize,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub resampling: ResamplingMethod,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    10_000
}

impl SmcSettings {
    pub fn new(rule: AdaptiveRule, n_particles: usize) -> Self {
        Self {
            rule,
            n_particles,
            kernel: KernelConfig::default(),
            resampling: ResamplingMethod::default(),
            max_steps: default_max_steps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rule.validate()?;
        self.kernel.validate()?;
        if self.n_particles < 2 {
            return Err(Error::invalid("n_particles must be at least 2"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be at least 1"));
        }
        Ok(())
    }
}

/// Everything recorded during one sampler run.
///
/// `lambdas` starts at 0 and has one more entry than the per-step traces.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub scheme: Scheme,
    pub lambdas: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub ess_trace: Vec<f64>,
    pub acceptance_trace: Vec<f64>,
    /// Sum over steps of the log mean incremental weight. Only the SMC
    /// sampler produces one.
    pub log_z_estimate: Option<f64>,
    pub final_cloud: ParticleCloud,
    pub n_steps: usize,
    pub rule_used: Option<AdaptiveRule>,
    /// Final proposal mixture of the KDE-based schemes.
    pub kde: Option<KdeMixture>,
    pub warnings: Vec<String>,
    /// Number of kernel or density evaluations spent on importance weights.
    pub weight_evaluations: u64,
}

impl RunResult {
    pub fn schedule_lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// The realized schedule; fails if the run stopped before reaching 1.
    pub fn schedule(&self) -> Result<Schedule> {
        Schedule::new(self.lambdas.clone())
    }

    pub fn summary(&self) -> Result<RunSummary> {
        let (posterior_mean, posterior_var) = self.final_cloud.weighted_moments()?;
        Ok(RunSummary {
            scheme: self.scheme,
            n_steps: self.n_steps,
            n_particles: self.final_cloud.len(),
            lambdas: self.lambdas.clone(),
            step_sizes: self.step_sizes.clone(),
            ess_trace: self.ess_trace.clone(),
            acceptance_trace: self.acceptance_trace.clone(),
            log_z_estimate: self.log_z_estimate,
            posterior_mean,
            posterior_var,
            final_ess: self.final_cloud.ess()?,
            rule: self.rule_used.clone(),
            weight_evaluations: self.weight_evaluations,
            warnings: self.warnings.clone(),
        })
    }
}

/// Serializable digest of a [`RunResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scheme: Scheme,
    pub n_steps: usize,
    pub n_particles: usize,
    pub lambdas: Vec<f64>,
    pub step_sizes: Vec<f64>,
    pub ess_trace: Vec<f64>,
    pub acceptance_trace: Vec<f64>,
    pub log_z_estimate: Option<f64>,
    pub posterior_mean: Vec<f64>,
    pub posterior_var: Vec<f64>,
    pub final_ess: f64,
    pub rule: Option<AdaptiveRule>,
    pub weight_evaluations: u64,
    pub warnings: Vec<String>,
}

/// `N` equally weighted exact draws from `mu0`, one `Init` stream per particle.
pub fn initial_cloud<P: LogDensityPair + ?Sized>(
    pair: &P,
    n_particles: usize,
    streams: &StreamRng,
) -> Result<ParticleCloud> {
    let d = pair.dim();
    let mut positions = Vec::with_capacity(n_particles * d);
    for i in 0..n_particles {
        let x = pair.sample_mu0(&mut streams.particle(Purpose::Init, 0, i));
        if x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: x.len(),
            });
        }
        positions.extend(x);
    }
    ParticleCloud::equally_weighted(d, positions, 0.0)
}

/// Adaptive tempered SMC.
///
/// Each step resamples the current weighted cloud (skipped at the first
/// step), picks the next temperature from the resampled particles, weights
/// them by `(pi / mu0)^(lambda_n - lambda_{n-1})`, and moves them with a
/// `mu_{lambda_n}`-invariant random-walk Metropolis kernel. The final cloud is
/// the weighted output of the last step.
pub fn run_smc<P: LogDensityPair + ?Sized>(pair: &P, settings: &SmcSettings, seed: u64) -> Result<RunResult> {
    settings.validate()?;
    let streams = StreamRng::new(seed);
    let mut cloud = initial_cloud(pair, settings.n_particles, &streams)?;
    let mut result = RunResult {
        scheme: Scheme::Smc,
        lambdas: vec![0.0],
        step_sizes: Vec::new(),
        ess_trace: Vec::new(),
        acceptance_trace: Vec::new(),
        log_z_estimate: Some(0.0),
        final_cloud: cloud.clone(),
        n_steps: 0,
        rule_used: Some(settings.rule.clone()),
        kde: None,
        warnings: Vec::new(),
        weight_evaluations: 0,
    };
    let mut log_z = 0.0;

    for step in 1..=settings.max_steps {
        if step > 1 {
            let mut rng = streams.run_level(Purpose::Resample, step);
            cloud = resample(&cloud, &mut rng, settings.resampling)?;
        }
        let lambda = cloud.lambda();
        let s = scores(pair, &cloud)?;
        result.weight_evaluations += s.len() as u64;
        let choice = next_lambda_from_scores(&s, lambda, &settings.rule)?;
        if choice.bracket_fallback {
            result
                .warnings
                .push(format!("step {step}: bisection bracket failed, jumped to lambda = 1"));
        }
        let next = choice.lambda;
        let log_w: Vec<f64> = s.iter().map(|v| (next - lambda) * v).collect();
        let ess = ess_from_log_weights(&log_w)?;
        log_z += log_mean_exp(&log_w);

        let moved = rwm_move(pair, &cloud, next, &settings.kernel, &streams, step)?;
        if moved.std_floored {
            warn!("step {step}: particle spread collapsed in some coordinate");
            result.warnings.push(format!("step {step}: proposal std hit the floor"));
        }
        cloud = moved.cloud.with_lambda(next).with_log_weights(log_w)?;
        debug!(
            "step {step}: lambda = {next:.6}, ess = {ess:.1}, acceptance = {:.3}",
            moved.acceptance_rate
        );

        result.step_sizes.push(if lambda < 1.0 {
            (next - lambda) / (1.0 - lambda)
        } else {
            1.0
        });
        result.lambdas.push(next);
        result.ess_trace.push(ess);
        result.acceptance_trace.push(moved.acceptance_rate);
        result.n_steps = step;
        if next >= 1.0 {
            break;
        }
    }

    result.log_z_estimate = Some(log_z);
    result.final_cloud = cloud;
    if result.lambdas.last().copied() != Some(1.0) {
        return Err(Error::BudgetExceeded {
            partial: Box::new(result),
        });
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianPair;

    #[test]
    fn identical_pair_finishes_in_one_step() {
        let pair = GaussianPair::isotropic(2, 0.0, 1.0).unwrap();
        let r = run_smc(
            &pair,
            &SmcSettings::new(AdaptiveRule::EssBisection { beta: 1.0 }, 500),
            1,
        )
        .unwrap();
        assert_eq!(r.lambdas, vec![0.0, 1.0]);
        assert_eq!(r.log_z_estimate, Some(0.0));
        assert_eq!(r.n_steps, 1);
        assert_eq!(r.ess_trace.len(), 1);
    }

    #[test]
    fn realized_schedule_is_valid() {
        let pair = GaussianPair::isotropic(3, 1.0, 0.1).unwrap();
        let r = run_smc(
            &pair,
            &SmcSettings::new(AdaptiveRule::EssBisection { beta: 1.0 }, 1000),
            2,
        )
        .unwrap();
        let s = r.schedule().unwrap();
        assert_eq!(s.n_steps(), r.n_steps);
        assert_eq!(r.acceptance_trace.len(), r.n_steps);
        let g = s.gammas();
        for (a, b) in g.gammas().iter().zip(&r.step_sizes) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn budget_error_carries_partial_run() {
        let pair = GaussianPair::isotropic(2, 1.0, 0.01).unwrap();
        let mut settings = SmcSettings::new(AdaptiveRule::EssBisection { beta: 0.1 }, 200);
        settings.max_steps = 2;
        match run_smc(&pair, &settings, 3) {
            Err(Error::BudgetExceeded { partial }) => {
                assert_eq!(partial.n_steps, 2);
                assert_eq!(partial.lambdas.len(), 3);
                assert!(partial.lambdas[2] < 1.0);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn deterministic_for_a_seed() {
        let pair = GaussianPair::isotropic(2, 1.0, 0.2).unwrap();
        let settings = SmcSettings::new(AdaptiveRule::KlConstant { kappa: 0.5 }, 300);
        let a = run_smc(&pair, &settings, 9).unwrap();
        let b = run_smc(&pair, &settings, 9).unwrap();
        assert_eq!(a.lambdas, b.lambdas);
        assert_eq!(a.final_cloud, b.final_cloud);
        let c = run_smc(&pair, &settings, 10).unwrap();
        assert_ne!(a.final_cloud, c.final_cloud);
    }
}
