use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LogDensityPair;
use crate::numeric::ess_from_log_weights;
use crate::rng::{Purpose, StreamRng};
use crate::schedule::StepSizes;
use crate::smc::{initial_cloud, resample, ParticleCloud, ResamplingMethod, RunResult, Scheme};

use super::kde::{silverman_bandwidth, KdeMixture};

/// Settings shared by the KDE-based schemes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KdeOptions {
    /// Fixed kernel bandwidth; Silverman's rule when absent.
    pub bandwidth: Option<f64>,
    /// Use the tempering weights `(pi / mu0)^(lambda_n - lambda_{n-1})` in
    /// place of the KDE ratio. Cheaper, but no longer targets the smoothed
    /// iterates.
    pub fast_weights: bool,
    pub resampling: ResamplingMethod,
}

impl KdeOptions {
    pub(crate) fn bandwidth_for(&self, dim: usize, positions: &[f64], weights: &[f64]) -> Result<f64> {
        match self.bandwidth {
            Some(h) if h > 0.0 && h.is_finite() => Ok(h),
            Some(h) => Err(Error::invalid(format!("bandwidth must be positive, got {h}"))),
            None => silverman_bandwidth(dim, positions, weights),
        }
    }
}

/// Particle mirror descent with a fixed sequence of step sizes.
///
/// Step `n` resamples the weighted cloud, jitters every particle with a
/// Gaussian kernel of bandwidth `h_n`, and weights the jittered points by
/// `(pi / q_{n-1})^gamma_n`, where `q_{n-1}` is the previous weighted cloud
/// smoothed with the same kernel (the exact density of the jittered points).
/// At the first step that density is `mu0` smoothed by `h_1`, taken from
/// [`LogDensityPair::log_mu0_smoothed`].
pub fn run_pmd<P: LogDensityPair + ?Sized>(
    pair: &P,
    n_particles: usize,
    gammas: &StepSizes,
    seed: u64,
    options: &KdeOptions,
) -> Result<RunResult> {
    if n_particles < 2 {
        return Err(Error::invalid("n_particles must be at least 2"));
    }
    if gammas.is_empty() {
        return Err(Error::invalid("at least one step size is required"));
    }
    let streams = StreamRng::new(seed);
    let d = pair.dim();
    let mut cloud = initial_cloud(pair, n_particles, &streams)?;
    let lambdas = gammas.cumulative_lambdas();
    let mut result = RunResult {
        scheme: Scheme::Pmd,
        lambdas: vec![0.0],
        step_sizes: Vec::new(),
        ess_trace: Vec::new(),
        acceptance_trace: Vec::new(),
        log_z_estimate: None,
        final_cloud: cloud.clone(),
        n_steps: 0,
        rule_used: None,
        kde: None,
        warnings: Vec::new(),
        weight_evaluations: 0,
    };
    let mut h = 0.0;

    for (step, &gamma) in gammas.gammas().iter().enumerate().map(|(i, g)| (i + 1, g)) {
        let previous = cloud.clone();
        if step > 1 {
            let mut rng = streams.run_level(Purpose::Resample, step);
            cloud = resample(&cloud, &mut rng, options.resampling)?;
        }
        let uniform = vec![1.0 / n_particles as f64; n_particles];
        h = options.bandwidth_for(d, cloud.positions(), &uniform)?;

        let mut jittered = cloud.positions().to_vec();
        jittered.par_chunks_exact_mut(d).enumerate().for_each(|(i, x)| {
            let mut rng = streams.particle(Purpose::Jitter, step, i);
            for xi in x.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *xi += h * z;
            }
        });

        let lambda_prev = lambdas[step - 1];
        let lambda = lambdas[step];
        let log_w: Vec<f64> = if options.fast_weights {
            result.weight_evaluations += n_particles as u64;
            jittered
                .par_chunks_exact(d)
                .map(|x| (lambda - lambda_prev) * (pair.log_target(x) - pair.log_mu0(x)))
                .collect()
        } else if step == 1 {
            result.weight_evaluations += n_particles as u64;
            jittered
                .par_chunks_exact(d)
                .map(|x| gamma * (pair.log_target(x) - pair.log_mu0_smoothed(x, h)))
                .collect()
        } else {
            let q = KdeMixture::from_log_weights(
                d,
                previous.positions().to_vec(),
                previous.log_weights(),
                vec![h; n_particles],
            )?;
            result.weight_evaluations += (n_particles * q.len()) as u64;
            let log_q = q.logpdf_many(&jittered);
            jittered
                .par_chunks_exact(d)
                .zip(log_q.par_iter())
                .map(|(x, lq)| gamma * (pair.log_target(x) - lq))
                .collect()
        };
        if log_w.iter().any(|w| w.is_nan() || *w == f64::INFINITY) {
            return Err(Error::DegenerateCloud);
        }
        let ess = ess_from_log_weights(&log_w)?;
        cloud = ParticleCloud::new(d, jittered, log_w, lambda.min(1.0))?;

        result.lambdas.push(lambda);
        result.step_sizes.push(gamma);
        result.ess_trace.push(ess);
        result.acceptance_trace.push(1.0);
        result.n_steps = step;
    }

    let w = cloud.normalized_weights()?;
    result.kde = Some(KdeMixture::new(
        d,
        cloud.positions().to_vec(),
        renormalize(w),
        vec![h; n_particles],
    )?);
    result.final_cloud = cloud;
    Ok(result)
}

// Guards the 1e-12 sum check against accumulated rounding.
pub(crate) fn renormalize(mut w: Vec<f64>) -> Vec<f64> {
    let total: f64 = w.iter().sum();
    for wi in &mut w {
        *wi /= total;
    }
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianPair;

    #[test]
    fn recovers_target_mean() {
        let pair = GaussianPair::isotropic(1, 1.0, 1.0).unwrap();
        let gammas = StepSizes::constant(0.5, 10).unwrap();
        let r = run_pmd(&pair, 2000, &gammas, 1, &KdeOptions::default()).unwrap();
        let (m, _) = r.final_cloud.weighted_moments().unwrap();
        assert!((m[0] - 1.0).abs() <= 0.1, "mean {}", m[0]);
        assert_eq!(r.n_steps, 10);
        assert!(r.kde.is_some());
        assert!(r.log_z_estimate.is_none());
    }

    #[test]
    fn one_step_is_importance_sampling_from_smoothed_mu0() {
        let pair = GaussianPair::isotropic(1, 1.0, 1.0).unwrap();
        let gammas = StepSizes::new(vec![1.0]).unwrap();
        let opts = KdeOptions {
            bandwidth: Some(0.2),
            ..KdeOptions::default()
        };
        let r = run_pmd(&pair, 500, &gammas, 2, &opts).unwrap();
        assert_eq!(r.lambdas, vec![0.0, 1.0]);
        for (x, lw) in r.final_cloud.particles().zip(r.final_cloud.log_weights()) {
            let expected = pair.log_target(x) - pair.log_mu0_smoothed(x, 0.2);
            assert!((lw - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn weight_cost_is_quadratic() {
        let pair = GaussianPair::isotropic(1, 1.0, 1.0).unwrap();
        let gammas = StepSizes::constant(0.5, 3).unwrap();
        let cost = |n| {
            run_pmd(&pair, n, &gammas, 3, &KdeOptions::default())
                .unwrap()
                .weight_evaluations
        };
        // one cheap first step, then N^2 per step
        assert_eq!(cost(100), 100 + 2 * 100 * 100);
        assert_eq!(cost(400), 400 + 2 * 400 * 400);
        let fast = KdeOptions {
            fast_weights: true,
            ..KdeOptions::default()
        };
        assert_eq!(
            run_pmd(&pair, 400, &gammas, 3, &fast).unwrap().weight_evaluations,
            3 * 400
        );
    }
}
