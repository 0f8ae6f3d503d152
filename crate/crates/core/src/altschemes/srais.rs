use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::LogDensityPair;
use crate::numeric::{ess_from_log_weights, normalized_weights};
use crate::rng::{Purpose, StreamRng};
use crate::schedule::StepSizes;
use crate::smc::{ParticleCloud, RunResult, Scheme};

use super::kde::KdeMixture;
use super::pmd::{renormalize, KdeOptions};

/// Step-size choice for [`run_srais`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaRule {
    /// One step size per batch.
    Fixed(StepSizes),
    /// `1 - KL(P | Q) / log m` from the current batch, see [`renyi_gamma`].
    Renyi,
}

/// Step size from the raw log importance ratios of one batch of `m` draws:
/// `clamp(1 - KL(P | Q) / log m, 0, 1)` with `P` the self-normalized weights
/// and `Q` uniform, so `KL(P | Q) = sum_l w_l log(m w_l)`.
///
/// The flag reports whether the unclamped value fell outside `[0, 1]`.
pub fn renyi_gamma(log_ratios: &[f64]) -> Result<(f64, bool)> {
    let m = log_ratios.len();
    if m < 2 {
        return Err(Error::invalid("the Renyi rule needs batches of at least 2 draws"));
    }
    let w = normalized_weights(log_ratios)?;
    if log_ratios.iter().all(|&r| r == log_ratios[0]) {
        return Ok((1.0, false));
    }
    let log_m = (m as f64).ln();
    let kl: f64 = w
        .iter()
        .filter(|&&wi| wi > 0.0)
        .map(|wi| wi * (m as f64 * wi).ln())
        .sum();
    let raw = 1.0 - kl / log_m;
    let out_of_range = !(-1e-12..=1.0 + 1e-12).contains(&raw);
    Ok((raw.clamp(0.0, 1.0), out_of_range))
}

/// Adaptive importance sampling with a growing KDE proposal.
///
/// Batch `n` draws `m_n` points from the KDE `q_{n-1}` built on every
/// earlier point (the first batch comes from `mu0`), weights them by
/// `(pi / q_{n-1})^gamma_n` and adds them to the pool. Mixture weights are
/// normalized over the whole pool; each batch brings its own Silverman
/// bandwidth. The final cloud is the whole pool.
pub fn run_srais<P: LogDensityPair + ?Sized>(
    pair: &P,
    batch_sizes: &[usize],
    seed: u64,
    gamma_rule: &GammaRule,
    options: &KdeOptions,
) -> Result<RunResult> {
    if batch_sizes.is_empty() || batch_sizes.contains(&0) {
        return Err(Error::invalid("batch sizes must be positive"));
    }
    if let GammaRule::Fixed(g) = gamma_rule {
        if g.len() != batch_sizes.len() {
            return Err(Error::invalid(format!(
                "{} step sizes given for {} batches",
                g.len(),
                batch_sizes.len()
            )));
        }
    } else if batch_sizes.iter().any(|&m| m < 2) {
        return Err(Error::invalid("the Renyi rule needs batches of at least 2 draws"));
    }
    let streams = StreamRng::new(seed);
    let d = pair.dim();
    let mut pool: Vec<f64> = Vec::new();
    let mut pool_log_w: Vec<f64> = Vec::new();
    let mut pool_h: Vec<f64> = Vec::new();
    let mut proposal: Option<KdeMixture> = None;
    let mut result = RunResult {
        scheme: Scheme::Srais,
        lambdas: vec![0.0],
        step_sizes: Vec::new(),
        ess_trace: Vec::new(),
        acceptance_trace: Vec::new(),
        log_z_estimate: None,
        final_cloud: ParticleCloud::equally_weighted(d, vec![0.0; d], 0.0)?,
        n_steps: 0,
        rule_used: None,
        kde: None,
        warnings: Vec::new(),
        weight_evaluations: 0,
    };
    let mut lambda = 0.0;

    for (step, &m) in batch_sizes.iter().enumerate().map(|(i, m)| (i + 1, m)) {
        let batch: Vec<f64> = (0..m)
            .into_par_iter()
            .flat_map_iter(|i| {
                let mut rng = streams.particle(Purpose::Component, step, i);
                match &proposal {
                    Some(q) => q.sample(&mut rng),
                    None => pair.sample_mu0(&mut rng),
                }
            })
            .collect();
        if batch.len() != m * d {
            return Err(Error::DimensionMismatch {
                expected: m * d,
                got: batch.len() / m.max(1),
            });
        }
        let log_ratio: Vec<f64> = match (&proposal, options.fast_weights) {
            (Some(q), false) => {
                result.weight_evaluations += (m * q.len()) as u64;
                let lq = q.logpdf_many(&batch);
                batch
                    .par_chunks_exact(d)
                    .zip(lq.par_iter())
                    .map(|(x, lq)| pair.log_target(x) - lq)
                    .collect()
            }
            _ => {
                result.weight_evaluations += m as u64;
                batch
                    .par_chunks_exact(d)
                    .map(|x| pair.log_target(x) - pair.log_mu0(x))
                    .collect()
            }
        };
        if log_ratio.iter().any(|r| r.is_nan() || *r == f64::INFINITY) {
            return Err(Error::DegenerateCloud);
        }

        let gamma = match gamma_rule {
            GammaRule::Fixed(g) => g.gammas()[step - 1],
            GammaRule::Renyi => {
                let (g, flagged) = renyi_gamma(&log_ratio)?;
                if flagged {
                    warn!("step {step}: Renyi step size fell outside [0, 1] before clamping");
                    result
                        .warnings
                        .push(format!("step {step}: Renyi step size clamped to {g}"));
                }
                g
            }
        };
        let log_u: Vec<f64> = if options.fast_weights {
            let step = gamma * (1.0 - lambda);
            log_ratio.iter().map(|r| step * r).collect()
        } else {
            log_ratio.iter().map(|r| gamma * r).collect()
        };
        let ess = ess_from_log_weights(&log_u)?;
        let batch_w = normalized_weights(&log_u)?;
        let h = options.bandwidth_for(d, &batch, &batch_w)?;

        pool.extend_from_slice(&batch);
        pool_log_w.extend_from_slice(&log_u);
        pool_h.extend(std::iter::repeat_n(h, m));
        proposal = Some(KdeMixture::from_log_weights(
            d,
            pool.clone(),
            &pool_log_w,
            pool_h.clone(),
        )?);

        lambda += gamma * (1.0 - lambda);
        result.lambdas.push(lambda);
        result.step_sizes.push(gamma);
        result.ess_trace.push(ess);
        result.acceptance_trace.push(1.0);
        result.n_steps = step;
    }

    let q = proposal.expect("at least one batch");
    result.kde = Some(KdeMixture::new(
        d,
        pool.clone(),
        renormalize(q.weights().to_vec()),
        pool_h,
    )?);
    result.final_cloud = ParticleCloud::new(d, pool, pool_log_w, lambda.clamp(0.0, 1.0))?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianPair;

    #[test]
    fn renyi_endpoints() {
        let (g, flagged) = renyi_gamma(&[0.3; 50]).unwrap();
        assert_eq!(g, 1.0);
        assert!(!flagged);
        let mut lw = vec![f64::NEG_INFINITY; 50];
        lw[7] = 0.0;
        let (g, _) = renyi_gamma(&lw).unwrap();
        assert!(g.abs() < 1e-12, "gamma {g}");
        assert!(renyi_gamma(&[0.0]).is_err());
    }

    #[test]
    fn renyi_rule_recovers_target_mean() {
        let pair = GaussianPair::isotropic(1, 1.0, 1.0).unwrap();
        let r = run_srais(&pair, &[500; 20], 4, &GammaRule::Renyi, &KdeOptions::default()).unwrap();
        let (m, _) = r.final_cloud.weighted_moments().unwrap();
        assert!((m[0] - 1.0).abs() <= 0.1, "mean {}", m[0]);
        assert!(r.step_sizes.iter().all(|g| (0.0..=1.0).contains(g)));
        assert_eq!(r.final_cloud.len(), 500 * 20);
    }

    #[test]
    fn cost_grows_with_pool() {
        let pair = GaussianPair::isotropic(1, 1.0, 1.0).unwrap();
        let g = StepSizes::constant(0.5, 4).unwrap();
        let r = run_srais(&pair, &[50; 4], 5, &GammaRule::Fixed(g), &KdeOptions::default()).unwrap();
        // batch n evaluates a KDE over 50 (n - 1) centers at 50 points
        assert_eq!(r.weight_evaluations, 50 + 50 * 50 + 50 * 100 + 50 * 150);
    }

    #[test]
    fn fixed_rule_length_must_match() {
        let pair = GaussianPair::isotropic(1, 1.0, 1.0).unwrap();
        let g = StepSizes::constant(0.5, 3).unwrap();
        assert!(run_srais(&pair, &[10; 4], 1, &GammaRule::Fixed(g), &KdeOptions::default()).is_err());
    }
}
