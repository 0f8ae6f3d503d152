use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::normalized_weights;

use super::cloud::ParticleCloud;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResamplingMethod {
    /// Independent draws from the weighted empirical measure.
    Multinomial,
    /// One uniform shared by `n_out` evenly spaced points.
    #[default]
    Systematic,
}

/// Ancestor indices drawn according to the normalized `log_weights`.
pub fn resample_indices(
    log_weights: &[f64],
    n_out: usize,
    rng: &mut dyn RngCore,
    method: ResamplingMethod,
) -> Result<Vec<usize>> {
    let w = normalized_weights(log_weights)?;
    let mut cumulative = Vec::with_capacity(w.len());
    let mut acc = 0.0;
    for wi in &w {
        acc += wi;
        cumulative.push(acc);
    }
    let total = acc;
    // First index whose cumulative weight exceeds u; zero-weight particles
    // share their cumulative value with a predecessor and are never picked.
    let locate = |u: f64| -> usize {
        let i = cumulative.partition_point(|&c| c <= u);
        i.min(w.len() - 1)
    };
    let mut out = Vec::with_capacity(n_out);
    match method {
        ResamplingMethod::Multinomial => {
            for _ in 0..n_out {
                out.push(locate(rng.random::<f64>() * total));
            }
        }
        ResamplingMethod::Systematic => {
            let u0: f64 = rng.random();
            let step = total / n_out as f64;
            for k in 0..n_out {
                out.push(locate((k as f64 + u0) * step));
            }
        }
    }
    if out.iter().any(|&i| w[i] == 0.0) {
        return Err(Error::DegenerateCloud);
    }
    Ok(out)
}

/// `N` equally weighted particles drawn from `cloud`.
pub fn resample(cloud: &ParticleCloud, rng: &mut dyn RngCore, method: ResamplingMethod) -> Result<ParticleCloud> {
    let idx = resample_indices(cloud.log_weights(), cloud.len(), rng, method)?;
    let mut positions = Vec::with_capacity(cloud.positions().len());
    for i in idx {
        positions.extend_from_slice(cloud.particle(i));
    }
    ParticleCloud::equally_weighted(cloud.dim(), positions, cloud.lambda())
}
