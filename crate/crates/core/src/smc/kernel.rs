use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_lambda, LogDensityPair};
use crate::rng::{Purpose, StreamRng};

use super::cloud::ParticleCloud;

/// Random-walk Metropolis settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelConfig {
    pub n_mh_steps: usize,
    /// Multiplier on the calibrated proposal std `2.38 / sqrt(d) * sd`.
    pub scale_factor: f64,
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            n_mh_steps: 5,
            scale_factor: 1.0,
        }
    }
}

impl KernelConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_mh_steps == 0 {
            return Err(Error::invalid("n_mh_steps must be at least 1"));
        }
        if !(self.scale_factor > 0.0 && self.scale_factor.is_finite()) {
            return Err(Error::invalid("scale_factor must be positive"));
        }
        Ok(())
    }
}

const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct MoveOutcome {
    pub cloud: ParticleCloud,
    /// Accepted proposals over all proposals.
    pub acceptance_rate: f64,
    /// Some coordinate had zero spread and used the floor std.
    pub std_floored: bool,
}

/// Moves every particle with `n_mh_steps` Metropolis steps targeting
/// `mu_lambda`. The proposal std is calibrated once from the input cloud.
///
/// Particle `i` draws from the `(Move, iteration, i)` stream, so the result
/// does not depend on the thread count.
pub fn rwm_move<P: LogDensityPair + ?Sized>(
    pair: &P,
    cloud: &ParticleCloud,
    lambda: f64,
    config: &KernelConfig,
    streams: &StreamRng,
    iteration: usize,
) -> Result<MoveOutcome> {
    config.validate()?;
    check_lambda(lambda)?;
    if pair.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            got: cloud.dim(),
        });
    }
    let d = cloud.dim();
    let n = cloud.len() as f64;
    let mut mean = vec![0.0; d];
    for x in cloud.particles() {
        for (m, xi) in mean.iter_mut().zip(x) {
            *m += xi / n;
        }
    }
    let mut var = vec![0.0; d];
    for x in cloud.particles() {
        for ((v, m), xi) in var.iter_mut().zip(&mean).zip(x) {
            *v += (xi - m) * (xi - m) / n;
        }
    }
    let mut std_floored = false;
    let base = config.scale_factor * 2.38 / (d as f64).sqrt();
    let step: Vec<f64> = var
        .iter()
        .map(|v| {
            let sd = v.sqrt();
            if sd > STD_FLOOR {
                base * sd
            } else {
                std_floored = true;
                base * STD_FLOOR
            }
        })
        .collect();

    let mut out = cloud.clone();
    let accepted: Vec<usize> = out
        .positions_mut()
        .par_chunks_exact_mut(d)
        .enumerate()
        .map(|(i, x)| {
            let mut rng = streams.particle(Purpose::Move, iteration, i);
            let mut current = pair.tempered_unchecked(lambda, x);
            let mut proposal = vec![0.0; d];
            let mut accepted = 0;
            for _ in 0..config.n_mh_steps {
                for ((p, xi), s) in proposal.iter_mut().zip(x.iter()).zip(&step) {
                    let z: f64 = rng.sample(StandardNormal);
                    *p = xi + s * z;
                }
                let candidate = pair.tempered_unchecked(lambda, &proposal);
                let log_u: f64 = rng.random::<f64>().ln();
                if log_u < candidate - current {
                    x.copy_from_slice(&proposal);
                    current = candidate;
                    accepted += 1;
                }
            }
            accepted
        })
        .collect();
    let total: usize = accepted.iter().sum();
    let acceptance_rate = total as f64 / (cloud.len() * config.n_mh_steps) as f64;
    Ok(MoveOutcome {
        cloud: out,
        acceptance_rate,
        std_floored,
    })
}
