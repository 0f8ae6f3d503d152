use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{check_lambda, LogDensityPair};
use crate::numeric::{ess_from_log_weights, normalized_weights};

/// `N` weighted particles in `R^d` at temperature `lambda`.
///
/// Positions are stored row-major, one particle per row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleCloud {
    dim: usize,
    positions: Vec<f64>,
    log_weights: Vec<f64>,
    lambda: f64,
}

impl ParticleCloud {
    pub fn new(dim: usize, positions: Vec<f64>, log_weights: Vec<f64>, lambda: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        if positions.len() != dim * log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: dim * log_weights.len(),
                got: positions.len(),
            });
        }
        if log_weights.is_empty() {
            return Err(Error::invalid("cloud must hold at least one particle"));
        }
        if positions.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("particle positions must be finite"));
        }
        check_lambda(lambda)?;
        Ok(Self {
            dim,
            positions,
            log_weights,
            lambda,
        })
    }

    /// Equally weighted cloud (all log-weights zero).
    pub fn equally_weighted(dim: usize, positions: Vec<f64>, lambda: f64) -> Result<Self> {
        let n = positions.len().checked_div(dim).unwrap_or(0);
        Self::new(dim, positions, vec![0.0; n], lambda)
    }

    /// Builds an equally weighted cloud from one vector per particle.
    pub fn from_rows(rows: &[Vec<f64>], lambda: f64) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("all particles must have the same dimension"));
        }
        Self::equally_weighted(dim, rows.concat(), lambda)
    }

    pub fn len(&self) -> usize {
        self.log_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn particle(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }

    pub fn particles(&self) -> std::slice::ChunksExact<'_, f64> {
        self.positions.chunks_exact(self.dim)
    }

    pub fn normalized_weights(&self) -> Result<Vec<f64>> {
        normalized_weights(&self.log_weights)
    }

    pub fn ess(&self) -> Result<f64> {
        ess(self)
    }

    /// Replaces the log-weights, keeping positions and temperature.
    pub fn with_log_weights(mut self, log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: log_weights.len(),
            });
        }
        self.log_weights = log_weights;
        Ok(self)
    }

    pub(crate) fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub(crate) fn positions_mut(&mut self) -> &mut [f64] {
        &mut self.positions
    }

    /// Weighted per-coordinate mean and (population) variance.
    pub fn weighted_moments(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let w = self.normalized_weights()?;
        let d = self.dim;
        let mut mean = vec![0.0; d];
        for (wi, x) in w.iter().zip(self.particles()) {
            for (m, xj) in mean.iter_mut().zip(x) {
                *m += wi * xj;
            }
        }
        let mut var = vec![0.0; d];
        for (wi, x) in w.iter().zip(self.particles()) {
            for ((v, m), xj) in var.iter_mut().zip(&mean).zip(x) {
                *v += wi * (xj - m) * (xj - m);
            }
        }
        Ok((mean, var))
    }
}

/// Effective sample size `(sum w)^2 / sum w^2`, in `[1, N]`.
pub fn ess(cloud: &ParticleCloud) -> Result<f64> {
    ess_from_log_weights(&cloud.log_weights)
}

/// `s(X^i)` for every particle, evaluated in parallel.
pub fn scores<P: LogDensityPair + ?Sized>(pair: &P, cloud: &ParticleCloud) -> Result<Vec<f64>> {
    if pair.dim() != cloud.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.dim(),
            got: cloud.dim(),
        });
    }
    Ok(cloud
        .positions
        .par_chunks_exact(cloud.dim)
        .map(|x| pair.log_target(x) - pair.log_mu0(x))
        .collect())
}

/// `(lambda_new - lambda) * s(X^i)`: the log of the tempering weight
/// `(pi / mu0)^(lambda_new - lambda)`.
pub fn incremental_log_weights<P: LogDensityPair + ?Sized>(
    pair: &P,
    cloud: &ParticleCloud,
    lambda_new: f64,
) -> Result<Vec<f64>> {
    check_lambda(lambda_new)?;
    if lambda_new < cloud.lambda {
        return Err(Error::invalid(format!(
            "new temperature {lambda_new} is below the current {}",
            cloud.lambda
        )));
    }
    let step = lambda_new - cloud.lambda;
    Ok(scores(pair, cloud)?.into_iter().map(|s| step * s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GaussianPair;

    #[test]
    fn ess_examples() {
        let uniform = ParticleCloud::equally_weighted(1, vec![0.0; 100], 0.0).unwrap();
        assert!((ess(&uniform).unwrap() - 100.0).abs() < 1e-9);
        let one = ParticleCloud::new(1, vec![0.0; 3], vec![0.0, f64::NEG_INFINITY, f64::NEG_INFINITY], 0.0).unwrap();
        assert!((ess(&one).unwrap() - 1.0).abs() < 1e-12);
        let half = ParticleCloud::new(
            1,
            vec![0.0; 4],
            vec![0.5f64.ln(), 0.5f64.ln(), f64::NEG_INFINITY, f64::NEG_INFINITY],
            0.0,
        )
        .unwrap();
        assert!((ess(&half).unwrap() - 2.0).abs() < 1e-12);
        let dead = ParticleCloud::new(1, vec![0.0; 2], vec![f64::NEG_INFINITY; 2], 0.0).unwrap();
        assert!(matches!(ess(&dead), Err(Error::DegenerateCloud)));
    }

    #[test]
    fn incremental_weight_examples() {
        let pair = GaussianPair::isotropic(1, 1.0, 1.0).unwrap();
        let cloud = ParticleCloud::equally_weighted(1, vec![0.0, 1.5, -2.0], 0.0).unwrap();
        assert_eq!(incremental_log_weights(&pair, &cloud, 0.0).unwrap(), vec![0.0; 3]);
        let full = incremental_log_weights(&pair, &cloud, 1.0).unwrap();
        let s = scores(&pair, &cloud).unwrap();
        assert_eq!(full, s);
        let half = incremental_log_weights(&pair, &cloud, 0.5).unwrap();
        assert!((half[0] + 0.25).abs() < 1e-15);

        let later = cloud.clone().with_lambda(0.6);
        assert!(incremental_log_weights(&pair, &later, 0.5).is_err());
    }

    #[test]
    fn cloud_validation() {
        assert!(ParticleCloud::new(2, vec![0.0; 3], vec![0.0], 0.0).is_err());
        assert!(ParticleCloud::new(1, vec![f64::NAN], vec![0.0], 0.0).is_err());
        assert!(ParticleCloud::new(1, vec![0.0], vec![0.0], 1.5).is_err());
        let c = ParticleCloud::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]], 0.2).unwrap();
        assert_eq!(c.particle(1), &[3.0, 4.0]);
        let w: f64 = c.normalized_weights().unwrap().iter().sum();
        assert!((w - 1.0).abs() < 1e-12);
    }
}
