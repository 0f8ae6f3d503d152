use rand::{Rng, RngCore};
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Weighted mixture of isotropic Gaussian kernels, one bandwidth per center.
#[derive(Debug, Clone, PartialEq)]
pub struct KdeMixture {
    dim: usize,
    centers: Vec<f64>,
    weights: Vec<f64>,
    log_weights: Vec<f64>,
    bandwidths: Vec<f64>,
    cumulative: Vec<f64>,
}

impl KdeMixture {
    /// `weights` must be non-negative and sum to 1 within 1e-12.
    pub fn new(dim: usize, centers: Vec<f64>, weights: Vec<f64>, bandwidths: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !(w >= 0.0)) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid("mixture weights must be non-negative and sum to 1"));
        }
        let log_weights = weights.iter().map(|w| w.ln()).collect();
        Self::build(dim, centers, weights, log_weights, bandwidths)
    }

    /// Builds the mixture from unnormalized log-weights.
    pub fn from_log_weights(dim: usize, centers: Vec<f64>, log_weights: &[f64], bandwidths: Vec<f64>) -> Result<Self> {
        let lse = log_sum_exp(log_weights);
        if !lse.is_finite() {
            return Err(Error::DegenerateCloud);
        }
        let log_weights: Vec<f64> = log_weights.iter().map(|lw| lw - lse).collect();
        let weights = log_weights.iter().map(|lw| lw.exp()).collect();
        Self::build(dim, centers, weights, log_weights, bandwidths)
    }

    fn build(
        dim: usize,
        centers: Vec<f64>,
        weights: Vec<f64>,
        log_weights: Vec<f64>,
        bandwidths: Vec<f64>,
    ) -> Result<Self> {
        let m = weights.len();
        if dim == 0 || m == 0 {
            return Err(Error::invalid(
                "mixture needs a positive dimension and at least one center",
            ));
        }
        if centers.len() != m * dim {
            return Err(Error::DimensionMismatch {
                expected: m * dim,
                got: centers.len(),
            });
        }
        if bandwidths.len() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                got: bandwidths.len(),
            });
        }
        if bandwidths.iter().any(|&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::invalid("bandwidths must be positive"));
        }
        if centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("centers must be finite"));
        }
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Ok(Self {
            dim,
            centers,
            weights,
            log_weights,
            bandwidths,
            cumulative,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bandwidths(&self) -> &[f64] {
        &self.bandwidths
    }

    /// `log sum_i w_i N(x; c_i, h_i^2 I)`.
    pub fn logpdf(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let d = self.dim as f64;
        let terms: Vec<f64> = self
            .centers
            .chunks_exact(self.dim)
            .zip(&self.log_weights)
            .zip(&self.bandwidths)
            .map(|((c, lw), h)| {
                let sq: f64 = c.iter().zip(x).map(|(ci, xi)| (xi - ci) * (xi - ci)).sum();
                let h2 = h * h;
                lw - 0.5 * d * (LN_2PI + h2.ln()) - 0.5 * sq / h2
            })
            .collect();
        log_sum_exp(&terms)
    }

    /// Log density at every row of `points`, evaluated in parallel.
    pub fn logpdf_many(&self, points: &[f64]) -> Vec<f64> {
        points.par_chunks_exact(self.dim).map(|x| self.logpdf(x)).collect()
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Vec<f64> {
        let u = rng.random::<f64>() * self.cumulative[self.len() - 1];
        let k = self.cumulative.partition_point(|&c| c <= u).min(self.len() - 1);
        let h = self.bandwidths[k];
        self.centers[k * self.dim..(k + 1) * self.dim]
            .iter()
            .map(|c| {
                let z: f64 = rng.sample(StandardNormal);
                c + h * z
            })
            .collect()
    }
}

/// Silverman's rule `sd * (4 / ((d + 2) N))^(1 / (d + 4))`, with `sd` the
/// mean per-coordinate weighted standard deviation of the rows of `positions`.
pub fn silverman_bandwidth(dim: usize, positions: &[f64], weights: &[f64]) -> Result<f64> {
    let n = weights.len();
    if dim == 0 || n == 0 || positions.len() != n * dim {
        return Err(Error::invalid("positions and weights do not match"));
    }
    let mut mean = vec![0.0; dim];
    for (x, w) in positions.chunks_exact(dim).zip(weights) {
        for (m, xi) in mean.iter_mut().zip(x) {
            *m += w * xi;
        }
    }
    let mut var = vec![0.0; dim];
    for (x, w) in positions.chunks_exact(dim).zip(weights) {
        for ((v, m), xi) in var.iter_mut().zip(&mean).zip(x) {
            *v += w * (xi - m) * (xi - m);
        }
    }
    let sd = var.iter().map(|v| v.sqrt()).sum::<f64>() / dim as f64;
    if !(sd > 0.0 && sd.is_finite()) {
        return Err(Error::DegenerateCloud);
    }
    let d = dim as f64;
    Ok(sd * (4.0 / ((d + 2.0) * n as f64)).powf(1.0 / (d + 4.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_standard_kernel() {
        let k = KdeMixture::new(1, vec![0.0], vec![1.0], vec![1.0]).unwrap();
        assert!((k.logpdf(&[0.0]) + 0.918_938_533_204_672_7).abs() < 1e-12);
        let twice = KdeMixture::new(1, vec![0.0, 0.0], vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
        assert!((twice.logpdf(&[0.7]) - k.logpdf(&[0.7])).abs() < 1e-12);
    }

    #[test]
    fn consistent_for_many_normal_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 10_000;
        let centers: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let w = vec![1.0 / n as f64; n];
        let h = silverman_bandwidth(1, &centers, &w).unwrap();
        let k = KdeMixture::from_log_weights(1, centers, &vec![0.0; n], vec![h; n]).unwrap();
        assert!((k.logpdf(&[0.0]) + 0.9189).abs() <= 0.05);
    }

    #[test]
    fn integrates_to_one_and_stays_finite() {
        let k = KdeMixture::new(1, vec![-1.0, 0.5, 3.0], vec![0.2, 0.5, 0.3], vec![0.3, 0.8, 0.1]).unwrap();
        let (a, b, m) = (-10.0, 10.0, 200_000);
        let dx = (b - a) / m as f64;
        let mut total = 0.0;
        for i in 0..=m {
            let x = a + i as f64 * dx;
            let v = k.logpdf(&[x]);
            assert!(v.is_finite());
            total += if i == 0 || i == m { 0.5 } else { 1.0 } * v.exp() * dx;
        }
        assert!((total - 1.0).abs() <= 1e-4);
        assert!(k.logpdf(&[1e3]).is_finite());
    }

    #[test]
    fn sampling_reproduces_mixture_mean() {
        let k = KdeMixture::new(1, vec![-2.0, 2.0], vec![0.25, 0.75], vec![0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let n = 40_000;
        let m: f64 = (0..n).map(|_| k.sample(&mut rng)[0]).sum::<f64>() / n as f64;
        // mixture sd is about 1.8
        assert!((m - 1.0).abs() < 3.0 * 1.8 / (n as f64).sqrt());
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(KdeMixture::new(1, vec![0.0, 1.0], vec![0.5, 0.6], vec![1.0, 1.0]).is_err());
        assert!(KdeMixture::new(1, vec![0.0], vec![1.0], vec![0.0]).is_err());
        assert!(silverman_bandwidth(1, &[1.0, 1.0], &[0.5, 0.5]).is_err());
    }
}
