//! Small numerical kernels shared by the samplers and the oracles:
//! log-domain reductions, population moments and adaptive Simpson quadrature.

use crate::error::{Error, Result};

/// `log(sum(exp(v)))`, stable for large magnitudes. Returns `-inf` when every
/// entry is `-inf` (or the slice is empty).
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log(mean(exp(v)))`.
pub fn log_mean_exp(values: &[f64]) -> f64 {
    log_sum_exp(values) - (values.len() as f64).ln()
}

/// Softmax of log-weights. Fails if no weight is finite.
pub fn normalized_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        return Err(Error::DegenerateCloud);
    }
    Ok(log_weights.iter().map(|&lw| (lw - lse).exp()).collect())
}

/// Effective sample size `(sum w)^2 / sum w^2` computed from log-weights.
pub fn ess_from_log_weights(log_weights: &[f64]) -> Result<f64> {
    let lse = log_sum_exp(log_weights);
    if !lse.is_finite() {
        return Err(Error::DegenerateCloud);
    }
    let doubled: Vec<f64> = log_weights.iter().map(|&lw| 2.0 * (lw - lse)).collect();
    let ess = (-log_sum_exp(&doubled)).exp();
    Ok(ess.clamp(1.0, log_weights.len() as f64))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Population (1/N) variance, two-pass.
pub fn population_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64
}

/// Tolerances for [`adaptive_simpson`]. A panel is accepted when its
/// Richardson error estimate is below `max(abs_tol, rel_tol * |coarse|)`,
/// where `coarse` is a 64-panel Simpson estimate of the whole integral.
#[derive(Debug, Clone, Copy)]
pub struct QuadTolerance {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadTolerance {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 0.0,
            max_depth: 50,
        }
    }
}

impl QuadTolerance {
    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            ..Self::default()
        }
    }
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: QuadTolerance) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::invalid("quadrature bounds must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }

    // Coarse pass: sets the scale for the relative tolerance and seeds the
    // recursion with 64 panels so narrow features are not skipped.
    const PANELS: usize = 64;
    let width = (b - a) / PANELS as f64;
    let mut panels = Vec::with_capacity(PANELS);
    let mut coarse = 0.0;
    for k in 0..PANELS {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == PANELS { b } else { lo + width };
        let mid = 0.5 * (lo + hi);
        let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
        let whole = simpson(lo, hi, flo, fmid, fhi);
        coarse += whole;
        panels.push((lo, hi, flo, fmid, fhi, whole));
    }
    if !coarse.is_finite() {
        return Err(Error::Numeric("integrand is not finite".into()));
    }

    let threshold = tol.abs_tol.max(tol.rel_tol * coarse.abs());
    let panel_tol = threshold / PANELS as f64;
    let mut converged = true;
    let mut total = 0.0;
    for (lo, hi, flo, fmid, fhi, whole) in panels {
        total += refine(
            &f,
            lo,
            hi,
            flo,
            fmid,
            fhi,
            whole,
            panel_tol,
            tol.max_depth,
            &mut converged,
        );
    }
    if !converged {
        return Err(Error::Numeric(format!(
            "adaptive Simpson did not converge on [{a}, {b}] (depth {})",
            tol.max_depth
        )));
    }
    if !total.is_finite() {
        return Err(Error::Numeric("integrand is not finite".into()));
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    converged: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth == 0 {
        *converged = false;
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, converged)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_large_and_empty() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn ess_examples() {
        assert!((ess_from_log_weights(&[0.0; 100]).unwrap() - 100.0).abs() < 1e-9);
        let degenerate = [0.0, f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert!((ess_from_log_weights(&degenerate).unwrap() - 1.0).abs() < 1e-12);
        let half = [0.5f64.ln(), 0.5f64.ln(), f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert!((ess_from_log_weights(&half).unwrap() - 2.0).abs() < 1e-12);
        assert!(matches!(
            ess_from_log_weights(&[f64::NEG_INFINITY; 4]),
            Err(Error::DegenerateCloud)
        ));
    }

    #[test]
    fn simpson_integrates_gaussian() {
        let f = |x: f64| (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let v = adaptive_simpson(f, -12.0, 12.0, QuadTolerance::absolute(1e-12)).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }

    #[test]
    fn simpson_reports_non_convergence() {
        let tol = QuadTolerance {
            abs_tol: 1e-300,
            rel_tol: 0.0,
            max_depth: 2,
        };
        let err = adaptive_simpson(|x: f64| x.abs().sqrt(), -1.0, 1.0, tol).unwrap_err();
        assert!(matches!(err, Error::Numeric(_)));
    }
}
