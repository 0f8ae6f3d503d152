//! Data behind the schedule-rate, schedule-shape, dimension-scaling and
//! narrow-target comparisons. Each function returns plain rows that the CLI
//! writes as CSV.

use serde::{Deserialize, Serialize};

use crate::diagnostics::moment_error;
use crate::error::{Error, Result};
use crate::model::{fisher_info, GaussianPair};
use crate::schedule::{fisher_recipe_schedule, rate_cn};
use crate::smc::{run_smc, AdaptiveRule, KernelConfig, RunResult, SmcSettings};

/// Seeds, particle count and kernel shared by the sampling figures.
#[derive(Debug, Clone, PartialEq)]
pub struct FigureOptions {
    pub seed: u64,
    pub replicates: usize,
    /// Overrides the per-figure default.
    pub n_particles: Option<usize>,
    pub kernel: KernelConfig,
}

impl Default for FigureOptions {
    fn default() -> Self {
        Self {
            seed: 0,
            replicates: 5,
            n_particles: None,
            kernel: KernelConfig::default(),
        }
    }
}

impl FigureOptions {
    fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.replicates as u64).map(|r| self.seed.wrapping_add(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub scenario: String,
    pub n: usize,
    pub lambda: f64,
    pub gamma: f64,
    /// Absent at the final bridging step.
    pub rate: Option<f64>,
    pub bound: f64,
}

/// Recipe schedules `lambda_n - lambda_{n-1} = c I(lambda_{n-1})^(-1/2)` for a
/// wider target, a narrower target and a shifted target, with their step
/// sizes, rates and the `1 - lambda_n` bound.
pub fn rates_figure() -> Result<Vec<RateRow>> {
    let scenarios = [
        ("negative-exponential", GaussianPair::isotropic(1, 0.0, 100.0)?, 0.15),
        ("exponential-growth", GaussianPair::isotropic(1, 0.0, 0.01)?, 1.0),
        ("linear", GaussianPair::isotropic(1, 2.0, 1.0)?, 0.1),
    ];
    let mut rows = Vec::new();
    for (name, pair, c) in scenarios {
        let schedule = fisher_recipe_schedule(|l| fisher_info(&pair, l).unwrap_or(f64::NAN), c, 100_000)?;
        let lambdas = schedule.lambdas();
        let gammas = schedule.gammas();
        let gammas = gammas.gammas();
        let rates = rate_cn(&gammas[..gammas.len() - 1])?;
        for n in 1..lambdas.len() {
            let rate = rates.get(n - 1).copied();
            let bound = 1.0 - lambdas[n];
            if let Some(r) = rate {
                // equality holds at n = 1
                if r > bound * (1.0 + 1e-12) {
                    return Err(Error::Numeric(format!(
                        "{name}: rate {r} exceeds bound {bound} at n = {n}"
                    )));
                }
            }
            rows.push(RateRow {
                scenario: name.to_string(),
                n,
                lambda: lambdas[n],
                gamma: gammas[n - 1],
                rate,
                bound,
            });
        }
    }
    Ok(rows)
}

/// The three target shapes of the schedule-shape comparison, `m = 1`:
/// (a) all variances 0.01, (b) all 100, (c) half and half.
pub fn shape_case(case: char, dim: usize) -> Result<GaussianPair> {
    let var = match case {
        'a' => vec![0.01; dim],
        'b' => vec![100.0; dim],
        'c' => (0..dim).map(|i| if i < dim / 2 { 0.01 } else { 100.0 }).collect(),
        other => return Err(Error::invalid(format!("unknown case {other:?}"))),
    };
    GaussianPair::new(vec![1.0; dim], var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceRow {
    pub case: String,
    pub seed: u64,
    pub n: usize,
    pub lambda: f64,
}

/// Adaptive ESS schedules (`beta = 1`, `d = 25`, `N = 10^4` by default) for
/// the three shape cases.
pub fn sequences_figure(opts: &FigureOptions) -> Result<Vec<SequenceRow>> {
    let n = opts.n_particles.unwrap_or(10_000);
    let mut rows = Vec::new();
    for case in ['a', 'b', 'c'] {
        let pair = shape_case(case, 25)?;
        for seed in opts.seeds() {
            let r = run_smc(&pair, &ess_settings(n, opts.kernel), seed)?;
            rows.extend(r.lambdas.iter().enumerate().map(|(i, &lambda)| SequenceRow {
                case: case.to_string(),
                seed,
                n: i,
                lambda,
            }));
        }
    }
    Ok(rows)
}

fn ess_settings(n_particles: usize, kernel: KernelConfig) -> SmcSettings {
    SmcSettings {
        kernel,
        ..SmcSettings::new(AdaptiveRule::EssBisection { beta: 1.0 }, n_particles)
    }
}

/// Discrete shape of a temperature curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveShape {
    Convex,
    Concave,
    /// Convex then concave: slow at both ends.
    SCurve,
    Irregular,
}

/// Classifies a curve by the signs of its second differences over the middle
/// 80% of its indices. A share of at least 2/3 counts as a majority. The
/// S-curve test runs first: convex before and concave after some change point
/// in the central 60% of that window.
pub fn classify_curve(lambdas: &[f64]) -> CurveShape {
    let t = lambdas.len();
    if t < 3 {
        return CurveShape::Irregular;
    }
    let lo = ((0.1 * (t - 1) as f64).ceil() as usize).max(1);
    let hi = ((0.9 * (t - 1) as f64).floor() as usize).min(t - 2);
    if lo > hi {
        return CurveShape::Irregular;
    }
    let second: Vec<f64> = (lo..=hi)
        .map(|k| lambdas[k + 1] - 2.0 * lambdas[k] + lambdas[k - 1])
        .collect();
    let share = |xs: &[f64], positive: bool| {
        let hits = xs.iter().filter(|&&x| if positive { x > 0.0 } else { x < 0.0 }).count();
        hits as f64 / xs.len().max(1) as f64
    };
    const MAJORITY: f64 = 2.0 / 3.0;
    let len = second.len();
    let first_split = ((0.2 * len as f64).ceil() as usize).max(1);
    let last_split = ((0.8 * len as f64).floor() as usize).min(len - 1);
    if len >= 4
        && (first_split..=last_split)
            .any(|k| share(&second[..k], true) >= MAJORITY && share(&second[k..], false) >= MAJORITY)
    {
        return CurveShape::SCurve;
    }
    if share(&second, true) >= MAJORITY {
        CurveShape::Convex
    } else if share(&second, false) >= MAJORITY {
        CurveShape::Concave
    } else {
        CurveShape::Irregular
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub dim: usize,
    pub seed: u64,
    pub n_steps: usize,
}

/// Schedule length of the adaptive ESS sampler on case (a) for each `dim`
/// (`N = 10^3` by default).
pub fn scaling_figure(dims: &[usize], opts: &FigureOptions) -> Result<Vec<ScalingRow>> {
    let n = opts.n_particles.unwrap_or(1_000);
    let mut rows = Vec::new();
    for &dim in dims {
        let pair = shape_case('a', dim)?;
        for seed in opts.seeds() {
            let r = run_smc(&pair, &ess_settings(n, opts.kernel), seed)?;
            rows.push(ScalingRow {
                dim,
                seed,
                n_steps: r.n_steps,
            });
        }
    }
    Ok(rows)
}

/// Least-squares slope of `log(mean n_steps)` against `log(dim)`.
pub fn log_log_slope(rows: &[ScalingRow]) -> Result<f64> {
    let mut dims: Vec<usize> = rows.iter().map(|r| r.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    if dims.len() < 2 {
        return Err(Error::invalid("need at least two dimensions for a slope"));
    }
    let points: Vec<(f64, f64)> = dims
        .iter()
        .map(|&d| {
            let steps: Vec<f64> = rows.iter().filter(|r| r.dim == d).map(|r| r.n_steps as f64).collect();
            let mean = steps.iter().sum::<f64>() / steps.len() as f64;
            ((d as f64).ln(), mean.ln())
        })
        .collect();
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    Ok(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NarrowRow {
    pub method: String,
    pub seed: u64,
    pub n_steps: usize,
    /// False when the step cap was hit first.
    pub reached_one: bool,
    pub mean_error: f64,
    pub var_error: f64,
}

/// The narrow target `N(1, 0.01 I)` in `d = 2`: adaptive ESS SMC against the
/// constant-rate rule with `delta = 1/32`, the latter capped at `ais_cap`
/// steps.
pub fn narrow_figure(opts: &FigureOptions, ais_cap: usize) -> Result<Vec<NarrowRow>> {
    let n = opts.n_particles.unwrap_or(10_000);
    let pair = GaussianPair::isotropic(2, 1.0, 0.01)?;
    let target = pair.target_state();
    let mut rows = Vec::new();
    for seed in opts.seeds() {
        let methods = [
            ("smc-ess", AdaptiveRule::EssBisection { beta: 1.0 }),
            ("constant-rate", AdaptiveRule::ConstantRateAis { delta: 1.0 / 32.0 }),
        ];
        for (name, rule) in methods {
            let settings = SmcSettings {
                kernel: opts.kernel,
                max_steps: ais_cap,
                ..SmcSettings::new(rule, n)
            };
            let (result, reached_one) = finished_or_partial(run_smc(&pair, &settings, seed))?;
            let (mean_error, var_error) = moment_error(&result.final_cloud, &target)?;
            rows.push(NarrowRow {
                method: name.to_string(),
                seed,
                n_steps: result.n_steps,
                reached_one,
                mean_error,
                var_error,
            });
        }
    }
    Ok(rows)
}

fn finished_or_partial(run: Result<RunResult>) -> Result<(RunResult, bool)> {
    match run {
        Ok(r) => Ok((r, true)),
        Err(Error::BudgetExceeded { partial }) => Ok((*partial, false)),
        Err(e) => Err(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rates_respect_bound() {
        let rows = rates_figure().unwrap();
        for name in ["negative-exponential", "exponential-growth", "linear"] {
            let rs: Vec<_> = rows.iter().filter(|r| r.scenario == name).collect();
            assert!(rs.len() >= 3, "{name}");
            assert_eq!(rs.last().unwrap().lambda, 1.0);
            assert!(rs.last().unwrap().rate.is_none());
            for r in &rs[..rs.len() - 1] {
                assert!(r.rate.unwrap() <= r.bound * (1.0 + 1e-12));
            }
        }
        // constant information gives a constant increment
        let lin: Vec<f64> = rows
            .iter()
            .filter(|r| r.scenario == "linear")
            .map(|r| r.lambda)
            .collect();
        assert!((lin[1] - lin[0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn classifies_reference_curves() {
        let t = 30;
        let convex: Vec<f64> = (0..=t)
            .map(|i| ((i as f64 / t as f64) * 3.0).exp_m1() / 3f64.exp_m1())
            .collect();
        let concave: Vec<f64> = convex.iter().rev().map(|v| 1.0 - v).collect();
        let s: Vec<f64> = (0..=t)
            .map(|i| {
                let x = i as f64 / t as f64;
                x * x * (3.0 - 2.0 * x)
            })
            .collect();
        assert_eq!(classify_curve(&convex), CurveShape::Convex);
        assert_eq!(classify_curve(&concave), CurveShape::Concave);
        assert_eq!(classify_curve(&s), CurveShape::SCurve);
        let off_center: Vec<f64> = (0..=t)
            .map(|i| 1.0 / (1.0 + (-12.0 * (i as f64 / t as f64 - 0.65)).exp()))
            .collect();
        assert_eq!(classify_curve(&off_center), CurveShape::SCurve);
        let line: Vec<f64> = (0..=t).map(|i| i as f64 / t as f64).collect();
        assert_eq!(classify_curve(&line), CurveShape::Irregular);
    }

    #[test]
    fn slope_of_square_root_law() {
        let rows: Vec<ScalingRow> = [4usize, 16, 64, 256]
            .iter()
            .map(|&d| ScalingRow {
                dim: d,
                seed: 0,
                n_steps: 3 * (d as f64).sqrt() as usize,
            })
            .collect();
        assert!((log_log_slope(&rows).unwrap() - 0.5).abs() < 1e-12);
    }
}
