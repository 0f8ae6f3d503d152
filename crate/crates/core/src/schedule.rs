//! Temperature schedules and their mirror-descent reading.
//!
//! A tempering schedule `0 = l_0 < l_1 < ... < l_T = 1` is the same object as
//! a sequence of entropic mirror-descent step sizes through
//! `l_n = 1 - prod_{k<=n} (1 - g_k)`. The step sizes give the convergence
//! rate `C_n` of `KL(mu_n | pi)`, which is bounded by `1 - l_n`.
//!
//! The module also integrates the schedule ODE `l' = c I(l)^(-1/2)` that
//! keeps the divergence between consecutive tempered distributions constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::GaussianPair;

/// Strictly increasing temperatures from exactly 0 to exactly 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Schedule {
    lambdas: Vec<f64>,
}

impl Schedule {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() < 2 {
            return Err(Error::InvalidSchedule(
                "schedule needs at least two temperatures".into(),
            ));
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::InvalidSchedule("temperatures must be finite".into()));
        }
        if lambdas[0] != 0.0 {
            return Err(Error::InvalidSchedule("schedule must start at 0".into()));
        }
        if *lambdas.last().unwrap() != 1.0 {
            return Err(Error::InvalidSchedule("schedule must end at 1".into()));
        }
        if let Some(w) = lambdas.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidSchedule(format!(
                "schedule must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(Self { lambdas })
    }

    /// `n` equal increments.
    pub fn linear(n_steps: usize) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::InvalidSchedule("need at least one step".into()));
        }
        let mut lambdas: Vec<f64> = (0..n_steps).map(|k| k as f64 / n_steps as f64).collect();
        lambdas.push(1.0);
        Self::new(lambdas)
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Number of tempering steps `T`.
    pub fn n_steps(&self) -> usize {
        self.lambdas.len() - 1
    }

    pub fn gammas(&self) -> StepSizes {
        let lambdas = &self.lambdas;
        let mut gammas: Vec<f64> = lambdas.windows(2).map(|w| (w[1] - w[0]) / (1.0 - w[0])).collect();
        *gammas.last_mut().unwrap() = 1.0;
        StepSizes { gammas }
    }

    /// `C_1..C_{T-1}`, leaving out the final bridging step.
    pub fn rate_cn(&self) -> Result<Vec<f64>> {
        let gammas = self.gammas();
        rate_cn(&gammas.gammas[..self.n_steps() - 1])
    }

    /// `1 - l_n` for `n = 1..T-1`.
    pub fn rate_bound(&self) -> Vec<f64> {
        self.lambdas[1..self.lambdas.len() - 1]
            .iter()
            .map(|l| 1.0 - l)
            .collect()
    }
}

impl TryFrom<Vec<f64>> for Schedule {
    type Error = Error;

    fn try_from(lambdas: Vec<f64>) -> Result<Self> {
        Self::new(lambdas)
    }
}

impl From<Schedule> for Vec<f64> {
    fn from(s: Schedule) -> Self {
        s.lambdas
    }
}

/// Mirror-descent step sizes, each in `(0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct StepSizes {
    gammas: Vec<f64>,
}

impl StepSizes {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::invalid("need at least one step size"));
        }
        if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g <= 1.0)) {
            return Err(Error::invalid(format!("step size {g} is outside (0, 1]")));
        }
        Ok(Self { gammas })
    }

    /// `n` copies of `gamma`.
    pub fn constant(gamma: f64, n: usize) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn len(&self) -> usize {
        self.gammas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gammas.is_empty()
    }

    /// The temperatures `l_0 = 0, l_1, ..., l_T` reached by these steps,
    /// whether or not the last step bridges to 1.
    pub fn cumulative_lambdas(&self) -> Vec<f64> {
        let mut remaining = 1.0;
        let mut lambdas = Vec::with_capacity(self.gammas.len() + 1);
        lambdas.push(0.0);
        for &g in &self.gammas {
            remaining *= 1.0 - g;
            lambdas.push(1.0 - remaining);
        }
        lambdas
    }
}

impl TryFrom<Vec<f64>> for StepSizes {
    type Error = Error;

    fn try_from(gammas: Vec<f64>) -> Result<Self> {
        Self::new(gammas)
    }
}

impl From<StepSizes> for Vec<f64> {
    fn from(s: StepSizes) -> Self {
        s.gammas
    }
}

/// `g_1 = l_1`, `g_n = (l_n - l_{n-1}) / (1 - l_{n-1})`, last entry exactly 1.
pub fn lambdas_to_gammas(lambdas: &[f64]) -> Result<StepSizes> {
    Ok(Schedule::new(lambdas.to_vec())?.gammas())
}

/// Inverse of [`lambdas_to_gammas`]; the last step size must be 1.
pub fn gammas_to_lambdas(gammas: &StepSizes) -> Result<Schedule> {
    if *gammas.gammas.last().unwrap() != 1.0 {
        return Err(Error::InvalidSchedule(
            "last step size must be 1 to reach the target".into(),
        ));
    }
    let mut lambdas = gammas.cumulative_lambdas();
    *lambdas.last_mut().unwrap() = 1.0;
    Schedule::new(lambdas)
}

/// Convergence rates `C_1..C_n` for general step sizes:
/// `1 / C_n = sum_{k<=n} (g_k / g_1) prod_{i<=k} 1 / (1 - g_i)`.
///
/// The formula has a pole at `g = 1`, so bridging steps must be left out.
pub fn rate_cn(gammas: &[f64]) -> Result<Vec<f64>> {
    if let Some(g) = gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
        return Err(Error::invalid(format!(
            "rate is only defined for step sizes in (0, 1), got {g}"
        )));
    }
    let Some(&g1) = gammas.first() else {
        return Ok(Vec::new());
    };
    let mut inv_prod = 1.0;
    let mut inv_rate = 0.0;
    Ok(gammas
        .iter()
        .map(|&g| {
            inv_prod /= 1.0 - g;
            inv_rate += g / g1 * inv_prod;
            1.0 / inv_rate
        })
        .collect())
}

/// `1 - l_n` for `n = 1..T-1`; equal to `prod_{k<=n} (1 - g_k)`.
pub fn rate_bound(schedule: &Schedule) -> Vec<f64> {
    schedule.rate_bound()
}

/// Explicit-Euler path of the schedule ODE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdePath {
    pub times: Vec<f64>,
    pub lambdas: Vec<f64>,
}

impl OdePath {
    /// Linear interpolation of the path at time `t` (clamped to the ends).
    pub fn lambda_at(&self, t: f64) -> f64 {
        let last = self.times.len() - 1;
        if t <= self.times[0] {
            return self.lambdas[0];
        }
        if t >= self.times[last] {
            return self.lambdas[last];
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        self.lambdas[k] + w * (self.lambdas[k + 1] - self.lambdas[k])
    }

    /// The path as a schedule; only valid when it starts at 0.
    pub fn to_schedule(&self) -> Result<Schedule> {
        Schedule::new(self.lambdas.clone())
    }
}

/// Default Euler step for [`solve_schedule_ode`].
pub const DEFAULT_ODE_STEP: f64 = 1e-3;

/// Integrates `l' = c I(l)^(-1/2)` from `lambda0` with fixed step `step`
/// until the path reaches 1 (the last point is clamped to exactly 1).
pub fn solve_schedule_ode<F>(info: F, c: f64, lambda0: f64, step: f64, max_steps: usize) -> Result<OdePath>
where
    F: Fn(f64) -> f64,
{
    if !(c > 0.0) {
        return Err(Error::invalid("c must be positive"));
    }
    if !(step > 0.0) {
        return Err(Error::invalid("ODE step must be positive"));
    }
    if !(0.0..1.0).contains(&lambda0) {
        return Err(Error::invalid("lambda0 must lie in [0, 1)"));
    }
    let mut times = vec![0.0];
    let mut lambdas = vec![lambda0];
    let mut lambda = lambda0;
    for k in 1..=max_steps {
        let i = info(lambda);
        if !(i > 0.0 && i.is_finite()) {
            return Err(Error::Numeric(format!(
                "information I({lambda}) = {i} must be positive and finite"
            )));
        }
        lambda = (lambda + step * c / i.sqrt()).min(1.0);
        times.push(k as f64 * step);
        lambdas.push(lambda);
        if lambda >= 1.0 {
            return Ok(OdePath { times, lambdas });
        }
    }
    Err(Error::OdeBudgetExceeded {
        partial: Box::new(OdePath { times, lambdas }),
    })
}

/// Qualitative shape of the constant-divergence schedule for a Gaussian pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleShape {
    /// Fast start, slow finish: every target variance exceeds 1.
    NegativeExponential,
    /// Slow start, fast finish: every target variance is below 1.
    ExponentialGrowth,
    /// Constant information: unit variances with a mean shift.
    Linear,
    /// Variances on both sides of 1: slow at both ends.
    Mixed,
}

/// Classifies a pair by the sign of `tau2 - 1` per coordinate.
///
/// Coordinates with `tau2 = 1` and `m = 0` carry no information and are
/// ignored; ties within `1e-12` count as the linear class.
pub fn analytic_shape(pair: &GaussianPair) -> Result<ScheduleShape> {
    const TOL: f64 = 1e-12;
    let (mut wide, mut narrow, mut unit) = (false, false, false);
    for (&m, &tau2) in pair.mean().iter().zip(pair.var()) {
        if tau2 - 1.0 > TOL {
            wide = true;
        } else if 1.0 - tau2 > TOL {
            narrow = true;
        } else if m != 0.0 {
            unit = true;
        }
    }
    match (wide, narrow, unit) {
        (false, false, false) => Err(Error::DegeneratePair),
        (true, false, false) => Ok(ScheduleShape::NegativeExponential),
        (false, true, false) => Ok(ScheduleShape::ExponentialGrowth),
        (false, false, true) => Ok(ScheduleShape::Linear),
        _ => Ok(ScheduleShape::Mixed),
    }
}

/// Deterministic schedule from the recipe `l_n - l_{n-1} = c I(l_{n-1})^(-1/2)`
/// using a caller-supplied information function, truncated at 1.
pub fn fisher_recipe_schedule<F>(info: F, c: f64, max_steps: usize) -> Result<Schedule>
where
    F: Fn(f64) -> f64,
{
    let path = solve_schedule_ode(info, c, 0.0, 1.0, max_steps)?;
    path.to_schedule()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fisher_info, gaussian_state, kl_gaussian};
    use crate::numeric::{adaptive_simpson, QuadTolerance};
    use proptest::prelude::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len(), "{a:?} vs {b:?}");
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn lambdas_to_gammas_examples() {
        let g = lambdas_to_gammas(&[0.0, 0.5, 0.75, 1.0]).unwrap();
        assert_close(g.gammas(), &[0.5, 0.5, 1.0], 0.0);
        assert_eq!(lambdas_to_gammas(&[0.0, 1.0]).unwrap().gammas(), &[1.0]);
        let g = lambdas_to_gammas(&[0.0, 0.5, 0.75, 0.875, 1.0]).unwrap();
        assert_close(g.gammas(), &[0.5, 0.5, 0.5, 1.0], 0.0);
    }

    #[test]
    fn lambdas_to_gammas_rejects_invalid_input() {
        for bad in [
            vec![0.0, 0.6, 0.5, 1.0],
            vec![0.1, 0.5, 1.0],
            vec![0.0, 0.5],
            vec![0.0, 0.5, 0.5, 1.0],
            vec![0.0],
        ] {
            assert!(lambdas_to_gammas(&bad).is_err(), "{bad:?}");
        }
        let err = Schedule::new(vec![0.0, 0.5, 0.9]).unwrap_err();
        assert!(err.to_string().contains("schedule must end at 1"));
    }

    #[test]
    fn gammas_to_lambdas_examples() {
        let s = gammas_to_lambdas(&StepSizes::new(vec![0.5, 0.5, 1.0]).unwrap()).unwrap();
        assert_close(s.lambdas(), &[0.0, 0.5, 0.75, 1.0], 0.0);
        let s = gammas_to_lambdas(&StepSizes::new(vec![1.0]).unwrap()).unwrap();
        assert_eq!(s.lambdas(), &[0.0, 1.0]);
        let s = gammas_to_lambdas(&StepSizes::new(vec![0.25, 0.25, 1.0]).unwrap()).unwrap();
        assert_close(s.lambdas(), &[0.0, 0.25, 0.4375, 1.0], 1e-15);
    }

    #[test]
    fn step_sizes_reject_out_of_range() {
        assert!(StepSizes::new(vec![0.0, 1.0]).is_err());
        assert!(StepSizes::new(vec![1.2]).is_err());
        assert!(StepSizes::new(vec![]).is_err());
        assert!(gammas_to_lambdas(&StepSizes::new(vec![0.5, 0.5]).unwrap()).is_err());
    }

    #[test]
    fn rate_cn_examples() {
        let c = rate_cn(&[0.5, 0.5]).unwrap();
        assert!((c[1] - 1.0 / 6.0).abs() < 1e-15);
        for g in [0.1, 0.5, 0.9] {
            assert!((rate_cn(&[g]).unwrap()[0] - (1.0 - g)).abs() < 1e-15);
        }
        assert!((rate_cn(&[0.5, 0.25]).unwrap()[1] - 0.3).abs() < 1e-15);
        assert!(rate_cn(&[0.5, 1.0]).is_err());
    }

    #[test]
    fn rate_cn_constant_steps_match_sharper_closed_form() {
        // With constant steps the general formula collapses to
        // 1/C_n = sum_{k<=n} (1 - g)^(-k).
        let g = 0.3;
        let c = rate_cn(&[g; 12]).unwrap();
        for (n, cn) in c.iter().enumerate() {
            let inv: f64 = (1..=n + 1).map(|k| (1.0 - g).powi(-(k as i32))).sum();
            assert!((cn - 1.0 / inv).abs() < 1e-14);
        }
    }

    #[test]
    fn rate_bound_examples() {
        let s = Schedule::new(vec![0.0, 0.5, 0.75, 1.0]).unwrap();
        assert_close(&rate_bound(&s), &[0.5, 0.25], 0.0);
        let s = Schedule::new(vec![0.0, 0.9, 1.0]).unwrap();
        assert_close(&rate_bound(&s), &[0.1], 1e-15);
    }

    #[test]
    fn ode_constant_information_is_linear() {
        let path = solve_schedule_ode(|_| 4.0, 1.0, 0.0, DEFAULT_ODE_STEP, 10_000).unwrap();
        assert!((path.lambda_at(1.0) - 0.5).abs() < 1e-9);
        let increments: Vec<f64> = path.lambdas.windows(2).map(|w| w[1] - w[0]).collect();
        for d in &increments[..increments.len() - 1] {
            assert!((d - 5e-4).abs() < 1e-12);
        }
    }

    #[test]
    fn ode_variance_case_matches_fine_euler_and_closed_form() {
        // tau2 = 4: I(l) = 2 a^2 (1 + alpha l)^(-2), so l' = k (1 + alpha l)
        // with k = c / (sqrt(2) |a|), solved by l(t) = (exp(alpha k t) - 1) / alpha.
        let pair = GaussianPair::isotropic(1, 0.0, 4.0).unwrap();
        let info = |l: f64| fisher_info(&pair, l).unwrap();
        let coarse = solve_schedule_ode(info, 1.0, 0.0, 1e-3, 100_000).unwrap();
        let fine = solve_schedule_ode(info, 1.0, 0.0, 1e-6, 10_000_000).unwrap();
        let alpha = 1.0 / 4.0 - 1.0;
        let a: f64 = 0.5 * (1.0 - 0.25);
        let k = 1.0 / (2f64.sqrt() * a);
        let mut sup_fine: f64 = 0.0;
        let mut sup_exact: f64 = 0.0;
        for (&t, &l) in coarse.times.iter().zip(&coarse.lambdas) {
            sup_fine = sup_fine.max((l - fine.lambda_at(t)).abs());
            let exact = (((alpha * k * t).exp() - 1.0) / alpha).min(1.0);
            sup_exact = sup_exact.max((l - exact).abs());
        }
        assert!(sup_fine <= 1e-3, "sup gap to fine Euler {sup_fine}");
        assert!(sup_exact <= 1e-3, "sup gap to closed form {sup_exact}");
        // negative exponential: increments shrink
        let inc: Vec<f64> = coarse.lambdas.windows(2).map(|w| w[1] - w[0]).collect();
        assert!(inc[..inc.len() - 1].windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn ode_narrow_variance_case_is_convex() {
        let pair = GaussianPair::isotropic(1, 0.0, 0.25).unwrap();
        let info = |l: f64| fisher_info(&pair, l).unwrap();
        let path = solve_schedule_ode(info, 1.0, 0.0, 1e-3, 100_000).unwrap();
        let fine = solve_schedule_ode(info, 1.0, 0.0, 1e-6, 10_000_000).unwrap();
        let n = path.lambdas.len();
        // leave out the clamped last point
        for w in path.lambdas[..n - 1].windows(3) {
            assert!(w[2] - 2.0 * w[1] + w[0] >= -1e-15);
        }
        // Euler error grows with the speed near 1
        for (&t, &l) in path.times[..n - 1].iter().zip(&path.lambdas) {
            assert!(
                (l - fine.lambda_at(t)).abs() <= 2e-3,
                "t = {t} gap {}",
                l - fine.lambda_at(t)
            );
        }
    }

    #[test]
    fn ode_errors() {
        assert!(matches!(
            solve_schedule_ode(|_| 0.0, 1.0, 0.0, 1e-3, 10),
            Err(Error::Numeric(_))
        ));
        match solve_schedule_ode(|_| 1.0, 1.0, 0.0, 1e-3, 10) {
            Err(Error::OdeBudgetExceeded { partial }) => {
                assert_eq!(partial.lambdas.len(), 11);
                assert!((partial.lambdas[10] - 0.01).abs() < 1e-12);
            }
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn shape_classification() {
        let iso = |tau2| GaussianPair::isotropic(4, 1.0, tau2).unwrap();
        assert_eq!(analytic_shape(&iso(100.0)).unwrap(), ScheduleShape::NegativeExponential);
        assert_eq!(analytic_shape(&iso(0.01)).unwrap(), ScheduleShape::ExponentialGrowth);
        assert_eq!(analytic_shape(&iso(1.0)).unwrap(), ScheduleShape::Linear);
        let mixed = GaussianPair::new(vec![1.0; 4], vec![0.01, 0.01, 100.0, 100.0]).unwrap();
        assert_eq!(analytic_shape(&mixed).unwrap(), ScheduleShape::Mixed);
        let same = GaussianPair::isotropic(3, 0.0, 1.0).unwrap();
        assert!(matches!(analytic_shape(&same), Err(Error::DegeneratePair)));
    }

    #[test]
    fn kl_integration_identity_against_oracle() {
        let pair = GaussianPair::new(vec![0.7, -1.0], vec![4.0, 0.3]).unwrap();
        for (l, lp) in [(0.1, 0.2), (0.2, 0.9), (0.5, 0.55), (0.05, 0.95)] {
            let kl = kl_gaussian(&gaussian_state(&pair, l).unwrap(), &gaussian_state(&pair, lp).unwrap()).unwrap();
            let integral = adaptive_simpson(
                |u| (lp - u) * fisher_info(&pair, u).unwrap(),
                l,
                lp,
                QuadTolerance::absolute(1e-12),
            )
            .unwrap();
            assert!((kl - integral).abs() <= 1e-6, "{kl} vs {integral}");
        }
    }

    fn schedule_strategy() -> impl Strategy<Value = Schedule> {
        prop::collection::vec(0.001f64..0.999, 1..20).prop_filter_map("distinct", |mut v| {
            v.sort_by(f64::total_cmp);
            v.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
            let mut lambdas = vec![0.0];
            lambdas.extend(v);
            lambdas.push(1.0);
            Schedule::new(lambdas).ok()
        })
    }

    proptest! {
        #[test]
        fn gamma_round_trip(s in schedule_strategy()) {
            let back = gammas_to_lambdas(&s.gammas()).unwrap();
            for (a, b) in back.lambdas().iter().zip(s.lambdas()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }

        #[test]
        fn rate_is_below_bound(s in schedule_strategy()) {
            let c = s.rate_cn().unwrap();
            let bound = s.rate_bound();
            let gammas = s.gammas();
            let mut prod = 1.0;
            for (n, (cn, b)) in c.iter().zip(&bound).enumerate() {
                prod *= 1.0 - gammas.gammas()[n];
                prop_assert!((prod - b).abs() <= 1e-12);
                if n == 0 {
                    prop_assert!((cn - b).abs() <= 1e-12);
                } else {
                    prop_assert!(cn < b, "n={} C={} bound={}", n + 1, cn, b);
                }
            }
        }

        #[test]
        fn descent_bound_holds_on_gaussian_path(
            s in schedule_strategy(),
            m in -2.0f64..2.0,
            log_tau2 in -3.0f64..3.0,
        ) {
            let pair = GaussianPair::new(vec![m, 0.5 * m], vec![log_tau2.exp(), (-0.5 * log_tau2).exp()]).unwrap();
            let target = pair.target_state();
            let kl0 = kl_gaussian(&target, &gaussian_state(&pair, 0.0).unwrap()).unwrap();
            let l1 = s.lambdas()[1];
            let mut prev = kl_gaussian(&gaussian_state(&pair, 0.0).unwrap(), &target).unwrap();
            let mut prev_state = gaussian_state(&pair, 0.0).unwrap();
            for &l in &s.lambdas()[1..] {
                let state = gaussian_state(&pair, l).unwrap();
                let kl = kl_gaussian(&state, &target).unwrap();
                prop_assert!(kl <= (1.0 - l) / l1 * kl0 + 1e-10);
                let step = kl_gaussian(&prev_state, &state).unwrap();
                prop_assert!(prev - kl >= step - 1e-10);
                prev = kl;
                prev_state = state;
            }
        }
    }
}
