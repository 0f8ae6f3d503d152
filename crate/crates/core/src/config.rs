//! TOML experiment files.
//!
//! ```toml
//! name = "narrow"
//! seed = 7
//!
//! [model]
//! family = "gaussian"
//! dim = 2
//! mean = 1.0          # scalar or one value per coordinate
//! var = 0.01
//!
//! [sampler]
//! scheme = "smc"      # smc | pmd | srais
//! n_particles = 10000
//! rule = { kind = "ess", beta = 1.0 }
//!
//! [kernel]
//! n_mh_steps = 5
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::altschemes::{run_pmd, run_srais, GammaRule, KdeOptions};
use crate::error::{Error, Result};
use crate::model::GaussianPair;
use crate::schedule::StepSizes;
use crate::smc::{run_smc, AdaptiveRule, KernelConfig, ResamplingMethod, RunResult, Scheme, SmcSettings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub replicates: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    pub model: ModelConfig,
    pub sampler: SamplerConfig,
    #[serde(default)]
    pub kernel: KernelConfig,
    /// Output directory, overridable from the command line.
    #[serde(default)]
    pub output: Option<String>,
}

fn one() -> usize {
    1
}

fn default_max_steps() -> usize {
    10_000
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Gaussian,
}

/// A scalar broadcast to every coordinate, or one value per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Broadcast {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl Broadcast {
    pub fn expand(&self, dim: usize, key: &str) -> Result<Vec<f64>> {
        match self {
            Broadcast::Scalar(v) => Ok(vec![*v; dim]),
            Broadcast::Vector(v) if v.len() == dim => Ok(v.clone()),
            Broadcast::Vector(v) => Err(Error::Config(format!(
                "model.{key} has {} entries but dim = {dim}",
                v.len()
            ))),
        }
    }
}

/// Diagonal Gaussian target against a standard normal proposal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub family: Family,
    pub dim: usize,
    pub mean: Broadcast,
    pub var: Broadcast,
    /// Added to the log target, making it unnormalized.
    #[serde(default)]
    pub log_scale: f64,
}

impl ModelConfig {
    pub fn pair(&self) -> Result<GaussianPair> {
        if self.dim == 0 {
            return Err(Error::Config("model.dim must be positive".into()));
        }
        let mean = self.mean.expand(self.dim, "mean")?;
        let var = self.var.expand(self.dim, "var")?;
        Ok(GaussianPair::new(mean, var)
            .map_err(|e| Error::Config(e.to_string()))?
            .with_log_scale(self.log_scale))
    }
}

/// Step sizes for the Renyi rule or a fixed list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GammaSpec {
    Named(String),
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplerConfig {
    #[serde(default)]
    pub scheme: Scheme,
    pub n_particles: Option<usize>,
    #[serde(default)]
    pub resampling: ResamplingMethod,
    /// Temperature rule of the SMC sampler.
    pub rule: Option<AdaptiveRule>,
    /// PMD step sizes, or `"renyi"` / a list for SRAIS.
    pub gammas: Option<GammaSpec>,
    /// SRAIS batch sizes.
    pub batch_sizes: Option<Vec<usize>>,
    pub bandwidth: Option<f64>,
    #[serde(default)]
    pub fast_weights: bool,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let spec: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::Config("replicates must be at least 1".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        self.model.pair()?;
        self.kernel.validate().map_err(config_error)?;
        let s = &self.sampler;
        match s.scheme {
            Scheme::Smc => {
                self.smc_settings()?.validate().map_err(config_error)?;
            }
            Scheme::Pmd => {
                self.n_particles()?;
                self.pmd_gammas()?;
            }
            Scheme::Srais => {
                self.srais_plan()?;
            }
        }
        if let Some(h) = s.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::Config("sampler.bandwidth must be positive".into()));
            }
        }
        Ok(())
    }

    fn n_particles(&self) -> Result<usize> {
        self.sampler
            .n_particles
            .ok_or_else(|| Error::Config("sampler.n_particles is required".into()))
    }

    pub fn smc_settings(&self) -> Result<SmcSettings> {
        let rule = self
            .sampler
            .rule
            .clone()
            .ok_or_else(|| Error::Config("sampler.rule is required for scheme = \"smc\"".into()))?;
        Ok(SmcSettings {
            rule,
            n_particles: self.n_particles()?,
            kernel: self.kernel,
            resampling: self.sampler.resampling,
            max_steps: self.max_steps,
        })
    }

    fn pmd_gammas(&self) -> Result<StepSizes> {
        match &self.sampler.gammas {
            Some(GammaSpec::Fixed(g)) => StepSizes::new(g.clone()).map_err(config_error),
            _ => Err(Error::Config("scheme = \"pmd\" needs sampler.gammas as a list".into())),
        }
    }

    fn srais_plan(&self) -> Result<(Vec<usize>, GammaRule)> {
        let batches = self
            .sampler
            .batch_sizes
            .clone()
            .ok_or_else(|| Error::Config("scheme = \"srais\" needs sampler.batch_sizes".into()))?;
        let rule = match &self.sampler.gammas {
            None => GammaRule::Renyi,
            Some(GammaSpec::Named(n)) if n == "renyi" => GammaRule::Renyi,
            Some(GammaSpec::Named(n)) => {
                return Err(Error::Config(format!(
                    "unknown gamma rule {n:?}; expected \"renyi\" or a list"
                )))
            }
            Some(GammaSpec::Fixed(g)) => GammaRule::Fixed(StepSizes::new(g.clone()).map_err(config_error)?),
        };
        match &rule {
            GammaRule::Fixed(g) if g.len() != batches.len() => Err(Error::Config(format!(
                "{} step sizes given for {} batches",
                g.len(),
                batches.len()
            ))),
            GammaRule::Renyi if batches.iter().any(|&m| m < 2) => {
                Err(Error::Config("the Renyi rule needs batches of at least 2".into()))
            }
            _ if batches.is_empty() || batches.contains(&0) => {
                Err(Error::Config("batch sizes must be positive".into()))
            }
            _ => Ok((batches, rule)),
        }
    }

    fn kde_options(&self) -> KdeOptions {
        KdeOptions {
            bandwidth: self.sampler.bandwidth,
            fast_weights: self.sampler.fast_weights,
            resampling: self.sampler.resampling,
        }
    }

    /// Seed of replicate `r`.
    pub fn replicate_seed(&self, r: usize) -> u64 {
        self.seed.wrapping_add(r as u64)
    }

    /// Runs one replicate with the seed `seed`.
    pub fn run_with_seed(&self, seed: u64) -> Result<RunResult> {
        let pair = self.model.pair()?;
        match self.sampler.scheme {
            Scheme::Smc => run_smc(&pair, &self.smc_settings()?, seed),
            Scheme::Pmd => run_pmd(
                &pair,
                self.n_particles()?,
                &self.pmd_gammas()?,
                seed,
                &self.kde_options(),
            ),
            Scheme::Srais => {
                let (batches, rule) = self.srais_plan()?;
                run_srais(&pair, &batches, seed, &rule, &self.kde_options())
            }
        }
    }
}

fn config_error(e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NARROW: &str = r#"
name = "narrow"
seed = 3

[model]
family = "gaussian"
dim = 2
mean = 1.0
var = [0.01, 0.01]

[sampler]
scheme = "smc"
n_particles = 500
rule = { kind = "ess", beta = 1.0 }
"#;

    #[test]
    fn parses_and_broadcasts() {
        let spec = ExperimentSpec::from_toml_str(NARROW).unwrap();
        let pair = spec.model.pair().unwrap();
        assert_eq!(pair.mean(), &[1.0, 1.0]);
        assert_eq!(pair.var(), &[0.01, 0.01]);
        assert_eq!(spec.replicates, 1);
        assert_eq!(spec.kernel, KernelConfig::default());
        assert_eq!(
            spec.smc_settings().unwrap().rule,
            AdaptiveRule::EssBisection { beta: 1.0 }
        );
        let r = spec.run_with_seed(spec.replicate_seed(0)).unwrap();
        assert_eq!(r.lambdas.last(), Some(&1.0));
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            NARROW.replace("var = [0.01, 0.01]", "var = [0.01]"),
            NARROW.replace("var = [0.01, 0.01]", "var = -1.0"),
            NARROW.replace("rule = { kind = \"ess\", beta = 1.0 }", ""),
            NARROW.replace("beta = 1.0", "beta = 0.0"),
            NARROW.replace("family = \"gaussian\"", "family = \"student\""),
            NARROW.replace("seed = 3", "seed = 3\nbogus = 1"),
        ];
        for text in bad {
            assert!(
                matches!(ExperimentSpec::from_toml_str(&text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn kde_schemes_parse() {
        let pmd = NARROW
            .replace("scheme = \"smc\"", "scheme = \"pmd\"\ngammas = [0.5, 0.5, 1.0]")
            .replace("rule = { kind = \"ess\", beta = 1.0 }", "");
        let spec = ExperimentSpec::from_toml_str(&pmd).unwrap();
        assert_eq!(spec.run_with_seed(1).unwrap().n_steps, 3);

        let srais = NARROW
            .replace(
                "scheme = \"smc\"",
                "scheme = \"srais\"\nbatch_sizes = [50, 50]\ngammas = \"renyi\"",
            )
            .replace("n_particles = 500\n", "")
            .replace("rule = { kind = \"ess\", beta = 1.0 }", "");
        let spec = ExperimentSpec::from_toml_str(&srais).unwrap();
        assert_eq!(spec.run_with_seed(1).unwrap().final_cloud.len(), 100);
    }
}
