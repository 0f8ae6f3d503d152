//! Adaptive tempered sequential Monte Carlo.

mod cloud;
mod kernel;
mod resample;
mod rules;
mod sampler;

pub use cloud::{ess, incremental_log_weights, scores, ParticleCloud};
pub use kernel::{rwm_move, KernelConfig, MoveOutcome};
pub use resample::{resample, resample_indices, ResamplingMethod};
pub(crate) use rules::kl_estimate;
pub use rules::{next_lambda, AdaptiveRule, LambdaChoice};
pub use sampler::{initial_cloud, run_smc, RunResult, RunSummary, Scheme, SmcSettings};
