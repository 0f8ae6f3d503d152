//! Mirror-descent samplers whose proposal is a kernel density estimate:
//! particle mirror descent and adaptive importance sampling with a growing
//! particle pool.

mod kde;
mod pmd;
mod srais;

pub use kde::{silverman_bandwidth, KdeMixture};
pub use pmd::{run_pmd, KdeOptions};
pub use srais::{renyi_gamma, run_srais, GammaRule};
