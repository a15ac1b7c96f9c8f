//! Global flags. Every flag has a default here and can be overridden by an
//! environment variable named `SEQMODELS_<FLAG>`.

use clap::Args;
use seqmodels::linalg::EigenOptions;

pub const ENV_PREFIX: &str = "SEQMODELS_";

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 100_000;
pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_THREADS: usize = 0;

#[derive(Args, Clone, Debug, PartialEq)]
pub struct Config {
    /// Tolerance for validation and comparisons.
    #[arg(long, global = true, env = "SEQMODELS_TOL", default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    /// Iteration cap for eigenvalue solvers.
    #[arg(long, global = true, env = "SEQMODELS_MAX_ITER", default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,

    /// Seed for sampling and random gallery models.
    #[arg(long, global = true, env = "SEQMODELS_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,

    /// Worker threads for enumeration; 0 uses every core.
    #[arg(long, global = true, env = "SEQMODELS_THREADS", default_value_t = DEFAULT_THREADS)]
    pub threads: usize,

    /// Print `key=value` records instead of the readable layout.
    #[arg(long, global = true, env = "SEQMODELS_PORCELAIN")]
    pub porcelain: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            seed: DEFAULT_SEED,
            threads: DEFAULT_THREADS,
            porcelain: false,
        }
    }
}

impl Config {
    pub fn eigen(&self) -> EigenOptions {
        EigenOptions {
            max_iter: self.max_iter,
            ..EigenOptions::default()
        }
    }
}
