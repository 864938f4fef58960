//! Tuning-parameter flags shared by every subcommand. Precedence is flag,
//! then `SLSM_*` environment variable, then the built-in default.

use clap::Args;
use slsm::{ParamError, TuningParams};

#[derive(Args, Clone, Debug, Default, PartialEq)]
pub struct ParamArgs {
    /// Memory-buffer runs (R)
    #[arg(long = "runs", visible_alias = "R", env = "SLSM_R", value_name = "N")]
    pub runs: Option<usize>,
    /// Entries per memory run (R_n)
    #[arg(long = "run-size", visible_alias = "Rn", env = "SLSM_RN", value_name = "N")]
    pub run_capacity: Option<usize>,
    /// Bloom filter false-positive target
    #[arg(long, env = "SLSM_EPSILON", value_name = "P")]
    pub epsilon: Option<f64>,
    /// Disk runs per level (D)
    #[arg(long = "disk-runs", visible_alias = "D", env = "SLSM_D", value_name = "N")]
    pub disk_runs: Option<usize>,
    /// Fraction of runs merged per flush or cascade (m)
    #[arg(long = "merge-fraction", visible_alias = "m", env = "SLSM_M", value_name = "F")]
    pub merge_fraction: Option<f64>,
    /// Fence pointer page size in entries (mu)
    #[arg(long = "fence-page", visible_alias = "mu", env = "SLSM_MU", value_name = "N")]
    pub fence_page: Option<usize>,
}

impl ParamArgs {
    pub fn resolve(&self) -> Result<TuningParams, ParamError> {
        self.apply(TuningParams::default())
    }

    /// Overrides the fields of `base` that were given.
    pub fn apply(&self, base: TuningParams) -> Result<TuningParams, ParamError> {
        TuningParams {
            runs: self.runs.unwrap_or(base.runs),
            run_capacity: self.run_capacity.unwrap_or(base.run_capacity),
            epsilon: self.epsilon.unwrap_or(base.epsilon),
            disk_runs: self.disk_runs.unwrap_or(base.disk_runs),
            merge_fraction: self.merge_fraction.unwrap_or(base.merge_fraction),
            fence_page: self.fence_page.unwrap_or(base.fence_page),
        }
        .validate()
    }
}
