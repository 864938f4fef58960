//! Workload driver for the `slsm` engine: the command language behind
//! `slsm run`, seeded workload generation, phased benchmarks and grid
//! sweeps that emit CSV.

pub mod bench;
pub mod error;
pub mod params;
pub mod script;
pub mod sweep;
pub mod workload;

pub use bench::{bench, bench_ops, BenchFlags, BenchReport};
pub use error::{CliError, Result};
pub use params::ParamArgs;
pub use script::{parse_line, run_script, Command};
pub use sweep::{sweep, Grid, SweepOutput};
pub use workload::{generate, KeyDist, LookupKeys, WorkloadSpec};
