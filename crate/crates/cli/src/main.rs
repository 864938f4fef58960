use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use slsm::{cost_model, Engine, EngineOptions};
use slsm_cli::{
    bench, generate, run_script, sweep, BenchFlags, Grid, KeyDist, LookupKeys, ParamArgs, Result,
    SweepOutput, WorkloadSpec,
};

#[derive(Parser)]
#[command(name = "slsm", version, about = "Skiplist LSM tree workload driver")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Execute a command script from stdin (p k v | g k | r lo hi | d k | q)
    Run {
        /// Store directory; a throwaway directory if omitted
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        engine: EngineArgs,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Print a generated workload script to stdout
    Gen {
        #[command(flatten)]
        workload: WorkloadArgs,
    },
    /// Benchmark one configuration and print a CSV row
    Bench {
        #[command(flatten)]
        workload: WorkloadArgs,
        #[command(flatten)]
        engine: EngineArgs,
        /// Parent directory for the benchmark store
        #[arg(long)]
        data: Option<PathBuf>,
        /// Run the benchmark this many times, one row each
        #[arg(long, default_value_t = 1)]
        repeat: usize,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Benchmark every point of a parameter grid
    Sweep {
        /// Grid file: one `name=v1,v2,...` line per axis
        #[arg(long)]
        grid: PathBuf,
        /// Append rows here, skipping points already present
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        workload: WorkloadArgs,
        #[command(flatten)]
        engine: EngineArgs,
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Evaluate the closed-form insert and lookup cost estimates
    Cost {
        /// Number of stored elements
        #[arg(long, default_value_t = 100_000_000)]
        n: u64,
        #[command(flatten)]
        params: ParamArgs,
    },
}

#[derive(Args)]
struct EngineArgs {
    /// Disable Bloom filters
    #[arg(long)]
    no_bloom: bool,
    /// Merge synchronously on the writer thread
    #[arg(long)]
    no_merge_thread: bool,
    /// Seed for skiplist level generation
    #[arg(long, default_value_t = EngineOptions::default().seed)]
    engine_seed: u64,
}

impl EngineArgs {
    fn options(&self) -> EngineOptions {
        EngineOptions {
            seed: self.engine_seed,
            bloom: !self.no_bloom,
            merge_thread: !self.no_merge_thread,
        }
    }

    fn flags(&self, data: Option<PathBuf>) -> BenchFlags {
        BenchFlags {
            bloom: !self.no_bloom,
            merge_thread: !self.no_merge_thread,
            data,
            engine_seed: self.engine_seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DistName {
    Uniform,
    Normal,
}

#[derive(Args)]
struct WorkloadArgs {
    /// Total operations
    #[arg(long, default_value_t = 100_000)]
    ops: usize,
    /// Fraction of operations that are lookups
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    dist: DistName,
    /// Smallest uniform key
    #[arg(long, default_value_t = i32::MIN, allow_negative_numbers = true)]
    lo: i32,
    /// Largest uniform key
    #[arg(long, default_value_t = i32::MAX, allow_negative_numbers = true)]
    hi: i32,
    /// Normal mean
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    mean: f64,
    /// Normal standard deviation
    #[arg(long, default_value_t = 1e6)]
    stddev: f64,
    /// Make lookups range queries of this width
    #[arg(long)]
    range_size: Option<u32>,
    /// Where lookup keys come from
    #[arg(long, value_enum, default_value_t = LookupKeys::Any)]
    lookups: LookupKeys,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Reader threads for the lookup phase
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

impl WorkloadArgs {
    fn spec(&self) -> WorkloadSpec {
        let dist = match self.dist {
            DistName::Uniform => KeyDist::Uniform { lo: self.lo, hi: self.hi },
            DistName::Normal => KeyDist::Normal {
                mean: self.mean,
                stddev: self.stddev,
            },
        };
        WorkloadSpec {
            ops: self.ops,
            lookup_ratio: self.ratio,
            dist,
            range_size: self.range_size,
            lookup_keys: self.lookups,
            seed: self.seed,
            reader_threads: self.threads,
        }
    }
}

fn run(cmd: Cmd) -> Result<()> {
    let stdout = io::stdout();
    let mut out = BufWriter::new(stdout.lock());
    match cmd {
        Cmd::Run { data, engine, params } => {
            let params = params.resolve()?;
            let scratch;
            let dir = match data {
                Some(d) => d,
                None => {
                    scratch = tempfile::tempdir()?;
                    scratch.path().to_path_buf()
                }
            };
            let mut db = Engine::open(&dir, params, engine.options())?;
            run_script(io::stdin().lock(), &mut db, &mut out, &mut io::stderr())?;
            db.close()?;
        }
        Cmd::Gen { workload } => {
            let ops = generate(&workload.spec())?;
            slsm_cli::workload::write_script(&ops, &mut out)?;
        }
        Cmd::Bench {
            workload,
            engine,
            data,
            repeat,
            params,
        } => {
            let params = params.resolve()?;
            let flags = engine.flags(data);
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(slsm_cli::bench::HEADER)?;
            for _ in 0..repeat {
                w.write_record(bench(&workload.spec(), params, &flags)?.record())?;
                w.flush()?;
            }
        }
        Cmd::Sweep {
            grid,
            out: file,
            workload,
            engine,
            data,
            params,
        } => {
            let grid = Grid::load(&grid)?;
            let stats = sweep(
                &grid,
                params.resolve()?,
                workload.spec(),
                &engine.flags(data),
                &SweepOutput { file },
                &mut out,
                &mut io::stderr(),
            )?;
            eprintln!(
                "{} run, {} already done, {} invalid",
                stats.ran, stats.resumed, stats.invalid
            );
        }
        Cmd::Cost { n, params } => {
            let params = params.resolve()?;
            let c = cost_model::<f64>(&params, n)?;
            writeln!(out, "params: {params}")?;
            writeln!(
                out,
                "levels: {}{}",
                c.levels,
                if c.linear_levels { " (round(m*D) = 1: linear growth)" } else { "" }
            )?;
            writeln!(out, "insert: {:.4}", c.insert)?;
            writeln!(out, "lookup: {:.6}", c.lookup)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse().cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("slsm: {e}");
            ExitCode::FAILURE
        }
    }
}
