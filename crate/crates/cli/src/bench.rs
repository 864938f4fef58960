//! Phased benchmark: every write in workload order, then every lookup
//! (optionally split across reader threads). One CSV row per run.

use std::path::PathBuf;
use std::sync::Barrier;
use std::time::{Duration, Instant};

use slsm::{Engine, EngineOptions, TuningParams};

use crate::error::Result;
use crate::script::Command;
use crate::workload::{generate, WorkloadSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BenchFlags {
    pub bloom: bool,
    pub merge_thread: bool,
    /// Parent directory for the throwaway store; the system temp dir if unset.
    pub data: Option<PathBuf>,
    /// Seeds skiplist level generation.
    pub engine_seed: u64,
}

impl Default for BenchFlags {
    fn default() -> Self {
        BenchFlags {
            bloom: true,
            merge_thread: true,
            data: None,
            engine_seed: EngineOptions::default().seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchReport {
    pub params: TuningParams,
    pub spec: WorkloadSpec,
    pub bloom: bool,
    pub merge_thread: bool,
    pub inserts: usize,
    pub lookups: usize,
    /// Includes waiting for the last merge.
    pub insert_time: Duration,
    pub lookup_time: Duration,
    pub wall_time: Duration,
    pub max_insert_gap: Duration,
    pub lookup_hits: u64,
    pub cascades: u64,
    pub levels: usize,
    pub disk_runs: usize,
}

fn per_sec(n: usize, t: Duration) -> f64 {
    if n == 0 {
        return 0.0;
    }
    n as f64 / t.as_secs_f64().max(1e-9)
}

pub const HEADER: [&str; 31] = [
    "R",
    "Rn",
    "epsilon",
    "D",
    "m",
    "mu",
    "Dm",
    "ops",
    "lookup_ratio",
    "dist",
    "dist_a",
    "dist_b",
    "range_size",
    "lookup_keys",
    "seed",
    "reader_threads",
    "bloom",
    "merge_thread",
    "inserts",
    "lookups",
    "insert_secs",
    "lookup_secs",
    "wall_secs",
    "insert_ops_per_sec",
    "lookup_ops_per_sec",
    "weighted_ops_per_sec",
    "max_insert_gap_us",
    "lookup_hits",
    "cascades",
    "levels",
    "disk_runs",
];

/// Leading columns that identify a configuration; the rest are results.
pub const KEY_COLUMNS: usize = 18;

impl BenchReport {
    pub fn insert_throughput(&self) -> f64 {
        per_sec(self.inserts, self.insert_time)
    }

    pub fn lookup_throughput(&self) -> f64 {
        per_sec(self.lookups, self.lookup_time)
    }

    /// All operations over the time spent in both phases.
    pub fn weighted_throughput(&self) -> f64 {
        per_sec(self.inserts + self.lookups, self.insert_time + self.lookup_time)
    }

    pub fn record(&self) -> Vec<String> {
        let mut row = config_columns(&self.params, &self.spec, self.bloom, self.merge_thread);
        row.extend([
            self.inserts.to_string(),
            self.lookups.to_string(),
            format!("{:.6}", self.insert_time.as_secs_f64()),
            format!("{:.6}", self.lookup_time.as_secs_f64()),
            format!("{:.6}", self.wall_time.as_secs_f64()),
            format!("{:.1}", self.insert_throughput()),
            format!("{:.1}", self.lookup_throughput()),
            format!("{:.1}", self.weighted_throughput()),
            format!("{:.1}", self.max_insert_gap.as_secs_f64() * 1e6),
            self.lookup_hits.to_string(),
            self.cascades.to_string(),
            self.levels.to_string(),
            self.disk_runs.to_string(),
        ]);
        row
    }
}

/// The first `KEY_COLUMNS` fields of a row.
pub fn config_columns(p: &TuningParams, s: &WorkloadSpec, bloom: bool, merge_thread: bool) -> Vec<String> {
    let (a, b) = s.dist.shape();
    vec![
        p.runs.to_string(),
        p.run_capacity.to_string(),
        p.epsilon.to_string(),
        p.disk_runs.to_string(),
        p.merge_fraction.to_string(),
        p.fence_page.to_string(),
        (p.disk_runs as f64 * p.merge_fraction).to_string(),
        s.ops.to_string(),
        s.lookup_ratio.to_string(),
        s.dist.name().to_string(),
        a.to_string(),
        b.to_string(),
        s.range_size.unwrap_or(0).to_string(),
        s.lookup_keys.to_string(),
        s.seed.to_string(),
        s.reader_threads.to_string(),
        bloom.to_string(),
        merge_thread.to_string(),
    ]
}

/// Generates the workload for `spec` and benchmarks it.
pub fn bench(spec: &WorkloadSpec, params: TuningParams, flags: &BenchFlags) -> Result<BenchReport> {
    let ops = generate(spec)?;
    bench_ops(&ops, spec, params, flags)
}

/// Benchmarks a pre-generated operation list against a fresh store.
pub fn bench_ops(
    ops: &[Command],
    spec: &WorkloadSpec,
    params: TuningParams,
    flags: &BenchFlags,
) -> Result<BenchReport> {
    let spec = spec.validate()?;
    let params = params.validate()?;
    let dir = match &flags.data {
        Some(parent) => {
            std::fs::create_dir_all(parent)?;
            tempfile::Builder::new().prefix("bench-").tempdir_in(parent)?
        }
        None => tempfile::Builder::new().prefix("slsm-bench-").tempdir()?,
    };
    let options = EngineOptions {
        seed: flags.engine_seed,
        bloom: flags.bloom,
        merge_thread: flags.merge_thread,
    };
    let mut engine = Engine::open(dir.path(), params, options)?;
    let wall = Instant::now();

    let (writes, reads): (Vec<Command>, Vec<Command>) = ops
        .iter()
        .filter(|op| **op != Command::Quit)
        .partition(|op| matches!(op, Command::Put(..) | Command::Delete(_)));

    let mut max_gap = Duration::ZERO;
    let start = Instant::now();
    let mut last = start;
    for op in &writes {
        match *op {
            Command::Put(k, v) => engine.put(k, v)?,
            Command::Delete(k) => engine.delete(k)?,
            _ => unreachable!(),
        }
        let now = Instant::now();
        max_gap = max_gap.max(now - last);
        last = now;
    }
    engine.wait_for_merge()?;
    let insert_time = start.elapsed();

    let (lookup_hits, lookup_time) = run_lookups(&engine, &reads, spec.reader_threads)?;
    let wall_time = wall.elapsed();

    let shape = engine.level_shape()?;
    let report = BenchReport {
        params,
        spec,
        bloom: flags.bloom,
        merge_thread: flags.merge_thread,
        inserts: writes.len(),
        lookups: reads.len(),
        insert_time,
        lookup_time,
        wall_time,
        max_insert_gap: max_gap,
        lookup_hits,
        cascades: engine.cascades()?,
        levels: shape.len(),
        disk_runs: shape.iter().map(Vec::len).sum(),
    };
    drop(engine);
    dir.close()?;
    Ok(report)
}

fn lookup_chunk(engine: &Engine, ops: &[Command]) -> Result<u64> {
    let mut hits = 0u64;
    for op in ops {
        match *op {
            Command::Get(k) => hits += engine.get(k)?.is_some() as u64,
            Command::Range(lo, hi) => hits += engine.range(lo, hi)?.len() as u64,
            _ => unreachable!(),
        }
    }
    Ok(hits)
}

/// Runs the lookups on `threads` threads, each taking a contiguous share.
/// Returns the hit count and the time from a common start until the last
/// thread finishes.
pub fn run_lookups(engine: &Engine, ops: &[Command], threads: usize) -> Result<(u64, Duration)> {
    if threads <= 1 {
        let start = Instant::now();
        let hits = lookup_chunk(engine, ops)?;
        return Ok((hits, start.elapsed()));
    }
    let chunk = ops.len().div_ceil(threads).max(1);
    let barrier = Barrier::new(threads + 1);
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..threads)
            .map(|i| {
                let part = ops.get(i * chunk..((i + 1) * chunk).min(ops.len())).unwrap_or(&[]);
                let barrier = &barrier;
                s.spawn(move || {
                    barrier.wait();
                    lookup_chunk(engine, part)
                })
            })
            .collect();
        barrier.wait();
        let start = Instant::now();
        let mut hits = 0;
        for h in handles {
            hits += h.join().expect("reader thread panicked")?;
        }
        Ok((hits, start.elapsed()))
    })
}
