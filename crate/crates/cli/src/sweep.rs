//! Grid sweeps: one benchmark row per point of a Cartesian product.
//!
//! A grid file has one axis per line, `name=v1,v2,...`; `#` starts a
//! comment. Axes: `R`, `Rn`, `epsilon`, `D`, `m`, `mu`, `ratio`, `threads`.
//! The last axis varies fastest.

use std::collections::HashSet;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use slsm::TuningParams;

use crate::bench::{bench, config_columns, BenchFlags, HEADER, KEY_COLUMNS};
use crate::error::{CliError, Result};
use crate::workload::WorkloadSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Runs,
    RunCapacity,
    Epsilon,
    DiskRuns,
    MergeFraction,
    FencePage,
    LookupRatio,
    ReaderThreads,
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "R" => Axis::Runs,
            "Rn" | "RN" | "R_n" => Axis::RunCapacity,
            "epsilon" | "eps" => Axis::Epsilon,
            "D" => Axis::DiskRuns,
            "m" => Axis::MergeFraction,
            "mu" => Axis::FencePage,
            "ratio" => Axis::LookupRatio,
            "threads" => Axis::ReaderThreads,
            _ => return Err(format!("unknown axis {s:?}")),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Setting {
    Int(usize),
    Float(f64),
}

impl Axis {
    fn integral(self) -> bool {
        !matches!(self, Axis::Epsilon | Axis::MergeFraction | Axis::LookupRatio)
    }

    fn parse(self, raw: &str) -> Option<Setting> {
        if self.integral() {
            raw.parse().ok().map(Setting::Int)
        } else {
            raw.parse().ok().map(Setting::Float)
        }
    }

    fn apply(self, v: Setting, p: &mut TuningParams, s: &mut WorkloadSpec) {
        match (self, v) {
            (Axis::Runs, Setting::Int(n)) => p.runs = n,
            (Axis::RunCapacity, Setting::Int(n)) => p.run_capacity = n,
            (Axis::DiskRuns, Setting::Int(n)) => p.disk_runs = n,
            (Axis::FencePage, Setting::Int(n)) => p.fence_page = n,
            (Axis::ReaderThreads, Setting::Int(n)) => s.reader_threads = n,
            (Axis::Epsilon, Setting::Float(x)) => p.epsilon = x,
            (Axis::MergeFraction, Setting::Float(x)) => p.merge_fraction = x,
            (Axis::LookupRatio, Setting::Float(x)) => s.lookup_ratio = x,
            _ => unreachable!("setting kind checked at parse time"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Grid {
    pub axes: Vec<(Axis, Vec<Setting>)>,
}

impl Grid {
    pub fn parse(text: &str, path: &Path) -> Result<Grid> {
        let err = |line: usize, reason: String| CliError::Grid {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut axes: Vec<(Axis, Vec<Setting>)> = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, values) = line
                .split_once('=')
                .ok_or_else(|| err(n + 1, "expected name=v1,v2,...".into()))?;
            let axis: Axis = name.trim().parse().map_err(|e| err(n + 1, e))?;
            if axes.iter().any(|(a, _)| *a == axis) {
                return Err(err(n + 1, format!("axis {} repeated", name.trim())));
            }
            let settings = values
                .split(',')
                .map(str::trim)
                .filter(|v| !v.is_empty())
                .map(|v| axis.parse(v).ok_or_else(|| err(n + 1, format!("bad value {v:?}"))))
                .collect::<Result<Vec<_>>>()?;
            if settings.is_empty() {
                return Err(err(n + 1, "no values".into()));
            }
            axes.push((axis, settings));
        }
        if axes.is_empty() {
            return Err(err(0, "empty grid".into()));
        }
        Ok(Grid { axes })
    }

    pub fn load(path: &Path) -> Result<Grid> {
        Grid::parse(&fs::read_to_string(path)?, path)
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|(_, v)| v.len()).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every point, last axis fastest, applied over the base configuration.
    pub fn points(&self, params: TuningParams, spec: WorkloadSpec) -> Vec<(TuningParams, WorkloadSpec)> {
        let mut out = Vec::with_capacity(self.len());
        for mut i in 0..self.len() {
            let (mut p, mut s) = (params, spec);
            for (axis, values) in self.axes.iter().rev() {
                axis.apply(values[i % values.len()], &mut p, &mut s);
                i /= values.len();
            }
            out.push((p, s));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub ran: usize,
    /// Points already present in the output file.
    pub resumed: usize,
    /// Points whose parameters do not validate.
    pub invalid: usize,
}

/// Configuration keys already recorded in `path`.
fn completed(path: &Path) -> Result<HashSet<Vec<String>>> {
    let mut done = HashSet::new();
    if !path.exists() || fs::metadata(path)?.len() == 0 {
        return Ok(done);
    }
    let mut rdr = csv::Reader::from_path(path)?;
    let header: Vec<String> = rdr.headers()?.iter().map(String::from).collect();
    if header != HEADER {
        return Err(CliError::Workload(format!(
            "{} has a different header; refusing to append",
            path.display()
        )));
    }
    for rec in rdr.records() {
        let rec = rec?;
        done.insert(rec.iter().take(KEY_COLUMNS).map(String::from).collect());
    }
    Ok(done)
}

pub struct SweepOutput {
    /// Append here and skip completed points; stdout otherwise.
    pub file: Option<PathBuf>,
}

/// Runs every point not already recorded. Invalid points are reported on
/// `diag` and skipped.
pub fn sweep(
    grid: &Grid,
    params: TuningParams,
    spec: WorkloadSpec,
    flags: &BenchFlags,
    output: &SweepOutput,
    stdout: &mut impl Write,
    diag: &mut impl Write,
) -> Result<SweepStats> {
    let done = match &output.file {
        Some(path) => completed(path)?,
        None => HashSet::new(),
    };
    let mut stats = SweepStats::default();
    let (sink, fresh): (Box<dyn Write + '_>, bool) = match &output.file {
        Some(path) => {
            let fresh = !path.exists() || fs::metadata(path)?.len() == 0;
            let f = OpenOptions::new().create(true).append(true).open(path)?;
            (Box::new(f), fresh)
        }
        None => (Box::new(&mut *stdout), true),
    };
    let mut writer = csv::Writer::from_writer(sink);
    if fresh {
        writer.write_record(HEADER)?;
    }
    writer.flush()?;

    for (p, s) in grid.points(params, spec) {
        let p = match p.validate() {
            Ok(p) => p,
            Err(e) => {
                writeln!(diag, "skipping {p}: {e}")?;
                stats.invalid += 1;
                continue;
            }
        };
        if let Err(e) = s.validate() {
            writeln!(diag, "skipping point: {e}")?;
            stats.invalid += 1;
            continue;
        }
        if done.contains(&config_columns(&p, &s, flags.bloom, flags.merge_thread)) {
            stats.resumed += 1;
            continue;
        }
        let report = bench(&s, p, flags)?;
        writer.write_record(report.record())?;
        writer.flush()?;
        stats.ran += 1;
    }
    Ok(stats)
}
