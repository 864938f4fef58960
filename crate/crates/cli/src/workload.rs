//! Seeded workload generation.

use std::collections::HashSet;
use std::fmt;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use slsm::Key;

use crate::error::{CliError, Result};
use crate::script::Command;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KeyDist {
    /// Inclusive bounds.
    Uniform { lo: Key, hi: Key },
    /// Rounded half to even; draws outside the key range are redrawn.
    Normal { mean: f64, stddev: f64 },
}

impl KeyDist {
    pub fn full_range() -> Self {
        KeyDist::Uniform {
            lo: Key::MIN,
            hi: Key::MAX,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KeyDist::Uniform { .. } => "uniform",
            KeyDist::Normal { .. } => "normal",
        }
    }

    /// The two shape parameters: (lo, hi) or (mean, stddev).
    pub fn shape(&self) -> (f64, f64) {
        match *self {
            KeyDist::Uniform { lo, hi } => (lo as f64, hi as f64),
            KeyDist::Normal { mean, stddev } => (mean, stddev),
        }
    }
}

/// Where lookup keys come from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum LookupKeys {
    /// Fresh draws from the key distribution.
    #[default]
    Any,
    /// Draws that were never inserted (redrawn until absent).
    Missing,
    /// Keys inserted earlier in the workload.
    Present,
}

impl fmt::Display for LookupKeys {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LookupKeys::Any => "any",
            LookupKeys::Missing => "missing",
            LookupKeys::Present => "present",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WorkloadSpec {
    pub ops: usize,
    /// Fraction of operations that are lookups.
    pub lookup_ratio: f64,
    pub dist: KeyDist,
    /// When set, lookups are range queries `[k, k + size)`.
    pub range_size: Option<u32>,
    pub lookup_keys: LookupKeys,
    pub seed: u64,
    pub reader_threads: usize,
}

impl Default for WorkloadSpec {
    fn default() -> Self {
        WorkloadSpec {
            ops: 100_000,
            lookup_ratio: 0.5,
            dist: KeyDist::full_range(),
            range_size: None,
            lookup_keys: LookupKeys::Any,
            seed: 1,
            reader_threads: 1,
        }
    }
}

impl WorkloadSpec {
    pub fn validate(self) -> Result<Self> {
        let bad = |msg: String| Err(CliError::Workload(msg));
        if self.ops < 1 {
            return bad("ops must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.lookup_ratio) {
            return bad(format!("lookup ratio {} not in [0, 1]", self.lookup_ratio));
        }
        if self.reader_threads < 1 {
            return bad("reader threads must be >= 1".into());
        }
        match self.dist {
            KeyDist::Uniform { lo, hi } if lo > hi => {
                return bad(format!("uniform bounds {lo} > {hi}"));
            }
            KeyDist::Normal { mean, stddev } if !(stddev > 0.0 && stddev.is_finite() && mean.is_finite()) => {
                return bad(format!("normal({mean}, {stddev}) needs finite mean and stddev > 0"));
            }
            _ => {}
        }
        if self.lookup_keys == LookupKeys::Missing {
            if let KeyDist::Uniform { lo, hi } = self.dist {
                // leave room for misses
                let width = hi as i64 - lo as i64 + 1;
                if width <= self.inserts() as i64 {
                    return bad("key range too narrow for missing-key lookups".into());
                }
            }
        }
        Ok(self)
    }

    pub fn lookups(&self) -> usize {
        (self.lookup_ratio * self.ops as f64).round() as usize
    }

    pub fn inserts(&self) -> usize {
        self.ops - self.lookups()
    }
}

struct KeySource {
    dist: KeyDist,
    normal: Option<Normal<f64>>,
}

impl KeySource {
    fn new(dist: KeyDist) -> Self {
        let normal = match dist {
            KeyDist::Normal { mean, stddev } => Some(Normal::new(mean, stddev).expect("validated")),
            KeyDist::Uniform { .. } => None,
        };
        KeySource { dist, normal }
    }

    fn draw(&self, rng: &mut impl Rng) -> Key {
        match (self.dist, &self.normal) {
            (KeyDist::Uniform { lo, hi }, _) => rng.random_range(lo..=hi),
            (_, Some(normal)) => loop {
                let x = normal.sample(rng).round_ties_even();
                if x >= Key::MIN as f64 && x <= Key::MAX as f64 {
                    break x as Key;
                }
            },
            _ => unreachable!(),
        }
    }
}

/// Generates the operation sequence. Exactly `spec.lookups()` operations
/// are lookups, at positions chosen by the seeded shuffle.
pub fn generate(spec: &WorkloadSpec) -> Result<Vec<Command>> {
    let spec = spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut is_lookup = vec![false; spec.ops];
    is_lookup[..spec.lookups()].fill(true);
    is_lookup.shuffle(&mut rng);

    // Missing-key lookups need the whole insert set up front.
    let source = KeySource::new(spec.dist);
    let mut inserted: Vec<Key> = Vec::with_capacity(spec.inserts());
    let mut ops = Vec::with_capacity(spec.ops);
    let mut pending_lookups = Vec::new();
    for (i, &lookup) in is_lookup.iter().enumerate() {
        if lookup {
            let key = match spec.lookup_keys {
                LookupKeys::Any => source.draw(&mut rng),
                LookupKeys::Present if !inserted.is_empty() => inserted[rng.random_range(0..inserted.len())],
                LookupKeys::Present => source.draw(&mut rng),
                LookupKeys::Missing => {
                    pending_lookups.push(i);
                    0
                }
            };
            ops.push(lookup_op(key, spec.range_size));
        } else {
            let key = source.draw(&mut rng);
            inserted.push(key);
            ops.push(Command::Put(key, rng.random()));
        }
    }
    if !pending_lookups.is_empty() {
        let all: HashSet<Key> = inserted.into_iter().collect();
        for i in pending_lookups {
            let key = loop {
                let k = source.draw(&mut rng);
                if !all.contains(&k) {
                    break k;
                }
            };
            ops[i] = lookup_op(key, spec.range_size);
        }
    }
    Ok(ops)
}

fn lookup_op(key: Key, range_size: Option<u32>) -> Command {
    match range_size {
        Some(size) => Command::Range(key, key.saturating_add_unsigned(size)),
        None => Command::Get(key),
    }
}

pub fn write_script(ops: &[Command], out: &mut impl Write) -> std::io::Result<()> {
    for op in ops {
        writeln!(out, "{op}")?;
    }
    out.flush()
}
