//! Entries and the tuning parameter set shared by every tier.

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::num::Scalar;

/// A key, its value, and a tombstone flag.
///
/// Tombstones carry a zero value so two deletes of the same key are
/// byte-identical once persisted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Entry<K, V> {
    pub key: K,
    pub value: V,
    pub tombstone: bool,
}

impl<K: Scalar, V: Scalar> Entry<K, V> {
    pub fn put(key: K, value: V) -> Self {
        Entry {
            key,
            value,
            tombstone: false,
        }
    }

    pub fn tombstone(key: K) -> Self {
        Entry {
            key,
            value: V::zero(),
            tombstone: true,
        }
    }

    /// The live value, or `None` for a tombstone.
    pub fn live_value(&self) -> Option<V> {
        (!self.tombstone).then_some(self.value)
    }

    /// Orders entries by key only.
    pub fn cmp_key(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("R (runs) must be >= 1")]
    Runs,
    #[error("R_n (run capacity) must be >= 1")]
    RunCapacity,
    #[error("epsilon out of range: {0} not in (0, 1)")]
    Epsilon(f64),
    #[error("D (disk runs per level) must be >= 1")]
    DiskRuns,
    #[error("m out of range: {0} not in (0, 1]")]
    MergeFraction(f64),
    #[error("mu (fence page size) must be >= 1")]
    FencePage,
    #[error("m*R rounds to {0}, need >= 1")]
    FlushRuns(usize),
    #[error("m*D rounds to {0}, need >= 1")]
    CascadeRuns(usize),
    #[error("cannot parse {name}={value}")]
    Parse { name: String, value: String },
}

/// The engine's tuning knobs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TuningParams {
    /// R: number of skiplist runs in the memory buffer.
    pub runs: usize,
    /// R_n: maximum distinct keys per memory run.
    pub run_capacity: usize,
    /// Bloom filter false-positive target.
    pub epsilon: f64,
    /// D: disk runs per level.
    pub disk_runs: usize,
    /// m: fraction of runs merged on flush and on cascade.
    pub merge_fraction: f64,
    /// mu: entries per fence-pointer page.
    pub fence_page: usize,
}

impl Default for TuningParams {
    fn default() -> Self {
        TuningParams {
            runs: 50,
            run_capacity: 800,
            epsilon: 0.001,
            disk_runs: 20,
            merge_fraction: 1.0,
            fence_page: 512,
        }
    }
}

/// Rounds half away from zero; inputs here are always positive.
fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

impl TuningParams {
    /// Checks every constraint, reporting the first one violated.
    pub fn validate(self) -> Result<Self, ParamError> {
        if self.runs < 1 {
            return Err(ParamError::Runs);
        }
        if self.run_capacity < 1 {
            return Err(ParamError::RunCapacity);
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(ParamError::Epsilon(self.epsilon));
        }
        if self.disk_runs < 1 {
            return Err(ParamError::DiskRuns);
        }
        if !(self.merge_fraction > 0.0 && self.merge_fraction <= 1.0) {
            return Err(ParamError::MergeFraction(self.merge_fraction));
        }
        if self.fence_page < 1 {
            return Err(ParamError::FencePage);
        }
        let flush = self.flush_runs();
        if flush < 1 {
            return Err(ParamError::FlushRuns(flush));
        }
        let cascade = self.cascade_runs();
        if cascade < 1 {
            return Err(ParamError::CascadeRuns(cascade));
        }
        Ok(self)
    }

    /// round(m·R): memory runs handed to disk per flush.
    pub fn flush_runs(&self) -> usize {
        round_half_up(self.merge_fraction * self.runs as f64)
    }

    /// round(m·D): runs of a full level merged one level down.
    pub fn cascade_runs(&self) -> usize {
        round_half_up(self.merge_fraction * self.disk_runs as f64)
    }

    /// Entries in one flush when every flushed run is full.
    pub fn flush_entries(&self) -> usize {
        self.flush_runs() * self.run_capacity
    }

    /// Upper bound on entries in a single run at `level` (1-based).
    pub fn level_run_capacity(&self, level: usize) -> u128 {
        let growth = self.cascade_runs() as u128;
        let exp = level.saturating_sub(1) as u32;
        self.flush_entries() as u128 * growth.saturating_pow(exp)
    }

    /// Defaults overridden by `SLSM_R`, `SLSM_RN`, `SLSM_EPSILON`, `SLSM_D`,
    /// `SLSM_M` and `SLSM_MU` when set.
    pub fn from_env() -> Result<Self, ParamError> {
        Self::from_vars(|name| std::env::var(name).ok())
    }

    /// Like [`TuningParams::from_env`] with an explicit variable lookup.
    pub fn from_vars(lookup: impl Fn(&str) -> Option<String>) -> Result<Self, ParamError> {
        fn parse<T: std::str::FromStr>(
            lookup: &impl Fn(&str) -> Option<String>,
            name: &str,
            slot: &mut T,
        ) -> Result<(), ParamError> {
            if let Some(raw) = lookup(name) {
                *slot = raw.trim().parse().map_err(|_| ParamError::Parse {
                    name: name.to_string(),
                    value: raw.clone(),
                })?;
            }
            Ok(())
        }

        let mut p = TuningParams::default();
        parse(&lookup, "SLSM_R", &mut p.runs)?;
        parse(&lookup, "SLSM_RN", &mut p.run_capacity)?;
        parse(&lookup, "SLSM_EPSILON", &mut p.epsilon)?;
        parse(&lookup, "SLSM_D", &mut p.disk_runs)?;
        parse(&lookup, "SLSM_M", &mut p.merge_fraction)?;
        parse(&lookup, "SLSM_MU", &mut p.fence_page)?;
        p.validate()
    }
}

impl fmt::Display for TuningParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "R={} R_n={} eps={} D={} m={} mu={}",
            self.runs,
            self.run_capacity,
            self.epsilon,
            self.disk_runs,
            self.merge_fraction,
            self.fence_page
        )
    }
}
