//! The in-memory tier: up to R skiplist runs, newest last, each paired with
//! a Bloom filter. Only the last run accepts inserts.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bloom::BloomFilter;
use crate::error::{Error, Result};
use crate::hash::KeyHash;
use crate::model::{Entry, TuningParams};
use crate::num::Scalar;
use crate::skiplist::SkiplistRun;

#[derive(Clone, Debug)]
pub struct MemoryRun<K, V> {
    pub list: SkiplistRun<K, V>,
    pub filter: Option<BloomFilter>,
}

impl<K: Scalar, V: Scalar> MemoryRun<K, V> {
    #[inline]
    fn may_hold(&self, key: K, hash: &KeyHash) -> bool {
        self.list.covers(key) && self.filter.as_ref().is_none_or(|f| f.contains_hash(hash))
    }
}

/// Sealed runs removed from the buffer, oldest first. The receiver must
/// merge them into disk level 1.
#[derive(Debug)]
pub struct FlushBatch<K, V> {
    pub runs: Vec<SkiplistRun<K, V>>,
}

impl<K: Scalar, V: Scalar> FlushBatch<K, V> {
    pub fn len(&self) -> usize {
        self.runs.iter().map(SkiplistRun::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub struct MemoryBuffer<K, V> {
    runs: Vec<MemoryRun<K, V>>,
    params: TuningParams,
    bloom: bool,
    rng: ChaCha8Rng,
}

impl<K: Scalar, V: Scalar> MemoryBuffer<K, V> {
    pub fn new(params: TuningParams, bloom: bool, seed: u64) -> Result<Self> {
        let params = params.validate()?;
        Ok(MemoryBuffer {
            runs: Vec::with_capacity(params.runs),
            params,
            bloom,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn params(&self) -> &TuningParams {
        &self.params
    }

    /// Runs oldest first; the last one is active.
    pub fn runs(&self) -> &[MemoryRun<K, V>] {
        &self.runs
    }

    pub fn len(&self) -> usize {
        self.runs.iter().map(|r| r.list.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn fresh_run(&self) -> MemoryRun<K, V> {
        let filter = self.bloom.then(|| {
            BloomFilter::new(self.params.run_capacity, self.params.epsilon)
                .expect("params validated")
        });
        MemoryRun {
            list: SkiplistRun::new(),
            filter,
        }
    }

    /// Inserts into the active run. When the active run is full the next run
    /// becomes active; when all R runs are full the oldest round(m·R) are
    /// removed and returned for merging before the insert lands.
    pub fn put(&mut self, entry: Entry<K, V>) -> Option<FlushBatch<K, V>> {
        let mut batch = None;
        let rotate = match self.runs.last() {
            None => true,
            Some(active) => {
                active.list.len() >= self.params.run_capacity
                    && active.list.lookup(entry.key).is_none()
            }
        };
        if rotate {
            if self.runs.len() >= self.params.runs {
                let take = self.params.flush_runs().min(self.runs.len());
                let runs = self.runs.drain(..take).map(|r| r.list).collect();
                batch = Some(FlushBatch { runs });
            }
            let run = self.fresh_run();
            self.runs.push(run);
        }

        let active = self.runs.last_mut().expect("active run exists");
        if let Some(filter) = active.filter.as_mut() {
            filter.insert(entry.key);
        }
        active.list.insert(entry, &mut self.rng);
        batch
    }

    /// Removes every run for a final flush, split into batches of at most
    /// round(m·R) runs, oldest first.
    pub fn drain_all(&mut self) -> Vec<FlushBatch<K, V>> {
        let per = self.params.flush_runs();
        let mut out = Vec::new();
        let mut runs: Vec<_> = self.runs.drain(..).map(|r| r.list).filter(|l| !l.is_empty()).collect();
        while !runs.is_empty() {
            let rest = runs.split_off(per.min(runs.len()));
            out.push(FlushBatch { runs });
            runs = rest;
        }
        out
    }

    /// Newest run first; a run is searched only when its extrema cover the
    /// key and its filter answers positive. Tombstones are returned as-is.
    pub fn get(&self, key: K) -> Option<Entry<K, V>> {
        self.get_hashed(key, &KeyHash::of(key))
    }

    pub fn get_hashed(&self, key: K, hash: &KeyHash) -> Option<Entry<K, V>> {
        self.runs
            .iter()
            .rev()
            .filter(|run| run.may_hold(key, hash))
            .find_map(|run| run.list.lookup(key).copied())
    }

    /// One sorted sequence per run intersecting `[lo, hi)`, newest run first.
    pub fn range(&self, lo: K, hi: K) -> Result<Vec<Vec<Entry<K, V>>>> {
        if lo > hi {
            return Err(Error::EmptyRange);
        }
        let mut out = Vec::new();
        for run in self.runs.iter().rev() {
            let (Some(min), Some(max)) = (run.list.min_key(), run.list.max_key()) else {
                continue;
            };
            if max < lo || min >= hi {
                continue;
            }
            let seq = run.list.range(lo, hi)?;
            if !seq.is_empty() {
                out.push(seq);
            }
        }
        Ok(out)
    }
}
