//! k-way heap merge of sorted runs with newest-wins deduplication.
//!
//! The heap holds at most one head element per source stream, ordered by
//! `(key, run index)`. Popping yields keys in ascending order; among equal
//! keys the entry from the highest run index (the newest run) is kept. When
//! the output starts a new deepest level, tombstones are dropped entirely
//! since nothing older remains for them to shadow.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::model::Entry;
use crate::num::Scalar;

struct Head<K, V> {
    entry: Entry<K, V>,
    run: usize,
}

impl<K: Scalar, V> PartialEq for Head<K, V> {
    fn eq(&self, other: &Self) -> bool {
        self.entry.key == other.entry.key && self.run == other.run
    }
}

impl<K: Scalar, V> Eq for Head<K, V> {}

impl<K: Scalar, V> PartialOrd for Head<K, V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K: Scalar, V> Ord for Head<K, V> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.entry
            .key
            .cmp(&other.entry.key)
            .then(self.run.cmp(&other.run))
    }
}

/// Streaming merge over sorted sources indexed oldest (0) to newest.
///
/// Yields one `Err` and then stops if a source is not strictly increasing.
pub struct HeapMerge<K, V, I> {
    sources: Vec<I>,
    last_seen: Vec<Option<K>>,
    heap: BinaryHeap<Reverse<Head<K, V>>>,
    pending: Option<Head<K, V>>,
    drop_tombstones: bool,
    peak_heap: usize,
    error: Option<Error>,
    done: bool,
}

impl<K, V, I> HeapMerge<K, V, I>
where
    K: Scalar,
    V: Scalar,
    I: Iterator<Item = Entry<K, V>>,
{
    pub fn new(sources: Vec<I>, drop_tombstones: bool) -> Self {
        let n = sources.len();
        let mut merge = HeapMerge {
            sources,
            last_seen: vec![None; n],
            heap: BinaryHeap::with_capacity(n),
            pending: None,
            drop_tombstones,
            peak_heap: 0,
            error: None,
            done: false,
        };
        for run in 0..n {
            if let Err(e) = merge.refill(run) {
                merge.error = Some(e);
                break;
            }
        }
        merge
    }

    /// Largest heap size observed so far.
    pub fn peak_heap(&self) -> usize {
        self.peak_heap
    }

    pub fn source_count(&self) -> usize {
        self.sources.len()
    }

    /// Pushes the next element of `run`, checking its order.
    fn refill(&mut self, run: usize) -> Result<()> {
        let Some(entry) = self.sources[run].next() else {
            return Ok(());
        };
        if let Some(prev) = self.last_seen[run] {
            if entry.key <= prev {
                return Err(Error::Unsorted(format!(
                    "merge source {run}: key {} follows {prev}",
                    entry.key
                )));
            }
        }
        self.last_seen[run] = Some(entry.key);
        self.heap.push(Reverse(Head { entry, run }));
        self.peak_heap = self.peak_heap.max(self.heap.len());
        Ok(())
    }

    fn emit(&self, head: Head<K, V>) -> Option<Entry<K, V>> {
        (!(self.drop_tombstones && head.entry.tombstone)).then_some(head.entry)
    }

    fn fail(&mut self, e: Error) -> Option<Result<Entry<K, V>>> {
        self.done = true;
        self.heap.clear();
        self.pending = None;
        Some(Err(e))
    }
}

impl<K, V, I> Iterator for HeapMerge<K, V, I>
where
    K: Scalar,
    V: Scalar,
    I: Iterator<Item = Entry<K, V>>,
{
    type Item = Result<Entry<K, V>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if let Some(e) = self.error.take() {
            return self.fail(e);
        }
        loop {
            let Some(Reverse(head)) = self.heap.pop() else {
                self.done = true;
                let last = self.pending.take()?;
                return self.emit(last).map(Ok);
            };
            let run = head.run;
            let out = match &self.pending {
                Some(p) if p.entry.key == head.entry.key => {
                    // same key: the newer run replaces what we hold
                    if head.run > p.run {
                        self.pending = Some(head);
                    }
                    None
                }
                _ => self.pending.replace(head),
            };
            if let Err(e) = self.refill(run) {
                return self.fail(e);
            }
            if let Some(finished) = out {
                if let Some(entry) = self.emit(finished) {
                    return Some(Ok(entry));
                }
            }
        }
    }
}

/// Collects a merge into memory.
pub fn heap_merge<K, V, I>(sources: Vec<I>, drop_tombstones: bool) -> Result<Vec<Entry<K, V>>>
where
    K: Scalar,
    V: Scalar,
    I: Iterator<Item = Entry<K, V>>,
{
    HeapMerge::new(sources, drop_tombstones).collect()
}
