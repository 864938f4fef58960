//! The public engine: a memory buffer in front of tiered disk levels.
//!
//! One writer (`put`/`delete`, via `&mut self`) and any number of readers
//! (`get`/`range`, via `&self`). A flush hands its sealed runs to a merge
//! thread and `put` returns immediately; at most one merge is in flight. A
//! reader that misses in the buffer while a merge is running waits for that
//! merge before looking at disk.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;

use parking_lot::{Mutex, RwLock};

use crate::buffer::{FlushBatch, MemoryBuffer};
use crate::dedupe::RangeDedupeTable;
use crate::error::{Error, Result};
use crate::hash::KeyHash;
use crate::level_store::{LevelStore, MergeStream};
use crate::model::{Entry, TuningParams};
use crate::num::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EngineOptions {
    /// Seeds skiplist level generation.
    pub seed: u64,
    /// Build and consult Bloom filters.
    pub bloom: bool,
    /// Run merges on a background thread.
    pub merge_thread: bool,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            seed: 0x5eed,
            bloom: true,
            merge_thread: true,
        }
    }
}

type MergeHandle = JoinHandle<Result<()>>;

pub struct LsmEngine<K: Scalar, V: Scalar> {
    buffer: MemoryBuffer<K, V>,
    store: Arc<RwLock<LevelStore<K, V>>>,
    pending: Mutex<Option<MergeHandle>>,
    merging: AtomicBool,
    options: EngineOptions,
    dir: PathBuf,
}

fn into_streams<K: Scalar, V: Scalar>(batch: FlushBatch<K, V>) -> Vec<MergeStream<K, V>> {
    batch
        .runs
        .into_iter()
        .map(|run| MergeStream::memory(run.drain_sorted()))
        .collect()
}

impl<K: Scalar, V: Scalar> LsmEngine<K, V> {
    /// Opens (or creates) a store in `dir`. Existing runs are reloaded from
    /// the manifest; the memory buffer always starts empty.
    pub fn open(dir: impl AsRef<Path>, params: TuningParams, options: EngineOptions) -> Result<Self> {
        let params = params.validate()?;
        let dir = dir.as_ref().to_path_buf();
        let store = LevelStore::open(&dir, params, options.bloom)?;
        Ok(LsmEngine {
            buffer: MemoryBuffer::new(params, options.bloom, options.seed)?,
            store: Arc::new(RwLock::new(store)),
            pending: Mutex::new(None),
            merging: AtomicBool::new(false),
            options,
            dir,
        })
    }

    pub fn params(&self) -> &TuningParams {
        self.buffer.params()
    }

    pub fn options(&self) -> &EngineOptions {
        &self.options
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn buffer(&self) -> &MemoryBuffer<K, V> {
        &self.buffer
    }

    pub fn put(&mut self, key: K, value: V) -> Result<()> {
        self.write(Entry::put(key, value))
    }

    /// Writes a tombstone. Deleting an absent key is not an error.
    pub fn delete(&mut self, key: K) -> Result<()> {
        self.write(Entry::tombstone(key))
    }

    fn write(&mut self, entry: Entry<K, V>) -> Result<()> {
        match self.buffer.put(entry) {
            Some(batch) => self.dispatch(batch),
            None => Ok(()),
        }
    }

    /// Hands a batch to the merge thread (or merges inline), after the
    /// previous merge has finished.
    fn dispatch(&mut self, batch: FlushBatch<K, V>) -> Result<()> {
        self.wait_for_merge()?;
        if !self.options.merge_thread {
            return self.store.write().merge_batch(into_streams(batch));
        }
        let store = Arc::clone(&self.store);
        let handle = std::thread::Builder::new()
            .name("slsm-merge".into())
            .spawn(move || store.write().merge_batch(into_streams(batch)))
            .map_err(|e| Error::io(&self.dir, e))?;
        *self.pending.lock() = Some(handle);
        self.merging.store(true, Ordering::Release);
        Ok(())
    }

    /// Blocks until no merge is in flight, reporting its failure if any.
    pub fn wait_for_merge(&self) -> Result<()> {
        if !self.merging.load(Ordering::Acquire) {
            return Ok(());
        }
        let mut pending = self.pending.lock();
        let result = match pending.take() {
            Some(handle) => handle.join().unwrap_or(Err(Error::MergePanicked)),
            None => Ok(()),
        };
        self.merging.store(false, Ordering::Release);
        result
    }

    /// Newest value for `key`; a tombstone anywhere above older values
    /// reads as absent.
    pub fn get(&self, key: K) -> Result<Option<V>> {
        let hash = KeyHash::of(key);
        if let Some(e) = self.buffer.get_hashed(key, &hash) {
            return Ok(e.live_value());
        }
        self.wait_for_merge()?;
        Ok(self
            .store
            .read()
            .get_hashed(key, &hash)
            .and_then(|e| e.live_value()))
    }

    /// Live pairs with `lo <= key < hi`, sorted by key.
    pub fn range(&self, lo: K, hi: K) -> Result<Vec<(K, V)>> {
        if lo > hi {
            return Err(Error::EmptyRange);
        }
        let mut table = RangeDedupeTable::new();
        for seq in self.buffer.range(lo, hi)? {
            for e in seq {
                table.observe(e.key, e.value, !e.tombstone);
            }
        }
        self.wait_for_merge()?;
        for seq in self.store.read().range(lo, hi)? {
            for e in seq {
                table.observe(e.key, e.value, !e.tombstone);
            }
        }
        Ok(table.into_sorted())
    }

    /// Entry counts per disk run, shallowest level first.
    pub fn level_shape(&self) -> Result<Vec<Vec<usize>>> {
        self.wait_for_merge()?;
        Ok(self.store.read().shape())
    }

    /// Level cascades performed since open.
    pub fn cascades(&self) -> Result<u64> {
        self.wait_for_merge()?;
        Ok(self.store.read().cascades())
    }

    /// Run files currently referenced by the manifest.
    pub fn run_files(&self) -> Result<Vec<PathBuf>> {
        self.wait_for_merge()?;
        let store = self.store.read();
        Ok(store
            .levels()
            .iter()
            .flatten()
            .map(|r| r.path().to_path_buf())
            .collect())
    }

    /// Moves everything in the memory buffer to disk and waits for all
    /// merges. Nothing is lost if the engine is reopened afterwards.
    pub fn flush(&mut self) -> Result<()> {
        self.wait_for_merge()?;
        let batches = self.buffer.drain_all();
        let mut store = self.store.write();
        for batch in batches {
            store.merge_batch(into_streams(batch))?;
        }
        store.write_manifest()
    }

    /// Flushes the buffer and releases the store.
    pub fn close(mut self) -> Result<()> {
        self.flush()
    }
}

impl<K: Scalar, V: Scalar> Drop for LsmEngine<K, V> {
    fn drop(&mut self) {
        let _ = self.wait_for_merge();
    }
}
