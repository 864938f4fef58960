//! A key-value storage engine built as a log-structured merge tree whose
//! memory buffer is a sequence of skiplists.
//!
//! ```text
//!   put/delete ──► memory buffer: R skiplist runs (one active), each with
//!                  a Bloom filter and min/max keys
//!                        │ all R runs full: oldest round(m·R) runs flushed
//!                        ▼
//!                  level 1: up to D immutable runs  (fence pointers,
//!                  level 2: up to D runs, ~mD× larger Bloom filter,
//!                  ...                                min/max keys)
//! ```
//!
//! Lookups go newest to oldest: buffer runs, then level 1 runs, then deeper
//! levels. Deletes write tombstones, which are dropped once a merge creates a
//! new deepest level.
//!
//! Keys and values are generic over fixed-width integers ([`Scalar`]); the
//! aliases below fix the 32-bit instantiation used by the CLI.
//!
//! ```no_run
//! use slsm::{Engine, EngineOptions, TuningParams};
//!
//! let mut db = Engine::open("/tmp/slsm-data", TuningParams::default(), EngineOptions::default())?;
//! db.put(1, 100)?;
//! db.delete(2)?;
//! assert_eq!(db.get(1)?, Some(100));
//! let rows = db.range(0, 10)?;
//! db.close()?;
//! # Ok::<(), slsm::Error>(())
//! ```

pub mod bloom;
pub mod buffer;
pub mod cost;
pub mod dedupe;
pub mod disk_run;
pub mod engine;
pub mod error;
pub mod hash;
pub mod level_store;
pub mod merge;
pub mod model;
pub mod num;
pub mod skiplist;

pub use bloom::BloomFilter;
pub use buffer::{FlushBatch, MemoryBuffer};
pub use cost::{cost_model, CostEstimate};
pub use dedupe::RangeDedupeTable;
pub use disk_run::{DiskRun, RunConfig};
pub use engine::{EngineOptions, LsmEngine};
pub use error::{Error, Result};
pub use hash::KeyHash;
pub use level_store::{LevelStore, MergeStream};
pub use merge::{heap_merge, HeapMerge};
pub use model::{Entry, ParamError, TuningParams};
pub use num::Scalar;
pub use skiplist::SkiplistRun;

/// Reference key type.
pub type Key = i32;
/// Reference value type.
pub type Value = i32;

pub type Engine = LsmEngine<Key, Value>;
pub type KvEntry = Entry<Key, Value>;
pub type Run = SkiplistRun<Key, Value>;
pub type Buffer = MemoryBuffer<Key, Value>;
pub type Store = LevelStore<Key, Value>;
pub type FileRun = DiskRun<Key, Value>;
pub type Costs = CostEstimate<f64>;
