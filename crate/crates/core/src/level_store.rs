//! Tiered disk levels and the cascading merge.
//!
//! Level 1 is the shallowest. Each level holds at most D runs, oldest first.
//! A flush lands in level 1; when the target level is full, its oldest
//! round(m·D) runs are first merged one level down (recursively), then the
//! incoming data is written into the freed slot.
//!
//! The data directory holds `level{L}_run{n}.slsm` files plus `manifest.txt`,
//! one `level,index,filename,entryCount` line per live run. The manifest is
//! replaced atomically (write to a temp file, then rename) after every merge.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::disk_run::{DiskRun, RunConfig, RunCursor};
use crate::error::{Error, Result};
use crate::hash::KeyHash;
use crate::merge::HeapMerge;
use crate::model::{Entry, TuningParams};
use crate::num::Scalar;

pub const MANIFEST: &str = "manifest.txt";

/// A sorted input to a merge: either a drained memory run or a disk run.
pub enum MergeStream<K, V> {
    Memory(std::vec::IntoIter<Entry<K, V>>),
    Disk(RunCursor<K, V>),
}

impl<K: Scalar, V: Scalar> MergeStream<K, V> {
    pub fn memory(entries: Vec<Entry<K, V>>) -> Self {
        MergeStream::Memory(entries.into_iter())
    }
}

impl<K: Scalar, V: Scalar> Iterator for MergeStream<K, V> {
    type Item = Entry<K, V>;

    #[inline]
    fn next(&mut self) -> Option<Entry<K, V>> {
        match self {
            MergeStream::Memory(it) => it.next(),
            MergeStream::Disk(it) => it.next(),
        }
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        match self {
            MergeStream::Memory(it) => it.size_hint(),
            MergeStream::Disk(it) => it.size_hint(),
        }
    }
}

/// One manifest line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub level: usize,
    pub index: usize,
    pub file: String,
    pub entries: usize,
}

pub fn parse_manifest(text: &str) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |reason: &str| Error::Manifest {
            line: n + 1,
            reason: reason.to_string(),
        };
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(bad("expected level,index,filename,entryCount"));
        }
        let level: usize = fields[0].parse().map_err(|_| bad("level"))?;
        let index: usize = fields[1].parse().map_err(|_| bad("index"))?;
        let entries: usize = fields[3].parse().map_err(|_| bad("entryCount"))?;
        let file = fields[2].to_string();
        if level == 0 || file.is_empty() || file.contains('/') {
            return Err(bad("level or filename"));
        }
        out.push(ManifestEntry {
            level,
            index,
            file,
            entries,
        });
    }
    Ok(out)
}

fn run_id(file: &str) -> Option<u64> {
    file.strip_suffix(".slsm")?.rsplit_once("_run")?.1.parse().ok()
}

pub struct LevelStore<K, V> {
    dir: PathBuf,
    levels: Vec<Vec<Arc<DiskRun<K, V>>>>,
    params: TuningParams,
    config: RunConfig,
    next_id: u64,
    cascades: u64,
}

impl<K: Scalar, V: Scalar> LevelStore<K, V> {
    /// Opens `dir`, creating it if needed and reloading any runs listed in
    /// its manifest.
    pub fn open(dir: impl AsRef<Path>, params: TuningParams, bloom: bool) -> Result<Self> {
        let params = params.validate()?;
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let mut store = LevelStore {
            config: RunConfig::new(&params, bloom),
            dir,
            levels: Vec::new(),
            params,
            next_id: 1,
            cascades: 0,
        };

        let manifest = store.dir.join(MANIFEST);
        if manifest.exists() {
            let text = fs::read_to_string(&manifest).map_err(|e| Error::io(&manifest, e))?;
            let mut lines = parse_manifest(&text)?;
            lines.sort_by_key(|m| (m.level, m.index));
            for m in lines {
                let run = DiskRun::open(store.dir.join(&m.file), store.config)?;
                if run.len() != m.entries {
                    return Err(Error::corrupt(
                        run.path(),
                        format!("manifest says {} entries, file has {}", m.entries, run.len()),
                    ));
                }
                while store.levels.len() < m.level {
                    store.levels.push(Vec::new());
                }
                if let Some(id) = run_id(&m.file) {
                    store.next_id = store.next_id.max(id + 1);
                }
                store.levels[m.level - 1].push(Arc::new(run));
            }
            while store.levels.last().is_some_and(Vec::is_empty) {
                store.levels.pop();
            }
        }
        Ok(store)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn params(&self) -> &TuningParams {
        &self.params
    }

    /// Levels shallowest first; runs within a level oldest first.
    pub fn levels(&self) -> &[Vec<Arc<DiskRun<K, V>>>] {
        &self.levels
    }

    /// Times a full level has been merged downward since open.
    pub fn cascades(&self) -> u64 {
        self.cascades
    }

    pub fn run_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn len(&self) -> usize {
        self.levels.iter().flatten().map(|r| r.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.run_count() == 0
    }

    /// Entry counts per run, for inspection.
    pub fn shape(&self) -> Vec<Vec<usize>> {
        self.levels
            .iter()
            .map(|l| l.iter().map(|r| r.len()).collect())
            .collect()
    }

    fn next_path(&mut self, level: usize) -> PathBuf {
        let id = self.next_id;
        self.next_id += 1;
        self.dir.join(format!("level{}_run{}.slsm", level + 1, id))
    }

    /// Merges a flushed batch (oldest run first) into level 1 and rewrites
    /// the manifest.
    pub fn merge_batch(&mut self, batch: Vec<MergeStream<K, V>>) -> Result<()> {
        if batch.iter().all(|s| s.size_hint().1 == Some(0)) {
            return Ok(());
        }
        self.do_merge(batch, 0)?;
        self.write_manifest()
    }

    /// Writes `sources` into `level` (0-based), first cascading the oldest
    /// runs of a full level downward.
    pub fn do_merge(&mut self, sources: Vec<MergeStream<K, V>>, level: usize) -> Result<()> {
        let created = level == self.levels.len();
        if created {
            self.levels.push(Vec::new());
        }
        if self.levels[level].len() >= self.params.disk_runs {
            self.cascades += 1;
            let take = self.params.cascade_runs().min(self.levels[level].len());
            let displaced: Vec<_> = self.levels[level].drain(..take).collect();
            let down = displaced
                .iter()
                .map(|r| MergeStream::Disk(RunCursor::new(r.clone())))
                .collect();
            if let Err(e) = self.do_merge(down, level + 1) {
                // put the displaced runs back in front
                let rest = std::mem::take(&mut self.levels[level]);
                self.levels[level] = displaced.into_iter().chain(rest).collect();
                return Err(e);
            }
            for run in displaced {
                let path = run.path().to_path_buf();
                drop(run);
                fs::remove_file(&path).map_err(|e| Error::io(&path, e))?;
            }
        }

        // Tombstones may only be dropped into a level this cascade just
        // created below every other level.
        let new_bottom = created && level + 1 == self.levels.len();
        let path = self.next_path(level);
        let merged = HeapMerge::new(sources, new_bottom);
        match DiskRun::write(&path, merged, self.config)? {
            Some(run) => self.levels[level].push(Arc::new(run)),
            None => {
                if created && self.levels[level].is_empty() {
                    self.levels.pop();
                }
            }
        }
        Ok(())
    }

    pub fn manifest_entries(&self) -> Vec<ManifestEntry> {
        let mut out = Vec::new();
        for (l, runs) in self.levels.iter().enumerate() {
            for (i, run) in runs.iter().enumerate() {
                out.push(ManifestEntry {
                    level: l + 1,
                    index: i,
                    file: run.file_name(),
                    entries: run.len(),
                });
            }
        }
        out
    }

    pub fn write_manifest(&self) -> Result<()> {
        let tmp = self.dir.join("manifest.txt.tmp");
        let dst = self.dir.join(MANIFEST);
        let mut text = String::new();
        for m in self.manifest_entries() {
            text.push_str(&format!("{},{},{},{}\n", m.level, m.index, m.file, m.entries));
        }
        let mut f = fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(text.as_bytes()).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &dst).map_err(|e| Error::io(&dst, e))
    }

    /// Shallowest level first, newest run first within a level.
    pub fn get(&self, key: K) -> Option<Entry<K, V>> {
        self.get_hashed(key, &KeyHash::of(key))
    }

    pub fn get_hashed(&self, key: K, hash: &KeyHash) -> Option<Entry<K, V>> {
        self.levels
            .iter()
            .flat_map(|level| level.iter().rev())
            .find_map(|run| run.get_hashed(key, hash))
    }

    /// Entries in `[lo, hi)` per intersecting run, newest first within a
    /// level, shallowest level first.
    pub fn range(&self, lo: K, hi: K) -> Result<Vec<Vec<Entry<K, V>>>> {
        if lo > hi {
            return Err(Error::EmptyRange);
        }
        let mut out = Vec::new();
        for run in self.levels.iter().flat_map(|l| l.iter().rev()) {
            let seq = run.range(lo, hi)?;
            if !seq.is_empty() {
                out.push(seq);
            }
        }
        Ok(out)
    }
}
