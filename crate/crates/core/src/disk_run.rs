//! Immutable sorted runs on disk.
//!
//! File layout, all little-endian:
//!
//! ```text
//! offset 0   "SLSM"         magic
//!        4   u16            version (1)
//!        6   u8             key width in bytes
//!        7   u8             value width in bytes
//!        8   u64            entry count
//!       16   entry records  key | value | flags (bit 0 = tombstone), packed
//! ```
//!
//! Entry `j` lives at `16 + j * (key_width + value_width + 1)`. Fence
//! pointers (the key of every `mu`-th entry) and the Bloom filter are not
//! persisted; they are rebuilt from one sequential scan when a run is built
//! or opened.

use std::fs::{self, File};
use std::io::{BufWriter, Seek, SeekFrom, Write};
use std::marker::PhantomData;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use memmap2::Mmap;

use crate::bloom::BloomFilter;
use crate::error::{Error, Result};
use crate::hash::KeyHash;
use crate::model::{Entry, TuningParams};
use crate::num::Scalar;

pub const MAGIC: &[u8; 4] = b"SLSM";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 16;

const FLAG_TOMBSTONE: u8 = 1;

/// Bytes per packed record.
pub const fn record_len<K: Scalar, V: Scalar>() -> usize {
    K::WIDTH + V::WIDTH + 1
}

/// Serializes a single record. Tombstones always write a zero value.
pub fn encode_record<K: Scalar, V: Scalar>(entry: &Entry<K, V>, out: &mut [u8]) {
    entry.key.write_le(out);
    let value = if entry.tombstone { V::zero() } else { entry.value };
    value.write_le(&mut out[K::WIDTH..]);
    out[K::WIDTH + V::WIDTH] = if entry.tombstone { FLAG_TOMBSTONE } else { 0 };
}

pub fn decode_record<K: Scalar, V: Scalar>(bytes: &[u8]) -> Entry<K, V> {
    Entry {
        key: K::read_le(bytes),
        value: V::read_le(&bytes[K::WIDTH..]),
        tombstone: bytes[K::WIDTH + V::WIDTH] & FLAG_TOMBSTONE != 0,
    }
}

/// Per-run settings taken from the tuning parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunConfig {
    pub fence_page: usize,
    pub epsilon: f64,
    pub bloom: bool,
}

impl RunConfig {
    pub fn new(params: &TuningParams, bloom: bool) -> Self {
        RunConfig {
            fence_page: params.fence_page,
            epsilon: params.epsilon,
            bloom,
        }
    }
}

pub struct DiskRun<K, V> {
    path: PathBuf,
    map: Mmap,
    len: usize,
    min: K,
    max: K,
    fences: Vec<K>,
    filter: Option<BloomFilter>,
    config: RunConfig,
    _value: PhantomData<V>,
}

impl<K: Scalar, V: Scalar> std::fmt::Debug for DiskRun<K, V> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DiskRun")
            .field("path", &self.path)
            .field("len", &self.len)
            .field("min", &self.min)
            .field("max", &self.max)
            .field("fences", &self.fences.len())
            .finish()
    }
}

fn write_header<K: Scalar, V: Scalar>(out: &mut impl Write, count: u64) -> std::io::Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..6].copy_from_slice(&VERSION.to_le_bytes());
    header[6] = K::WIDTH as u8;
    header[7] = V::WIDTH as u8;
    header[8..16].copy_from_slice(&count.to_le_bytes());
    out.write_all(&header)
}

impl<K: Scalar, V: Scalar> DiskRun<K, V> {
    /// Writes a run from entries already in strictly increasing key order.
    pub fn build(path: impl AsRef<Path>, entries: &[Entry<K, V>], config: RunConfig) -> Result<Self> {
        let path = path.as_ref();
        match Self::write(path, entries.iter().map(|e| Ok(*e)), config)? {
            Some(run) => Ok(run),
            None => Err(Error::Unsorted(format!("{}: no entries", path.display()))),
        }
    }

    /// Streams entries into a new run file. Returns `None` (and leaves no
    /// file behind) when the stream is empty. Out-of-order input or a
    /// stream error aborts the write and removes the partial file.
    pub fn write<I>(path: impl AsRef<Path>, entries: I, config: RunConfig) -> Result<Option<Self>>
    where
        I: IntoIterator<Item = Result<Entry<K, V>>>,
    {
        let path = path.as_ref();
        let result = Self::write_inner(path, entries.into_iter());
        match result {
            Ok(0) => {
                let _ = fs::remove_file(path);
                Ok(None)
            }
            Ok(_) => Self::open(path, config).map(Some),
            Err(e) => {
                let _ = fs::remove_file(path);
                Err(e)
            }
        }
    }

    fn write_inner(path: &Path, entries: impl Iterator<Item = Result<Entry<K, V>>>) -> Result<u64> {
        let io = |e| Error::io(path, e);
        let file = File::create(path).map_err(io)?;
        let mut out = BufWriter::with_capacity(1 << 16, file);
        write_header::<K, V>(&mut out, 0).map_err(io)?;

        let mut record = [0u8; 32];
        let rec = record_len::<K, V>();
        let mut count = 0u64;
        let mut last: Option<K> = None;
        for entry in entries {
            let entry = entry?;
            if last.is_some_and(|k| k >= entry.key) {
                return Err(Error::Unsorted(format!(
                    "{}: key {} after {}",
                    path.display(),
                    entry.key,
                    last.unwrap()
                )));
            }
            last = Some(entry.key);
            encode_record(&entry, &mut record);
            out.write_all(&record[..rec]).map_err(io)?;
            count += 1;
        }
        if count > 0 {
            out.seek(SeekFrom::Start(8)).map_err(io)?;
            out.write_all(&count.to_le_bytes()).map_err(io)?;
        }
        out.flush().map_err(io)?;
        Ok(count)
    }

    /// Maps an existing run file, validating the header and key order while
    /// rebuilding fences, extrema and the filter.
    pub fn open(path: impl AsRef<Path>, config: RunConfig) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let file_len = file.metadata().map_err(|e| Error::io(&path, e))?.len();
        if file_len < HEADER_LEN as u64 {
            return Err(Error::corrupt(&path, "truncated header"));
        }
        // SAFETY: run files are immutable once written; nothing truncates
        // or rewrites them while mapped.
        let map = unsafe { Mmap::map(&file) }.map_err(|e| Error::io(&path, e))?;

        if map.len() < HEADER_LEN {
            return Err(Error::corrupt(&path, "truncated header"));
        }
        if &map[..4] != MAGIC {
            return Err(Error::corrupt(&path, "bad magic"));
        }
        let version = u16::from_le_bytes([map[4], map[5]]);
        if version != VERSION {
            return Err(Error::corrupt(&path, format!("unsupported version {version}")));
        }
        if map[6] as usize != K::WIDTH || map[7] as usize != V::WIDTH {
            return Err(Error::corrupt(
                &path,
                format!("widths {}/{} do not match {}/{}", map[6], map[7], K::WIDTH, V::WIDTH),
            ));
        }
        let count = u64::from_le_bytes(map[8..16].try_into().unwrap());
        let rec = record_len::<K, V>() as u64;
        let expected = count.checked_mul(rec).and_then(|b| b.checked_add(HEADER_LEN as u64));
        if count == 0 {
            return Err(Error::corrupt(&path, "empty run"));
        }
        match expected {
            Some(n) if n == map.len() as u64 => {}
            Some(n) if n > map.len() as u64 => return Err(Error::corrupt(&path, "truncated records")),
            _ => return Err(Error::corrupt(&path, "trailing bytes")),
        }

        let len = count as usize;
        let page = config.fence_page.max(1);
        let mut fences = Vec::with_capacity(len.div_ceil(page));
        let mut filter = if config.bloom {
            Some(BloomFilter::new(len, config.epsilon)?)
        } else {
            None
        };
        let mut last: Option<K> = None;
        for (j, chunk) in map[HEADER_LEN..].chunks_exact(rec as usize).enumerate() {
            let key = K::read_le(chunk);
            if last.is_some_and(|k| k >= key) {
                return Err(Error::corrupt(&path, format!("key order violated at entry {j}")));
            }
            last = Some(key);
            if j % page == 0 {
                fences.push(key);
            }
            if let Some(f) = filter.as_mut() {
                f.insert(key);
            }
        }

        let mut run = DiskRun {
            path,
            map,
            len,
            min: fences[0],
            max: last.expect("count > 0"),
            fences,
            filter,
            config,
            _value: PhantomData,
        };
        run.config.fence_page = page;
        Ok(run)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn file_name(&self) -> String {
        self.path
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn min_key(&self) -> K {
        self.min
    }

    pub fn max_key(&self) -> K {
        self.max
    }

    pub fn fences(&self) -> &[K] {
        &self.fences
    }

    pub fn filter(&self) -> Option<&BloomFilter> {
        self.filter.as_ref()
    }

    #[inline]
    fn record(&self, j: usize) -> &[u8] {
        let rec = record_len::<K, V>();
        let start = HEADER_LEN + j * rec;
        &self.map[start..start + rec]
    }

    #[inline]
    fn key_at(&self, j: usize) -> K {
        K::read_le(self.record(j))
    }

    /// Decodes entry `j`.
    pub fn entry(&self, j: usize) -> Entry<K, V> {
        decode_record(self.record(j))
    }

    /// The fence window `[i*mu, min((i+1)*mu, len))` that may hold `key`,
    /// for `min <= key`.
    #[inline]
    fn window(&self, key: K) -> (usize, usize) {
        let i = self.fences.partition_point(|&f| f <= key) - 1;
        let page = self.config.fence_page;
        (i * page, ((i + 1) * page).min(self.len))
    }

    /// Point lookup; tombstones are returned as-is.
    pub fn get(&self, key: K) -> Option<Entry<K, V>> {
        self.get_hashed(key, &KeyHash::of(key))
    }

    pub fn get_hashed(&self, key: K, hash: &KeyHash) -> Option<Entry<K, V>> {
        self.get_traced(key, hash, &mut 0)
    }

    /// Like [`DiskRun::get_hashed`], counting records read into `reads`.
    pub fn get_traced(&self, key: K, hash: &KeyHash, reads: &mut usize) -> Option<Entry<K, V>> {
        if key < self.min || key > self.max {
            return None;
        }
        if let Some(f) = &self.filter {
            if !f.contains_hash(hash) {
                return None;
            }
        }
        let (mut lo, mut hi) = self.window(key);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            *reads += 1;
            let record = self.record(mid);
            let k = K::read_le(record);
            match k.cmp(&key) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(decode_record(record)),
            }
        }
        None
    }

    /// First index whose key is `>= key`, searching one fence window.
    fn lower_bound(&self, key: K) -> usize {
        if key <= self.min {
            return 0;
        }
        if key > self.max {
            return self.len;
        }
        // fences[0] = min < key, so p >= 1
        let p = self.fences.partition_point(|&f| f < key);
        let page = self.config.fence_page;
        let (mut lo, mut hi) = ((p - 1) * page, (p * page).min(self.len));
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            if self.key_at(mid) < key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Index interval `[i_lo, i_hi)` holding exactly the keys in `[lo, hi)`.
    pub fn range_bounds(&self, lo: K, hi: K) -> Result<(usize, usize)> {
        if lo > hi {
            return Err(Error::EmptyRange);
        }
        Ok((self.lower_bound(lo), self.lower_bound(hi)))
    }

    /// Entries in `[lo, hi)`.
    pub fn range(&self, lo: K, hi: K) -> Result<Vec<Entry<K, V>>> {
        if lo > hi {
            return Err(Error::EmptyRange);
        }
        if self.max < lo || self.min >= hi {
            return Ok(Vec::new());
        }
        let (a, b) = self.range_bounds(lo, hi)?;
        Ok((a..b).map(|j| self.entry(j)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = Entry<K, V>> + '_ {
        (0..self.len).map(|j| self.entry(j))
    }
}

/// Owning cursor over a shared run, used as a merge source.
pub struct RunCursor<K, V> {
    run: Arc<DiskRun<K, V>>,
    pos: usize,
}

impl<K: Scalar, V: Scalar> RunCursor<K, V> {
    pub fn new(run: Arc<DiskRun<K, V>>) -> Self {
        RunCursor { run, pos: 0 }
    }
}

impl<K: Scalar, V: Scalar> Iterator for RunCursor<K, V> {
    type Item = Entry<K, V>;

    fn next(&mut self) -> Option<Entry<K, V>> {
        if self.pos >= self.run.len {
            return None;
        }
        let e = self.run.entry(self.pos);
        self.pos += 1;
        Some(e)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.run.len - self.pos;
        (left, Some(left))
    }
}

impl<K: Scalar, V: Scalar> ExactSizeIterator for RunCursor<K, V> {}
