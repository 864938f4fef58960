//! A single memory-buffer run: an arena-backed skiplist.
//!
//! Each node owns a fixed column of `MAX_LEVEL` forward links, so dropping a
//! level during search indexes into a column already in cache instead of
//! following another pointer. Links are `u32` arena indices, which keeps the
//! whole column inside one 64-byte line.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::Entry;
use crate::num::Scalar;

pub const MAX_LEVEL: usize = 16;

const NIL: u32 = u32::MAX;
const HEAD: usize = 0;

/// Level for a node given a uniformly random 16-bit word: the 1-based
/// position of the lowest set bit, or `MAX_LEVEL` when no bit is set.
#[inline]
pub fn level_from_bits(word: u16) -> usize {
    if word == 0 {
        MAX_LEVEL
    } else {
        word.trailing_zeros() as usize + 1
    }
}

/// Draws a geometric(1/2) level in `1..=MAX_LEVEL` with a single draw.
#[inline]
pub fn random_level<R: Rng + ?Sized>(rng: &mut R) -> usize {
    level_from_bits(rng.random::<u16>())
}

#[derive(Clone, Debug)]
struct Node<K, V> {
    links: [u32; MAX_LEVEL],
    entry: Entry<K, V>,
}

#[derive(Clone, Debug)]
pub struct SkiplistRun<K, V> {
    nodes: Vec<Node<K, V>>,
    height: usize,
    min: Option<K>,
    max: Option<K>,
}

impl<K: Scalar, V: Scalar> Default for SkiplistRun<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Scalar, V: Scalar> SkiplistRun<K, V> {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        let mut nodes = Vec::with_capacity(capacity + 1);
        nodes.push(Node {
            links: [NIL; MAX_LEVEL],
            entry: Entry::tombstone(K::zero()),
        });
        SkiplistRun {
            nodes,
            height: 1,
            min: None,
            max: None,
        }
    }

    /// Number of distinct keys stored.
    pub fn len(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn min_key(&self) -> Option<K> {
        self.min
    }

    pub fn max_key(&self) -> Option<K> {
        self.max
    }

    /// True when `key` lies within the stored extrema.
    #[inline]
    pub fn covers(&self, key: K) -> bool {
        match (self.min, self.max) {
            (Some(lo), Some(hi)) => lo <= key && key <= hi,
            _ => false,
        }
    }

    #[inline]
    fn key_at(&self, idx: u32) -> K {
        self.nodes[idx as usize].entry.key
    }

    /// Index of the last node whose key is `< key` at level 1, filling
    /// `update` with the per-level predecessors when given.
    #[inline]
    fn descend(&self, key: K, mut update: Option<&mut [usize; MAX_LEVEL]>) -> usize {
        let mut x = HEAD;
        for lvl in (0..self.height).rev() {
            loop {
                let next = self.nodes[x].links[lvl];
                if next != NIL && self.key_at(next) < key {
                    x = next as usize;
                } else {
                    break;
                }
            }
            if let Some(update) = update.as_deref_mut() {
                update[lvl] = x;
            }
        }
        x
    }

    /// Inserts or overwrites. Returns `true` when the key was not present.
    /// An overwrite keeps the node (and its level) in place.
    pub fn insert<R: Rng + ?Sized>(&mut self, entry: Entry<K, V>, rng: &mut R) -> bool {
        let mut update = [HEAD; MAX_LEVEL];
        let pred = self.descend(entry.key, Some(&mut update));
        let next = self.nodes[pred].links[0];
        if next != NIL && self.key_at(next) == entry.key {
            self.nodes[next as usize].entry = entry;
            return false;
        }

        let level = random_level(rng);
        if level > self.height {
            // update[height..level] already hold HEAD
            self.height = level;
        }
        let idx = self.nodes.len();
        assert!(idx < NIL as usize, "skiplist arena exhausted");
        let mut links = [NIL; MAX_LEVEL];
        for (lvl, link) in links.iter_mut().enumerate().take(level) {
            let p = update[lvl];
            *link = self.nodes[p].links[lvl];
            self.nodes[p].links[lvl] = idx as u32;
        }
        self.nodes.push(Node { links, entry });

        self.min = Some(self.min.map_or(entry.key, |m| m.min(entry.key)));
        self.max = Some(self.max.map_or(entry.key, |m| m.max(entry.key)));
        true
    }

    /// The stored entry for `key`, tombstones included.
    pub fn lookup(&self, key: K) -> Option<&Entry<K, V>> {
        let pred = self.descend(key, None);
        let next = self.nodes[pred].links[0];
        if next != NIL && self.key_at(next) == key {
            Some(&self.nodes[next as usize].entry)
        } else {
            None
        }
    }

    /// Entries with `lo <= key < hi` in key order.
    pub fn range(&self, lo: K, hi: K) -> Result<Vec<Entry<K, V>>> {
        if lo > hi {
            return Err(Error::EmptyRange);
        }
        let mut out = Vec::new();
        let mut x = self.nodes[self.descend(lo, None)].links[0];
        while x != NIL {
            let node = &self.nodes[x as usize];
            if node.entry.key >= hi {
                break;
            }
            out.push(node.entry);
            x = node.links[0];
        }
        Ok(out)
    }

    /// Level-1 traversal in key order.
    pub fn iter(&self) -> Iter<'_, K, V> {
        Iter {
            run: self,
            next: self.nodes[HEAD].links[0],
        }
    }

    /// Consumes the run, yielding every entry in key order.
    pub fn drain_sorted(self) -> Vec<Entry<K, V>> {
        let mut out = Vec::with_capacity(self.len());
        out.extend(self.iter().copied());
        out
    }

    /// Levels of every non-sentinel node in level-1 order.
    #[cfg(test)]
    fn node_levels(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut x = self.nodes[HEAD].links[0];
        while x != NIL {
            let node = &self.nodes[x as usize];
            out.push(node.links.iter().take_while(|&&l| l != NIL).count());
            x = node.links[0];
        }
        out
    }

    /// Keys along the chain at `lvl` (0-based).
    #[cfg(test)]
    fn chain(&self, lvl: usize) -> Vec<K> {
        let mut out = Vec::new();
        let mut x = self.nodes[HEAD].links[lvl];
        while x != NIL {
            out.push(self.key_at(x));
            x = self.nodes[x as usize].links[lvl];
        }
        out
    }
}

pub struct Iter<'a, K, V> {
    run: &'a SkiplistRun<K, V>,
    next: u32,
}

impl<'a, K: Scalar, V: Scalar> Iterator for Iter<'a, K, V> {
    type Item = &'a Entry<K, V>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next == NIL {
            return None;
        }
        let node = &self.run.nodes[self.next as usize];
        self.next = node.links[0];
        Some(&node.entry)
    }
}
