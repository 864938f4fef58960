//! Open-addressing table used to deduplicate range results.
//!
//! Linear probing over a power-of-two slot array, keyed by the same Murmur3
//! hash the Bloom filters use. Entries are stored inline. The table doubles
//! and rehashes before an insert would push it past half full.

use crate::hash::KeyHash;
use crate::num::Scalar;

const INITIAL_CAPACITY: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Slot<K, V> {
    Empty,
    /// Key seen but suppressed (tombstone).
    Seen(K),
    Emitted(K, V),
}

impl<K: Copy, V> Slot<K, V> {
    fn key(&self) -> Option<K> {
        match *self {
            Slot::Empty => None,
            Slot::Seen(k) | Slot::Emitted(k, _) => Some(k),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RangeDedupeTable<K, V> {
    slots: Vec<Slot<K, V>>,
    occupied: usize,
}

impl<K: Scalar, V: Scalar> Default for RangeDedupeTable<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Scalar, V: Scalar> RangeDedupeTable<K, V> {
    pub fn new() -> Self {
        RangeDedupeTable {
            slots: vec![Slot::Empty; INITIAL_CAPACITY],
            occupied: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.occupied
    }

    pub fn is_empty(&self) -> bool {
        self.occupied == 0
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    fn home(key: K, mask: usize) -> usize {
        KeyHash::of(key).h1 as usize & mask
    }

    /// Slot index holding `key`, or the empty slot where it would go.
    fn probe(&self, key: K) -> usize {
        let mask = self.slots.len() - 1;
        let mut i = Self::home(key, mask);
        loop {
            match self.slots[i].key() {
                None => return i,
                Some(k) if k == key => return i,
                Some(_) => i = (i + 1) & mask,
            }
        }
    }

    fn grow(&mut self) {
        let doubled = vec![Slot::Empty; self.slots.len() * 2];
        let old = std::mem::replace(&mut self.slots, doubled);
        for slot in old {
            if let Some(k) = slot.key() {
                let i = self.probe(k);
                self.slots[i] = slot;
            }
        }
    }

    /// Records the first sighting of `key`. Returns `true` if the key had
    /// not been seen; only then is `value` stored (and later emitted), and
    /// only if `live`.
    pub fn observe(&mut self, key: K, value: V, live: bool) -> bool {
        if (self.occupied + 1) * 2 > self.slots.len() {
            self.grow();
        }
        let i = self.probe(key);
        if self.slots[i] != Slot::Empty {
            return false;
        }
        self.slots[i] = if live {
            Slot::Emitted(key, value)
        } else {
            Slot::Seen(key)
        };
        self.occupied += 1;
        true
    }

    pub fn contains(&self, key: K) -> bool {
        self.slots[self.probe(key)] != Slot::Empty
    }

    /// Emitted pairs sorted by key.
    pub fn into_sorted(self) -> Vec<(K, V)> {
        let mut out: Vec<(K, V)> = self
            .slots
            .into_iter()
            .filter_map(|s| match s {
                Slot::Emitted(k, v) => Some((k, v)),
                _ => None,
            })
            .collect();
        out.sort_unstable_by_key(|&(k, _)| k);
        out
    }
}
