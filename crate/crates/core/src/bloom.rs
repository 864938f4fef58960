//! Per-run Bloom filter with double hashing over the pinned Murmur3 hash.
//!
//! Probe `i` of key `x` is `(h1(x) + i * h2(x)) mod m`, where `h1`/`h2` are
//! the two halves of the 128-bit hash. Sizing follows the usual optimum:
//! `k = round(-log2 eps)` probes and `m = ceil(-n ln eps / ln(2)^2)` bits.

use std::f64::consts::LN_2;

use crate::hash::KeyHash;
use crate::model::ParamError;
use crate::num::Scalar;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BloomFilter {
    words: Vec<u64>,
    num_bits: u64,
    num_hashes: u32,
    capacity: usize,
}

/// Number of probes for a false-positive target.
pub fn optimal_hashes(epsilon: f64) -> u32 {
    ((-epsilon.log2()).round() as u32).max(1)
}

/// Bits needed to hold `n` keys at a false-positive target.
pub fn optimal_bits(n: usize, epsilon: f64) -> u64 {
    ((-(n as f64) * epsilon.ln() / (LN_2 * LN_2)).ceil() as u64).max(1)
}

/// Bit indices probed for a hash.
pub fn probe_positions(hash: &KeyHash, num_hashes: u32, num_bits: u64) -> Probes {
    let step = hash.h2 % num_bits;
    Probes {
        next: hash.h1 % num_bits,
        step,
        modulus: num_bits,
        left: num_hashes,
    }
}

/// Iterator over `(h1 + i*h2) mod m`, computed incrementally without overflow.
#[derive(Clone, Debug)]
pub struct Probes {
    next: u64,
    step: u64,
    modulus: u64,
    left: u32,
}

impl Iterator for Probes {
    type Item = u64;

    #[inline]
    fn next(&mut self) -> Option<u64> {
        if self.left == 0 {
            return None;
        }
        self.left -= 1;
        let out = self.next;
        // next + step < 2 * modulus, so one subtraction suffices
        let (sum, overflow) = self.next.overflowing_add(self.step);
        self.next = if overflow || sum >= self.modulus {
            sum.wrapping_sub(self.modulus)
        } else {
            sum
        };
        Some(out)
    }
}

impl BloomFilter {
    pub fn new(capacity: usize, epsilon: f64) -> Result<Self, ParamError> {
        if capacity < 1 {
            return Err(ParamError::RunCapacity);
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(ParamError::Epsilon(epsilon));
        }
        let num_bits = optimal_bits(capacity, epsilon);
        Ok(BloomFilter {
            words: vec![0; num_bits.div_ceil(64) as usize],
            num_bits,
            num_hashes: optimal_hashes(epsilon),
            capacity,
        })
    }

    pub fn num_bits(&self) -> u64 {
        self.num_bits
    }

    pub fn num_hashes(&self) -> u32 {
        self.num_hashes
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    #[inline]
    fn bit(&self, idx: u64) -> bool {
        self.words[(idx >> 6) as usize] & (1 << (idx & 63)) != 0
    }

    pub fn insert_hash(&mut self, hash: &KeyHash) {
        for idx in probe_positions(hash, self.num_hashes, self.num_bits) {
            self.words[(idx >> 6) as usize] |= 1 << (idx & 63);
        }
    }

    #[inline]
    pub fn contains_hash(&self, hash: &KeyHash) -> bool {
        probe_positions(hash, self.num_hashes, self.num_bits).all(|idx| self.bit(idx))
    }

    pub fn insert<K: Scalar>(&mut self, key: K) {
        self.insert_hash(&KeyHash::of(key));
    }

    pub fn may_contain<K: Scalar>(&self, key: K) -> bool {
        self.contains_hash(&KeyHash::of(key))
    }
}
