//! The pinned key hash: Murmur3 x64_128, seed 0, over the key's
//! little-endian bytes. Shared by Bloom filters and the range dedupe table.

use std::io::Cursor;

use crate::num::Scalar;

/// Both 64-bit halves of a key's 128-bit Murmur3 hash.
///
/// A lookup hashes its key once and reuses the halves for every filter it
/// consults.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyHash {
    pub h1: u64,
    pub h2: u64,
}

impl KeyHash {
    pub fn of<K: Scalar>(key: K) -> Self {
        let mut buf = [0u8; 16];
        key.write_le(&mut buf);
        Self::of_bytes(&buf[..K::WIDTH])
    }

    pub fn of_bytes(bytes: &[u8]) -> Self {
        // Reading from an in-memory cursor cannot fail.
        let h = murmur3::murmur3_x64_128(&mut Cursor::new(bytes), 0).expect("in-memory read");
        KeyHash {
            h1: h as u64,
            h2: (h >> 64) as u64,
        }
    }
}
