//! Fixed-width scalar types usable as keys and values.

use std::fmt::{Debug, Display};
use std::hash::Hash;

use num_traits::PrimInt;

/// A primitive integer with a fixed little-endian byte encoding.
///
/// Keys use the integer order; values are opaque payloads. Run files record
/// the widths so a file written for one instantiation is rejected by another.
pub trait Scalar: PrimInt + Hash + Debug + Display + Default + Send + Sync + 'static {
    /// Encoded width in bytes.
    const WIDTH: usize;

    /// Writes `self` into the first `WIDTH` bytes of `out`.
    fn write_le(self, out: &mut [u8]);

    /// Reads a value from the first `WIDTH` bytes of `bytes`.
    fn read_le(bytes: &[u8]) -> Self;
}

macro_rules! impl_scalar {
    ($($t:ty),*) => {
        $(
            impl Scalar for $t {
                const WIDTH: usize = std::mem::size_of::<$t>();

                #[inline]
                fn write_le(self, out: &mut [u8]) {
                    out[..Self::WIDTH].copy_from_slice(&self.to_le_bytes());
                }

                #[inline]
                fn read_le(bytes: &[u8]) -> Self {
                    let mut buf = [0u8; std::mem::size_of::<$t>()];
                    buf.copy_from_slice(&bytes[..Self::WIDTH]);
                    <$t>::from_le_bytes(buf)
                }
            }
        )*
    };
}

impl_scalar!(i16, u16, i32, u32, i64, u64);
