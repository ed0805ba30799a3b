//! Erasure coding for the coded register protocol.
//!
//! [`gf`] implements arithmetic in GF(2^8) modulo `x^8+x^4+x^3+x^2+1`, and
//! [`ReedSolomon`] is a systematic `(n, k)` MDS code whose parity rows come
//! from a Cauchy matrix, so every `k` of the `n` chunks reconstruct the value.
//!
//! ```
//! use geokv_codec::ReedSolomon;
//!
//! let rs = ReedSolomon::new(5, 3).unwrap();
//! let chunks = rs.encode(b"hello, coded world").unwrap();
//! let back = rs.decode(&[chunks[4].clone(), chunks[0].clone(), chunks[2].clone()], 18).unwrap();
//! assert_eq!(back, b"hello, coded world");
//! ```

pub mod gf;
mod rs;

pub use gf::Gf256;
pub use rs::{Chunk, CodecError, ReedSolomon};

/// Encodes `value` into `n` chunks; any `k` of them decode it.
pub fn rs_encode(value: &[u8], n: usize, k: usize) -> Result<Vec<Chunk>, CodecError> {
    ReedSolomon::new(n, k)?.encode(value)
}

/// Reassembles a value of `orig_len` bytes from at least `k` distinct chunks.
pub fn rs_decode(chunks: &[Chunk], n: usize, k: usize, orig_len: usize) -> Result<Vec<u8>, CodecError> {
    ReedSolomon::new(n, k)?.decode(chunks, orig_len)
}
