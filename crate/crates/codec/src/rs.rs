use std::collections::BTreeMap;

use thiserror::Error;

use crate::gf::{self, Gf256};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("invalid code parameters n={n}, k={k}: need 1 <= k <= n <= 255")]
    Parameters { n: usize, k: usize },
    #[error("cannot encode an empty value")]
    EmptyValue,
    #[error("need {needed} distinct chunks, got {got}")]
    TooFewChunks { needed: usize, got: usize },
    #[error("chunk lengths differ")]
    InconsistentLength,
    #[error("chunk index {index} out of range for n={n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("original length {orig_len} exceeds decoded capacity {capacity}")]
    LengthMismatch { orig_len: usize, capacity: usize },
    #[error("decoding matrix is singular")]
    Singular,
}

/// One row of a codeword: the chunk stored at server position `index`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chunk {
    pub index: usize,
    pub data: Vec<u8>,
}

/// Systematic `(n, k)` Reed-Solomon code with a Cauchy parity block.
#[derive(Clone, Debug)]
pub struct ReedSolomon {
    n: usize,
    k: usize,
    /// `(n - k) x k` parity coefficients.
    parity: Vec<Vec<u8>>,
}

impl ReedSolomon {
    pub fn new(n: usize, k: usize) -> Result<Self, CodecError> {
        if k == 0 || k > n || n > 255 {
            return Err(CodecError::Parameters { n, k });
        }
        // Cauchy entries 1 / (x_r + y_c) with x_r = k + r and y_c = c, all distinct.
        // Each row is scaled so its first entry is 1, which keeps every square
        // submatrix invertible and turns k = 1 into plain replication.
        let parity = (0..n - k)
            .map(|r| {
                let row: Vec<Gf256> = (0..k)
                    .map(|c| (Gf256((k + r) as u8) + Gf256(c as u8)).inv().expect("distinct points"))
                    .collect();
                let lead = row[0];
                row.into_iter().map(|x| (x / lead).0).collect()
            })
            .collect();
        Ok(ReedSolomon { n, k, parity })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Length of every chunk for a value of `len` bytes.
    pub fn chunk_len(&self, len: usize) -> usize {
        len.div_ceil(self.k)
    }

    /// Generator row for chunk `index`.
    fn row(&self, index: usize) -> Vec<u8> {
        if index < self.k {
            let mut r = vec![0u8; self.k];
            r[index] = 1;
            r
        } else {
            self.parity[index - self.k].clone()
        }
    }

    pub fn encode(&self, value: &[u8]) -> Result<Vec<Chunk>, CodecError> {
        if value.is_empty() {
            return Err(CodecError::EmptyValue);
        }
        let len = self.chunk_len(value.len());
        let mut chunks: Vec<Chunk> = (0..self.k)
            .map(|i| {
                let start = (i * len).min(value.len());
                let end = ((i + 1) * len).min(value.len());
                let mut data = value[start..end].to_vec();
                data.resize(len, 0);
                Chunk { index: i, data }
            })
            .collect();
        for (r, coeffs) in self.parity.iter().enumerate() {
            let mut data = vec![0u8; len];
            for (c, &coef) in coeffs.iter().enumerate() {
                gf::mul_acc(&mut data, &chunks[c].data, coef);
            }
            chunks.push(Chunk { index: self.k + r, data });
        }
        Ok(chunks)
    }

    /// Rebuilds the first `orig_len` bytes from any `k` distinct chunks.
    ///
    /// Only erasures are handled: a corrupted chunk yields a different value.
    pub fn decode(&self, chunks: &[Chunk], orig_len: usize) -> Result<Vec<u8>, CodecError> {
        let mut by_index: BTreeMap<usize, &Chunk> = BTreeMap::new();
        for c in chunks {
            if c.index >= self.n {
                return Err(CodecError::IndexOutOfRange { index: c.index, n: self.n });
            }
            by_index.entry(c.index).or_insert(c);
        }
        if by_index.len() < self.k {
            return Err(CodecError::TooFewChunks { needed: self.k, got: by_index.len() });
        }
        let picked: Vec<&Chunk> = by_index.values().take(self.k).copied().collect();
        let len = picked[0].data.len();
        if picked.iter().any(|c| c.data.len() != len) {
            return Err(CodecError::InconsistentLength);
        }
        if orig_len > len * self.k {
            return Err(CodecError::LengthMismatch { orig_len, capacity: len * self.k });
        }

        let stripes: Vec<Vec<u8>> = if picked.iter().enumerate().all(|(i, c)| c.index == i) {
            picked.iter().map(|c| c.data.clone()).collect()
        } else {
            let m: Vec<Vec<u8>> = picked.iter().map(|c| self.row(c.index)).collect();
            let inv = invert(m)?;
            inv.iter()
                .map(|coeffs| {
                    let mut out = vec![0u8; len];
                    for (c, &coef) in coeffs.iter().enumerate() {
                        gf::mul_acc(&mut out, &picked[c].data, coef);
                    }
                    out
                })
                .collect()
        };
        let mut out: Vec<u8> = stripes.concat();
        out.truncate(orig_len);
        Ok(out)
    }
}

/// Gauss-Jordan inversion of a square matrix over GF(256).
fn invert(mut m: Vec<Vec<u8>>) -> Result<Vec<Vec<u8>>, CodecError> {
    let k = m.len();
    let mut inv: Vec<Vec<u8>> = (0..k)
        .map(|i| {
            let mut r = vec![0u8; k];
            r[i] = 1;
            r
        })
        .collect();
    for col in 0..k {
        let pivot = (col..k).find(|&r| m[r][col] != 0).ok_or(CodecError::Singular)?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let scale = Gf256(m[col][col]).inv().ok_or(CodecError::Singular)?.0;
        for x in m[col].iter_mut().chain(inv[col].iter_mut()) {
            *x = gf::mul(*x, scale);
        }
        for r in 0..k {
            if r == col || m[r][col] == 0 {
                continue;
            }
            let factor = m[r][col];
            let (src_m, src_i) = (m[col].clone(), inv[col].clone());
            gf::mul_acc(&mut m[r], &src_m, factor);
            gf::mul_acc(&mut inv[r], &src_i, factor);
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn k_one_is_replication() {
        let rs = ReedSolomon::new(3, 1).unwrap();
        let chunks = rs.encode(b"abc").unwrap();
        assert!(chunks.iter().all(|c| c.data == b"abc"));
    }

    #[test]
    fn n_equals_k_is_striping() {
        let rs = ReedSolomon::new(3, 3).unwrap();
        let chunks = rs.encode(b"abcdefg").unwrap();
        assert_eq!(chunks.len(), 3);
        assert_eq!(chunks[0].data, b"abc");
        assert_eq!(chunks[1].data, b"def");
        assert_eq!(chunks[2].data, b"g\0\0");
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(ReedSolomon::new(2, 3).unwrap_err(), CodecError::Parameters { n: 2, k: 3 });
        assert_eq!(ReedSolomon::new(3, 0).unwrap_err(), CodecError::Parameters { n: 3, k: 0 });
        let rs = ReedSolomon::new(4, 2).unwrap();
        assert_eq!(rs.encode(b"").unwrap_err(), CodecError::EmptyValue);
        let c = rs.encode(b"xyzw").unwrap();
        assert_eq!(rs.decode(&c[..1], 4).unwrap_err(), CodecError::TooFewChunks { needed: 2, got: 1 });
        let mut short = c[3].clone();
        short.data.pop();
        assert_eq!(rs.decode(&[c[0].clone(), short], 4).unwrap_err(), CodecError::InconsistentLength);
    }
}
