//! Binary cache of a parsed CSR matrix.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  b"VBCSRBIN"
//! version  u32      currently 1
//! n_rows   u64
//! n_cols   u64
//! nnz      u64
//! row_ptr  (n_rows + 1) x u64
//! col_idx  nnz x u64
//! values   nnz x f64 (IEEE-754 bits)
//! ```
//!
//! The decoder validates the CSR invariants, so a corrupted file is
//! reported as an error rather than producing a malformed matrix.

use std::io::{Read, Write};

use super::IoError;
use crate::sparse::CsrMatrix;

pub const MAGIC: &[u8; 8] = b"VBCSRBIN";
pub const VERSION: u32 = 1;

pub fn write_csr_cache<W: Write>(a: &CsrMatrix, mut w: W) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for v in [a.n_rows(), a.n_cols(), a.nnz()] {
        w.write_all(&(v as u64).to_le_bytes())?;
    }
    for &p in a.row_ptr() {
        w.write_all(&(p as u64).to_le_bytes())?;
    }
    for &c in a.col_idx() {
        w.write_all(&(c as u64).to_le_bytes())?;
    }
    for &v in a.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Whether `bytes` starts with the cache magic.
pub fn is_csr_cache(bytes: &[u8]) -> bool {
    bytes.starts_with(MAGIC)
}

/// Decodes a cache image held in memory.
pub fn decode_csr_cache(bytes: &[u8]) -> Result<CsrMatrix, IoError> {
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(8)? != MAGIC {
        return Err(IoError::Cache("bad magic".into()));
    }
    let version = u32::from_le_bytes(cur.take(4)?.try_into().unwrap());
    if version != VERSION {
        return Err(IoError::Cache(format!("unsupported version {version}")));
    }
    let n_rows = cur.u64_as_usize()?;
    let n_cols = cur.u64_as_usize()?;
    let nnz = cur.u64_as_usize()?;
    // size check before allocating anything
    let need = n_rows
        .checked_add(1)
        .and_then(|r| r.checked_add(nnz.checked_mul(2)?))
        .and_then(|w| w.checked_mul(8))
        .ok_or_else(|| IoError::Cache("size overflow".into()))?;
    if cur.remaining() != need {
        return Err(IoError::Cache(format!(
            "payload has {} bytes, header implies {need}",
            cur.remaining()
        )));
    }
    let row_ptr = (0..=n_rows)
        .map(|_| cur.u64_as_usize())
        .collect::<Result<Vec<_>, _>>()?;
    let col_idx = (0..nnz)
        .map(|_| cur.u64_as_usize())
        .collect::<Result<Vec<_>, _>>()?;
    let values = (0..nnz)
        .map(|_| {
            cur.take(8)
                .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    CsrMatrix::try_new(n_rows, n_cols, row_ptr, col_idx, values)
        .map_err(|e| IoError::Cache(e.to_string()))
}

pub fn read_csr_cache<R: Read>(mut r: R) -> Result<CsrMatrix, IoError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    decode_csr_cache(&bytes)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], IoError> {
        if self.remaining() < n {
            return Err(IoError::Cache("truncated input".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64_as_usize(&mut self) -> Result<usize, IoError> {
        let v = u64::from_le_bytes(self.take(8)?.try_into().unwrap());
        usize::try_from(v).map_err(|_| IoError::Cache(format!("value {v} does not fit in usize")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_and_corruption() {
        let a = CsrMatrix::from_triplets(
            3,
            2,
            &[(0, 1, 1.5), (2, 0, -2.0), (2, 1, f64::MIN_POSITIVE)],
        )
        .unwrap();
        let mut buf = Vec::new();
        write_csr_cache(&a, &mut buf).unwrap();
        assert!(is_csr_cache(&buf));
        assert_eq!(decode_csr_cache(&buf).unwrap(), a);

        assert!(decode_csr_cache(&buf[..buf.len() - 1]).is_err());
        let mut bad = buf.clone();
        bad[8] = 9;
        assert!(decode_csr_cache(&bad).is_err());
        // swap the two column indices of row 2 -> unsorted row
        let col_start = 8 + 4 + 24 + 4 * 8;
        let mut bad = buf.clone();
        bad[col_start + 8] = 1;
        bad[col_start + 16] = 0;
        assert!(decode_csr_cache(&bad).is_err());
    }
}
