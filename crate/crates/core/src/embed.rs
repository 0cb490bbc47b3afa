//! Id-indexed embedding tables and the `DVEC` binary container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   "DVEC"         4 bytes
//! version u8 = 1
//! flags   u8             bit 0: rows are unit-normalized
//! dim     u32
//! count   u32
//! count x { id_len u16, id utf-8 bytes, dim x f32 }
//! ```

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub const MAGIC: &[u8; 4] = b"DVEC";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;
const FLAG_NORMALIZED: u8 = 1;
const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EmbedError {
    BadMagic,
    UnsupportedVersion(u8),
    TruncatedFile,
    DimMismatch { expected: usize, found: usize },
    InvalidId,
    DuplicateId(String),
    NotNormalized(String),
}

impl fmt::Display for EmbedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EmbedError::BadMagic => f.write_str("not a DVEC file (bad magic)"),
            EmbedError::UnsupportedVersion(v) => write!(f, "unsupported DVEC version {v}"),
            EmbedError::TruncatedFile => f.write_str("DVEC data is truncated"),
            EmbedError::DimMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            EmbedError::InvalidId => f.write_str("record id is not valid UTF-8 or too long"),
            EmbedError::DuplicateId(id) => write!(f, "duplicate id {id:?}"),
            EmbedError::NotNormalized(id) => write!(f, "row {id:?} is flagged normalized but is not unit length"),
        }
    }
}

impl core::error::Error for EmbedError {}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    dim: usize,
    data: Vec<f32>,
    normalized: bool,
    index: BTreeMap<String, usize>,
}

impl EmbeddingTable {
    pub fn new(ids: Vec<String>, dim: usize, data: Vec<f32>, normalized: bool) -> Result<Self, EmbedError> {
        if data.len() != ids.len() * dim {
            return Err(EmbedError::DimMismatch {
                expected: ids.len() * dim,
                found: data.len(),
            });
        }
        let mut index = BTreeMap::new();
        for (k, id) in ids.iter().enumerate() {
            if id.len() > u16::MAX as usize {
                return Err(EmbedError::InvalidId);
            }
            if index.insert(id.clone(), k).is_some() {
                return Err(EmbedError::DuplicateId(id.clone()));
            }
        }
        let table = EmbeddingTable {
            ids,
            dim,
            data,
            normalized,
            index,
        };
        if normalized {
            for (k, id) in table.ids.iter().enumerate() {
                let n = libm::sqrt(table.row(k).iter().map(|&x| f64::from(x) * f64::from(x)).sum());
                if (n - 1.0).abs() > NORM_TOLERANCE {
                    return Err(EmbedError::NotNormalized(id.clone()));
                }
            }
        }
        Ok(table)
    }

    pub fn from_rows(rows: Vec<(String, Vec<f32>)>, normalized: bool) -> Result<Self, EmbedError> {
        let dim = rows.first().map_or(0, |r| r.1.len());
        let mut ids = Vec::with_capacity(rows.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (id, row) in rows {
            if row.len() != dim {
                return Err(EmbedError::DimMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
            ids.push(id);
            data.extend_from_slice(&row);
        }
        Self::new(ids, dim, data, normalized)
    }

    pub fn from_f64_rows(rows: Vec<(String, Vec<f64>)>, normalized: bool) -> Result<Self, EmbedError> {
        Self::from_rows(
            rows.into_iter()
                .map(|(id, r)| (id, r.into_iter().map(|x| x as f32).collect()))
                .collect(),
            normalized,
        )
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn row(&self, k: usize) -> &[f32] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.position(id).map(|k| self.row(k))
    }

    /// Row `k` widened to f64 and scaled to unit length.
    pub fn unit_row(&self, k: usize) -> Vec<f64> {
        let row: Vec<f64> = self.row(k).iter().map(|&x| f64::from(x)).collect();
        crate::math::normalized(&row)
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(MAGIC);
        out.push(VERSION);
        out.push(if self.normalized { FLAG_NORMALIZED } else { 0 });
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u32).to_le_bytes());
        for (k, id) in self.ids.iter().enumerate() {
            out.extend_from_slice(&(id.len() as u16).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for x in self.row(k) {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN
            + self
                .ids
                .iter()
                .map(|id| 2 + id.len() + 4 * self.dim)
                .sum::<usize>()
    }

    /// Decodes one table from the front of `bytes`, returning it with the
    /// number of bytes consumed so containers can hold several tables.
    pub fn decode_prefix(bytes: &[u8]) -> Result<(Self, usize), EmbedError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if bytes.len() < 4 || &bytes[..4] != MAGIC {
            return Err(EmbedError::BadMagic);
        }
        cur.pos = 4;
        let version = cur.u8()?;
        if version != VERSION {
            return Err(EmbedError::UnsupportedVersion(version));
        }
        let flags = cur.u8()?;
        let dim = cur.u32()? as usize;
        let count = cur.u32()? as usize;
        let mut ids = Vec::with_capacity(count.min(1 << 20));
        let mut data = Vec::with_capacity(count.min(1 << 20) * dim);
        for _ in 0..count {
            let len = cur.u16()? as usize;
            let id = core::str::from_utf8(cur.take(len)?).map_err(|_| EmbedError::InvalidId)?;
            ids.push(String::from(id));
            for chunk in cur.take(4 * dim)?.chunks_exact(4) {
                data.push(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]));
            }
        }
        let table = Self::new(ids, dim, data, flags & FLAG_NORMALIZED != 0)?;
        Ok((table, cur.pos))
    }

    /// Decodes a buffer holding exactly one table.
    pub fn decode(bytes: &[u8]) -> Result<Self, EmbedError> {
        let (table, used) = Self::decode_prefix(bytes)?;
        if used != bytes.len() {
            return Err(EmbedError::DimMismatch {
                expected: used,
                found: bytes.len(),
            });
        }
        Ok(table)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], EmbedError> {
        let end = self.pos.checked_add(n).ok_or(EmbedError::TruncatedFile)?;
        let out = self.bytes.get(self.pos..end).ok_or(EmbedError::TruncatedFile)?;
        self.pos = end;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, EmbedError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, EmbedError> {
        let b = self.take(2)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Result<u32, EmbedError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
