//! Embedding store and its file format.
//!
//! ```text
//! "SPQV"       magic
//! u32 LE       format version (1)
//! u64 LE       record count
//! u32 LE       d
//! per record, ascending doc_id:
//!   u64 LE     doc_id
//!   d x f32 LE vector
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::Reader;

pub const STORE_MAGIC: &[u8; 4] = b"SPQV";
pub const STORE_VERSION: u32 = 1;

/// Fixed-dimension vectors keyed by document id, kept in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<u64>,
    data: Vec<f32>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("store dimension must be >= 1"));
        }
        Ok(Self {
            dim,
            ids: Vec::new(),
            data: Vec::new(),
        })
    }

    pub fn from_entries<I>(dim: usize, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, Vec<f32>)>,
    {
        let mut entries: Vec<(u64, Vec<f32>)> = entries.into_iter().collect();
        entries.sort_by_key(|e| e.0);
        let mut store = Self::new(dim)?;
        for (id, v) in entries {
            store.push_sorted(id, &v)?;
        }
        Ok(store)
    }

    fn push_sorted(&mut self, id: u64, v: &[f32]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: v.len(),
            });
        }
        match self.ids.last() {
            Some(&last) if last == id => return Err(Error::DuplicateId(id)),
            Some(&last) if last > id => return Err(Error::format("ids not ascending")),
            _ => {}
        }
        self.ids.push(id);
        self.data.extend_from_slice(v);
        Ok(())
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

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn get(&self, id: u64) -> Option<&[f32]> {
        self.ids
            .binary_search(&id)
            .ok()
            .map(|i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &[f32])> {
        self.ids
            .iter()
            .copied()
            .zip(self.data.chunks_exact(self.dim))
    }

    /// Multiplies every stored component by `factor`.
    pub fn scale_all(&mut self, factor: f32) {
        for x in &mut self.data {
            *x *= factor;
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(20 + self.ids.len() * (8 + 4 * self.dim));
        out.extend_from_slice(STORE_MAGIC);
        out.extend_from_slice(&STORE_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.ids.len() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim as u32).to_le_bytes());
        for (id, v) in self.iter() {
            out.extend_from_slice(&id.to_le_bytes());
            for x in v {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.expect_magic(STORE_MAGIC)?;
        let version = r.u32()?;
        if version != STORE_VERSION {
            return Err(Error::format(format!(
                "unsupported store version {version}"
            )));
        }
        let count = r.len_u64()?;
        let dim = r.u32()? as usize;
        let mut store = Self::new(dim)?;
        if count.saturating_mul(8 + 4 * dim) != r.remaining() {
            return Err(Error::format(format!(
                "expected {count} records of dimension {dim}, found {} payload bytes",
                r.remaining()
            )));
        }
        let mut v = vec![0f32; dim];
        for _ in 0..count {
            let id = r.u64()?;
            for x in &mut v {
                *x = r.f32()?;
            }
            store.push_sorted(id, &v)?;
        }
        r.finish()?;
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Loads vectors produced outside this crate, e.g. by a pretrained encoder.
pub fn import_external_embeddings(path: &Path) -> Result<EmbeddingStore> {
    EmbeddingStore::load(path)
}
