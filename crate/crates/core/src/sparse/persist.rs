//! Binary index file.
//!
//! ```text
//! "SPQI"                      magic
//! u32 LE                      format version (1)
//! u64 LE                      N, document count
//! f64 LE                      average document length
//! N x (u64 LE, u32 LE)        (doc_id, doc_len), ascending doc_id
//! u64 LE                      term count
//! per term, ascending bytes:
//!   varint len, UTF-8 bytes   term
//!   varint                    df
//!   df x (varint, varint)     (doc_id delta, tf); first delta is from 0
//! ```
//!
//! Varints are unsigned LEB128.

use std::path::Path;

use integer_encoding::VarInt;

use crate::error::{Error, Result};
use crate::io::Reader;

use super::index::{InvertedIndex, Posting};

pub const INDEX_MAGIC: &[u8; 4] = b"SPQI";
pub const INDEX_VERSION: u32 = 1;

fn put_varint(out: &mut Vec<u8>, v: u64) {
    out.extend_from_slice(&v.encode_var_vec());
}

impl InvertedIndex {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(INDEX_MAGIC);
        out.extend_from_slice(&INDEX_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.doc_ids.len() as u64).to_le_bytes());
        out.extend_from_slice(&self.avg_len.to_le_bytes());
        for (id, len) in self.doc_ids.iter().zip(&self.doc_len) {
            out.extend_from_slice(&id.to_le_bytes());
            out.extend_from_slice(&len.to_le_bytes());
        }
        out.extend_from_slice(&(self.terms.len() as u64).to_le_bytes());
        for (term, plist) in self.terms.iter().zip(&self.postings) {
            put_varint(&mut out, term.len() as u64);
            out.extend_from_slice(term.as_bytes());
            put_varint(&mut out, plist.len() as u64);
            let mut prev = 0u64;
            for p in plist {
                let id = self.doc_ids[p.doc as usize];
                put_varint(&mut out, id - prev);
                put_varint(&mut out, p.tf as u64);
                prev = id;
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.expect_magic(INDEX_MAGIC)?;
        let version = r.u32()?;
        if version != INDEX_VERSION {
            return Err(Error::format(format!(
                "unsupported index version {version}"
            )));
        }
        let n = r.len_u64()?;
        let avg_len = r.f64()?;
        let mut doc_ids = Vec::with_capacity(n.min(1 << 20));
        let mut doc_len = Vec::with_capacity(n.min(1 << 20));
        for _ in 0..n {
            let id = r.u64()?;
            if doc_ids.last().is_some_and(|&last| last >= id) {
                return Err(Error::format("document ids not strictly ascending"));
            }
            doc_ids.push(id);
            doc_len.push(r.u32()?);
        }
        let term_count = r.len_u64()?;
        let mut terms: Vec<String> = Vec::with_capacity(term_count.min(1 << 20));
        let mut postings = Vec::with_capacity(term_count.min(1 << 20));
        for _ in 0..term_count {
            let len = r.varint()? as usize;
            let term = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::format("term is not valid UTF-8"))?
                .to_owned();
            if terms
                .last()
                .is_some_and(|last| last.as_bytes() >= term.as_bytes())
            {
                return Err(Error::format("terms not strictly ascending"));
            }
            let df = r.varint()? as usize;
            let mut plist = Vec::with_capacity(df.min(doc_ids.len()));
            let mut id = 0u64;
            for i in 0..df {
                let delta = r.varint()?;
                if i > 0 && delta == 0 {
                    return Err(Error::format("repeated document in postings"));
                }
                id = id
                    .checked_add(delta)
                    .ok_or_else(|| Error::format("doc id overflow"))?;
                let pos = doc_ids
                    .binary_search(&id)
                    .map_err(|_| Error::format(format!("posting for unknown doc {id}")))?;
                let tf = u32::try_from(r.varint()?)
                    .map_err(|_| Error::format("term frequency overflow"))?;
                plist.push(Posting {
                    doc: pos as u32,
                    tf,
                });
            }
            terms.push(term);
            postings.push(plist);
        }
        r.finish()?;
        Ok(Self::assemble(doc_ids, doc_len, avg_len, terms, postings))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
