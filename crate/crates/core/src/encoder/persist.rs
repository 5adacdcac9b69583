//! Model file.
//!
//! ```text
//! "SPQE"          magic
//! u32 LE          format version (1)
//! u64 LE          V, vocabulary size
//! u32 LE          d, embedding dimension
//! f64 LE          similarity scale
//! V*d x f32 LE    embeddings, row-major (row = token id)
//! V x (u32 LE length, UTF-8 bytes)   vocabulary in id order
//! ```

use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};
use crate::io::Reader;

use super::model::EncoderModel;

pub const MODEL_MAGIC: &[u8; 4] = b"SPQE";
pub const MODEL_VERSION: u32 = 1;

impl EncoderModel {
    /// Weights are written as `f32`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(28 + self.weights().len() * 4);
        out.extend_from_slice(MODEL_MAGIC);
        out.extend_from_slice(&MODEL_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.vocab_size() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dim() as u32).to_le_bytes());
        out.extend_from_slice(&self.scale().to_le_bytes());
        for &w in self.weights() {
            out.extend_from_slice(&(w as f32).to_le_bytes());
        }
        for token in self.vocab().tokens() {
            out.extend_from_slice(&(token.len() as u32).to_le_bytes());
            out.extend_from_slice(token.as_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.expect_magic(MODEL_MAGIC)?;
        let version = r.u32()?;
        if version != MODEL_VERSION {
            return Err(Error::format(format!(
                "unsupported model version {version}"
            )));
        }
        let v = r.len_u64()?;
        let d = r.u32()? as usize;
        let scale = r.f64()?;
        let cells = v
            .checked_mul(d)
            .filter(|&c| c.saturating_mul(4) <= r.remaining())
            .ok_or_else(|| Error::format("embedding table exceeds file size"))?;
        let mut weights = Vec::with_capacity(cells);
        for _ in 0..cells {
            weights.push(r.f32()? as f64);
        }
        let mut tokens = Vec::with_capacity(v);
        for _ in 0..v {
            let len = r.u32()? as usize;
            let token = std::str::from_utf8(r.take(len)?)
                .map_err(|_| Error::format("vocabulary token is not valid UTF-8"))?;
            tokens.push(token.to_owned());
        }
        r.finish()?;
        EncoderModel::from_weights(Vocabulary::from_ordered(tokens)?, d, scale, weights)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
