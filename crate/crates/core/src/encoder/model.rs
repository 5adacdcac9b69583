use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub const DEFAULT_DIM: usize = 64;
pub const DEFAULT_SCALE: f64 = 20.0;

/// Token embedding table with mean pooling.
///
/// Weights are held in `f64` for training and gradient checks; the model file
/// stores `f32`, and [`EncoderModel::round_to_storage`] snaps the weights to
/// that precision so a saved model reloads bit-identically.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderModel {
    vocab: Vocabulary,
    dim: usize,
    scale: f64,
    weights: Vec<f64>,
}

impl EncoderModel {
    /// Rows drawn uniformly from `[-0.5/d, 0.5/d]`, sampled at `f32` precision.
    pub fn random(vocab: Vocabulary, dim: usize, scale: f64, seed: u64) -> Result<Self> {
        check_shape(dim, scale)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 0.5 / dim as f32;
        let weights = (0..vocab.len() * dim)
            .map(|_| rng.gen_range(-bound..=bound) as f64)
            .collect();
        Ok(Self {
            vocab,
            dim,
            scale,
            weights,
        })
    }

    pub fn from_weights(
        vocab: Vocabulary,
        dim: usize,
        scale: f64,
        weights: Vec<f64>,
    ) -> Result<Self> {
        check_shape(dim, scale)?;
        if weights.len() != vocab.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: vocab.len() * dim,
                found: weights.len(),
            });
        }
        if let Some(bad) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::format(format!(
                "non-finite weight in row {}",
                bad / dim
            )));
        }
        Ok(Self {
            vocab,
            dim,
            scale,
            weights,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Multiplier applied to cosine similarities before the softmax.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn set_scale(&mut self, scale: f64) -> Result<()> {
        check_shape(self.dim, scale)?;
        self.scale = scale;
        Ok(())
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn row(&self, token: u32) -> &[f64] {
        let start = token as usize * self.dim;
        &self.weights[start..start + self.dim]
    }

    pub fn row_mut(&mut self, token: u32) -> &mut [f64] {
        let start = token as usize * self.dim;
        &mut self.weights[start..start + self.dim]
    }

    pub fn round_to_storage(&mut self) {
        for w in &mut self.weights {
            *w = *w as f32 as f64;
        }
    }

    pub(crate) fn check_ids(&self, ids: &[u32]) -> Result<()> {
        match ids.iter().find(|&&id| id as usize >= self.vocab.len()) {
            Some(&id) => Err(Error::TokenOutOfRange {
                id,
                vocab_size: self.vocab.len(),
            }),
            None => Ok(()),
        }
    }

    /// Mean of the embedding rows of `ids`.
    pub fn encode(&self, ids: &[u32]) -> Result<Vec<f64>> {
        if ids.is_empty() {
            return Err(Error::Empty("token list"));
        }
        self.check_ids(ids)?;
        let mut out = vec![0.0; self.dim];
        for &id in ids {
            for (o, w) in out.iter_mut().zip(self.row(id)) {
                *o += w;
            }
        }
        let n = ids.len() as f64;
        for o in &mut out {
            *o /= n;
        }
        Ok(out)
    }

    /// Maps tokens through the vocabulary (dropping unknown ones), keeps at
    /// most `max_tokens`, and encodes. `None` when nothing is left.
    pub fn encode_tokens(&self, tokens: &[String], max_tokens: usize) -> Option<Vec<f64>> {
        let mut ids = self.vocab.encode(tokens);
        ids.truncate(max_tokens);
        if ids.is_empty() {
            None
        } else {
            Some(self.encode(&ids).expect("ids come from the vocabulary"))
        }
    }
}

fn check_shape(dim: usize, scale: f64) -> Result<()> {
    if dim == 0 {
        return Err(Error::invalid("embedding dimension must be >= 1"));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::invalid(format!(
            "similarity scale must be > 0, got {scale}"
        )));
    }
    Ok(())
}

/// Dense cosine similarity; 0 when either vector has zero norm.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
