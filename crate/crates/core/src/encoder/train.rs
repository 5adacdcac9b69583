use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

use super::grad::mnr_gradients;
use super::loss::MnrBatch;
use super::model::{EncoderModel, DEFAULT_DIM, DEFAULT_SCALE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Tokens kept per side after vocabulary lookup.
    pub max_tokens: usize,
    pub dim: usize,
    pub scale: f64,
    pub init_seed: u64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 15,
            batch_size: 32,
            learning_rate: 0.05,
            max_tokens: 256,
            dim: DEFAULT_DIM,
            scale: DEFAULT_SCALE,
            init_seed: 0,
            shuffle_seed: 1,
        }
    }
}

impl TrainConfig {
    /// Epoch count may be zero; everything else must be positive.
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::invalid("batch_size must be >= 1"));
        }
        if self.max_tokens == 0 {
            return Err(Error::invalid("max_tokens must be >= 1"));
        }
        if self.dim == 0 {
            return Err(Error::invalid("dim must be >= 1"));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("learning_rate must be finite and >= 0"));
        }
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::invalid("scale must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: EncoderModel,
    /// Mean batch loss for each epoch.
    pub loss_history: Vec<f64>,
}

/// Plain minibatch SGD on the MNR loss with in-batch negatives.
///
/// The pair order is reshuffled every epoch from `shuffle_seed`. A trailing
/// batch of a single pair carries no negatives and is skipped; an epoch with
/// no trainable batch records a loss of 0. The returned weights are rounded
/// to storage precision.
pub fn train(
    vocab: Vocabulary,
    pairs: &[(Vec<u32>, Vec<u32>)],
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if pairs.is_empty() {
        return Err(Error::Empty("training pairs"));
    }
    let pairs: Vec<(Vec<u32>, Vec<u32>)> = pairs
        .iter()
        .map(|(x, y)| {
            (
                x[..x.len().min(config.max_tokens)].to_vec(),
                y[..y.len().min(config.max_tokens)].to_vec(),
            )
        })
        .collect();
    // validates every pair once up front
    MnrBatch::new(pairs.clone(), vocab.len())?;

    let mut model = EncoderModel::random(vocab, config.dim, config.scale, config.init_seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            if chunk.len() < 2 {
                continue;
            }
            let batch = MnrBatch::new(
                chunk.iter().map(|&i| pairs[i].clone()).collect(),
                model.vocab_size(),
            )?;
            let grads = mnr_gradients(&model, &batch)?;
            for (token, g) in grads.rows() {
                for (w, d) in model.row_mut(token).iter_mut().zip(g) {
                    *w -= config.learning_rate * d;
                }
            }
            total += grads.loss;
            batches += 1;
        }
        history.push(if batches == 0 {
            0.0
        } else {
            total / batches as f64
        });
    }

    model.round_to_storage();
    Ok(TrainOutcome {
        model,
        loss_history: history,
    })
}
