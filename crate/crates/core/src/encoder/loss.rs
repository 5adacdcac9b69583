use crate::error::{Error, Result};

use super::model::{cosine, EncoderModel};

/// `K` question/passage token-id pairs. Each question's negatives are the
/// other `K - 1` passages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnrBatch {
    pairs: Vec<(Vec<u32>, Vec<u32>)>,
}

impl MnrBatch {
    pub fn new(pairs: Vec<(Vec<u32>, Vec<u32>)>, vocab_size: usize) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::Empty("batch"));
        }
        for (x, y) in &pairs {
            if x.is_empty() || y.is_empty() {
                return Err(Error::Empty("batch side"));
            }
            if let Some(&id) = x.iter().chain(y).find(|&&id| id as usize >= vocab_size) {
                return Err(Error::TokenOutOfRange { id, vocab_size });
            }
        }
        Ok(Self { pairs })
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pairs(&self) -> &[(Vec<u32>, Vec<u32>)] {
        &self.pairs
    }
}

/// Row-major `K x K` matrix.
pub type SimMatrix = Vec<Vec<f64>>;

/// `S[i][j] = scale * cos(encode(x_i), encode(y_j))`.
pub fn sim_matrix(model: &EncoderModel, batch: &MnrBatch) -> Result<SimMatrix> {
    let qs = batch
        .pairs
        .iter()
        .map(|(x, _)| model.encode(x))
        .collect::<Result<Vec<_>>>()?;
    let ps = batch
        .pairs
        .iter()
        .map(|(_, y)| model.encode(y))
        .collect::<Result<Vec<_>>>()?;
    Ok(qs
        .iter()
        .map(|q| ps.iter().map(|p| model.scale() * cosine(q, p)).collect())
        .collect())
}

/// Max-shifted `ln Σ exp(row)`.
pub fn logsumexp(row: &[f64]) -> f64 {
    let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + row.iter().map(|&s| (s - m).exp()).sum::<f64>().ln()
}

/// Multiple-negatives ranking loss: mean over rows of
/// `logsumexp(S[i]) - S[i][i]`.
pub fn mnr_loss(s: &[Vec<f64>]) -> f64 {
    let k = s.len();
    if k == 0 {
        return 0.0;
    }
    let total: f64 = s
        .iter()
        .enumerate()
        .map(|(i, row)| row[i] - logsumexp(row))
        .sum();
    // + 0.0 turns a K = 1 result of -0.0 into 0.0
    -total / k as f64 + 0.0
}
