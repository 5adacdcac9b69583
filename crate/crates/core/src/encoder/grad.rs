use std::collections::BTreeMap;

use crate::error::Result;

use super::loss::{logsumexp, MnrBatch};
use super::model::EncoderModel;

/// Loss gradient for every embedding row the batch touches. Rows that are
/// absent have zero gradient.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Gradients {
    pub loss: f64,
    rows: BTreeMap<u32, Vec<f64>>,
}

impl Gradients {
    pub fn row(&self, token: u32) -> Option<&[f64]> {
        self.rows.get(&token).map(Vec::as_slice)
    }

    /// Gradient entry for `(token, k)`, zero for untouched rows.
    pub fn get(&self, token: u32, k: usize) -> f64 {
        self.rows.get(&token).map_or(0.0, |r| r[k])
    }

    pub fn rows(&self) -> impl Iterator<Item = (u32, &[f64])> {
        self.rows.iter().map(|(&t, r)| (t, r.as_slice()))
    }

    fn add_pooled(&mut self, ids: &[u32], grad: &[f64]) {
        let inv = 1.0 / ids.len() as f64;
        for &id in ids {
            let row = self.rows.entry(id).or_insert_with(|| vec![0.0; grad.len()]);
            for (r, g) in row.iter_mut().zip(grad) {
                *r += g * inv;
            }
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Loss and exact gradient of the MNR loss with respect to the embedding table.
///
/// With `p = softmax(S[i])` the loss gradient on `S[i][j]` is
/// `(p_j - [i == j]) / K`. It flows through the scale, then through cosine by
/// the quotient rule, `d cos(u, v) / du = v / (|u||v|) - cos(u, v) u / |u|^2`,
/// and finally through mean pooling, which spreads each pooled gradient
/// evenly over the tokens of that side (repeats included).
pub fn mnr_gradients(model: &EncoderModel, batch: &MnrBatch) -> Result<Gradients> {
    let k = batch.len();
    let dim = model.dim();
    let scale = model.scale();

    let qs = batch
        .pairs()
        .iter()
        .map(|(x, _)| model.encode(x))
        .collect::<Result<Vec<_>>>()?;
    let ps = batch
        .pairs()
        .iter()
        .map(|(_, y)| model.encode(y))
        .collect::<Result<Vec<_>>>()?;
    let q_norm: Vec<f64> = qs.iter().map(|v| norm(v)).collect();
    let p_norm: Vec<f64> = ps.iter().map(|v| norm(v)).collect();

    let mut cos = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in 0..k {
            if q_norm[i] > 0.0 && p_norm[j] > 0.0 {
                cos[i][j] = dot(&qs[i], &ps[j]) / (q_norm[i] * p_norm[j]);
            }
        }
    }

    let mut loss = 0.0;
    // dL/dS
    let mut g = vec![vec![0.0; k]; k];
    for i in 0..k {
        let row: Vec<f64> = cos[i].iter().map(|c| scale * c).collect();
        let lse = logsumexp(&row);
        loss += row[i] - lse;
        for j in 0..k {
            let p = (row[j] - lse).exp();
            g[i][j] = (p - if i == j { 1.0 } else { 0.0 }) / k as f64;
        }
    }
    let loss = -loss / k as f64 + 0.0;

    let mut dq = vec![vec![0.0; dim]; k];
    let mut dp = vec![vec![0.0; dim]; k];
    for i in 0..k {
        for j in 0..k {
            if q_norm[i] == 0.0 || p_norm[j] == 0.0 {
                continue;
            }
            let gs = g[i][j] * scale;
            if gs == 0.0 {
                continue;
            }
            let inv_nn = 1.0 / (q_norm[i] * p_norm[j]);
            let cq = cos[i][j] / (q_norm[i] * q_norm[i]);
            let cp = cos[i][j] / (p_norm[j] * p_norm[j]);
            for d in 0..dim {
                dq[i][d] += gs * (ps[j][d] * inv_nn - cq * qs[i][d]);
                dp[j][d] += gs * (qs[i][d] * inv_nn - cp * ps[j][d]);
            }
        }
    }

    let mut grads = Gradients {
        loss,
        rows: BTreeMap::new(),
    };
    for (i, (x, y)) in batch.pairs().iter().enumerate() {
        grads.add_pooled(x, &dq[i]);
        grads.add_pooled(y, &dp[i]);
    }
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use crate::encoder::{mnr_loss, sim_matrix};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_ordered((0..n).map(|i| format!("t{i}")).collect()).unwrap()
    }

    fn loss_at(model: &EncoderModel, batch: &MnrBatch) -> f64 {
        mnr_loss(&sim_matrix(model, batch).unwrap())
    }

    fn central_difference(model: &EncoderModel, batch: &MnrBatch, token: u32, k: usize) -> f64 {
        let h = 1e-5;
        let mut plus = model.clone();
        plus.row_mut(token)[k] += h;
        let mut minus = model.clone();
        minus.row_mut(token)[k] -= h;
        (loss_at(&plus, batch) - loss_at(&minus, batch)) / (2.0 * h)
    }

    fn random_batch(rng: &mut ChaCha8Rng, v: u32, k: usize) -> MnrBatch {
        let pairs = (0..k)
            .map(|_| {
                let nx = rng.gen_range(1..6);
                let ny = rng.gen_range(1..9);
                (
                    (0..nx).map(|_| rng.gen_range(0..v)).collect(),
                    (0..ny).map(|_| rng.gen_range(0..v)).collect(),
                )
            })
            .collect();
        MnrBatch::new(pairs, v as usize).unwrap()
    }

    #[test]
    fn single_pair_has_zero_gradient() {
        let model = EncoderModel::random(vocab(5), 3, 20.0, 1).unwrap();
        let batch = MnrBatch::new(vec![(vec![0, 1], vec![2])], 5).unwrap();
        let g = mnr_gradients(&model, &batch).unwrap();
        assert_eq!(g.loss, 0.0);
        assert!(g.rows().all(|(_, r)| r.iter().all(|&x| x == 0.0)));
    }

    #[test]
    fn loss_matches_forward_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let model = EncoderModel::random(vocab(30), 6, 20.0, 2).unwrap();
        let batch = random_batch(&mut rng, 30, 5);
        let g = mnr_gradients(&model, &batch).unwrap();
        assert!((g.loss - loss_at(&model, &batch)).abs() < 1e-12);
    }

    #[test]
    fn matches_finite_differences_small() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for scale in [1.0, 20.0] {
            let model = EncoderModel::random(vocab(50), 8, scale, rng.gen()).unwrap();
            let batch = random_batch(&mut rng, 50, 4);
            let g = mnr_gradients(&model, &batch).unwrap();
            for _ in 0..100 {
                let t = rng.gen_range(0..50u32);
                let k = rng.gen_range(0..8);
                let analytic = g.get(t, k);
                let numeric = central_difference(&model, &batch, t, k);
                let rel = (analytic - numeric).abs() / analytic.abs().max(1.0);
                assert!(rel < 1e-4, "token {t} dim {k}: {analytic} vs {numeric}");
            }
        }
    }

    #[test]
    fn unused_rows_are_absent() {
        let model = EncoderModel::random(vocab(10), 4, 20.0, 1).unwrap();
        let batch = MnrBatch::new(vec![(vec![0], vec![1]), (vec![2], vec![3])], 10).unwrap();
        let g = mnr_gradients(&model, &batch).unwrap();
        assert_eq!(g.rows().map(|(t, _)| t).collect::<Vec<_>>(), [0, 1, 2, 3]);
        assert!(g.row(9).is_none());
        assert_eq!(g.get(9, 0), 0.0);
    }
}
