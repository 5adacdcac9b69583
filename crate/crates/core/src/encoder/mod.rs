//! Trainable bi-encoder: mean-pooled token embeddings scored by scaled
//! cosine and trained with the multiple-negatives ranking loss.

mod grad;
mod loss;
mod model;
mod persist;
mod train;

pub use grad::{mnr_gradients, Gradients};
pub use loss::{logsumexp, mnr_loss, sim_matrix, MnrBatch, SimMatrix};
pub use model::{cosine, EncoderModel, DEFAULT_DIM, DEFAULT_SCALE};
pub use persist::{MODEL_MAGIC, MODEL_VERSION};
pub use train::{train, TrainConfig, TrainOutcome};
