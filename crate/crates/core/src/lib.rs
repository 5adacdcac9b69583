//! Two-stage question-answer passage retrieval.
//!
//! Stage 1 ([`condenser`]) keeps the sentences of each answer passage that
//! best match its question under BM25. Stage 2 ([`encoder`]) is a mean-pooled
//! bi-encoder trained with the multiple-negatives ranking loss. [`pipeline`]
//! wires both together next to the bag-of-words baselines in [`sparse`], and
//! [`eval`] scores the results.

pub mod condenser;
pub mod corpus;
pub mod encoder;
pub mod error;
pub mod eval;
mod io;
pub mod pipeline;
pub mod ranking;
pub mod sparse;
pub mod synthetic;

pub use error::{Error, Result};
pub use ranking::{Hit, RankedList};
