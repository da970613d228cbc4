//! MASC: a small causal transformer whose hidden state is enriched by
//! hashed n-gram memories (orders 2 to 5) picked per token by a top-k router.
//!
//! Everything runs in `f64` with hand-written gradients. A trained
//! [`MascModel`] implements [`masc_core::SourceModel`] and drives the
//! arithmetic coder through an incremental key/value cache.

pub mod checkpoint;
pub mod config;
pub mod gradcheck;
pub mod hash;
pub mod infer;
pub mod linalg;
pub mod model;
pub mod params;
pub mod routing;
pub mod train;

pub use config::{MascConfig, N_EXPERTS, ORDERS};
pub use infer::MascModel;
pub use model::{compute_loss, forward, loss_and_grad, Batch, ForwardOutput, Grads, LossReport, LossWeights};
pub use params::{Params, Tensor};
pub use routing::{aux_loss, mmer_route, route_logits, RoutingDecision, RoutingStats};
pub use train::{train, TrainConfig, TrainLogRow, TrainOutcome};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum MascError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("sequence of {len} tokens exceeds max_seq_len {max}")]
    TooLong { len: usize, max: usize },
    #[error("empty input sequence")]
    EmptyInput,
    #[error("batch has no valid positions")]
    EmptyBatch,
    #[error("token {0} outside the vocabulary")]
    TokenOutOfRange(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("training diverged at step {step}: {detail}")]
    Diverged { step: usize, detail: String },
    #[error("training split is empty")]
    EmptyCorpus,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
