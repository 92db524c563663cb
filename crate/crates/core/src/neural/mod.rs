//! From-scratch recurrent language-model engine: embedding, stacked
//! LSTM/GRU cells, output projection, masked next-token cross-entropy,
//! exact BPTT gradients, SGD/Adam, and the binary checkpoint format.

pub mod arch;
pub mod batch;
pub mod checkpoint;
pub mod optim;
pub mod params;
pub mod rnn;

pub use arch::{ArchDescriptor, CellKind};
pub use batch::Batch;
pub use optim::{adam_step, clip_global_norm, global_norm, sgd_step, AdamState};
pub use params::{FloatT, Gradients, LayerParams, ModelParams, ParamSet};
pub use rnn::ForwardCache;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite loss at {0}")]
    NonFiniteLoss(String),
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
