//! Decoder-only transformer with hand-written backpropagation.
//!
//! Architecture: learned token and position embeddings, pre-norm blocks
//! (layer norm → causal multi-head attention → residual, layer norm → GELU
//! MLP → residual), a final layer norm, and an output projection tied to the
//! token embedding. All arithmetic is `f64`.

mod checkpoint;
mod decoder;
mod linalg;
mod model;
mod params;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use checkpoint::{Checkpoint, RngState, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use decoder::IncrementalDecoder;
pub use model::{
    cross_entropy, forward, forward_traced, grad, grad_scaled, loss, Batch, Logits, Mode, Trace,
};
pub use params::{Gradients, ModelParams, TensorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub d_model: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_seq_len: usize,
    pub vocab_size: usize,
    pub dropout: f64,
}

impl ModelConfig {
    /// A two-layer, 64-wide configuration suitable for CPU experiments.
    pub fn small(vocab_size: usize, max_seq_len: usize) -> Self {
        ModelConfig {
            n_layers: 2,
            d_model: 64,
            n_heads: 4,
            d_ff: 256,
            max_seq_len,
            vocab_size,
            dropout: 0.1,
        }
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.n_layers == 0 || self.d_model == 0 || self.n_heads == 0 || self.d_ff == 0 {
            return bad("layer count and widths must be positive");
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return bad("d_model must be divisible by n_heads");
        }
        if self.max_seq_len < 2 {
            return bad("max_seq_len must be at least 2");
        }
        if self.vocab_size < 4 {
            return bad("vocabulary needs the three special tokens plus content");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return bad("dropout must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("sequence length {len} exceeds max_seq_len {max}")]
    SequenceTooLong { len: usize, max: usize },
    #[error("token id {id} is outside the vocabulary of {vocab_size}")]
    TokenOutOfRange { id: u32, vocab_size: usize },
    #[error("invalid batch: {0}")]
    InvalidBatch(String),
    #[error("every target position is masked")]
    AllMasked,
    #[error("non-finite gradient in {0}")]
    NonFiniteGradient(String),
    #[error("model expects vocabulary size {expected}, got {found}")]
    VocabMismatch { expected: usize, found: usize },
    #[error("bad checkpoint: {0}")]
    BadCheckpoint(String),
    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),
}
