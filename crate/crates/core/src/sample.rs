//! Autoregressive sampling from a trained checkpoint.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokenizer::{TokenSequence, Vocabulary, BOS, EOS};
use crate::transformer::{Checkpoint, IncrementalDecoder, ModelError, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub n_samples: usize,
    pub temperature: f64,
    /// Length cap including `<bos>`; defaults to the model context.
    pub max_len: Option<usize>,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            n_samples: 100,
            temperature: 1.0,
            max_len: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum SampleError {
    #[error("invalid sample config: {0}")]
    Config(String),
    #[error("checkpoint was trained with vocabulary {expected}, got {found}")]
    VocabMismatch { expected: String, found: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A generated token stream; `truncated` when the length cap was hit before `<eos>`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampledSequence {
    pub tokens: TokenSequence,
    pub truncated: bool,
}

/// Checks that a checkpoint was trained on this vocabulary.
pub fn check_compatible(ck: &Checkpoint, vocab: &Vocabulary) -> Result<(), SampleError> {
    let found = vocab.hash();
    if ck.vocab_hash != found || ck.params.config.vocab_size != vocab.len() {
        return Err(SampleError::VocabMismatch {
            expected: ck.vocab_hash.clone(),
            found,
        });
    }
    Ok(())
}

fn resolve_max_len(params: &ModelParams, max_len: Option<usize>) -> Result<usize, SampleError> {
    let ctx = params.config.max_seq_len;
    match max_len {
        None => Ok(ctx),
        Some(m) if (2..=ctx).contains(&m) => Ok(m),
        Some(m) => Err(SampleError::Config(format!(
            "max_len {m} must lie in [2, {ctx}]"
        ))),
    }
}

/// Draws `n_samples` sequences. Sample `i` uses its own stream of the seeded
/// generator, so results do not depend on scheduling.
pub fn sample(
    ck: &Checkpoint,
    vocab: &Vocabulary,
    cfg: &SampleConfig,
) -> Result<Vec<SampledSequence>, SampleError> {
    check_compatible(ck, vocab)?;
    if cfg.n_samples == 0 {
        return Err(SampleError::Config("n_samples must be at least 1".into()));
    }
    if !(cfg.temperature > 0.0 && cfg.temperature.is_finite()) {
        return Err(SampleError::Config("temperature must be positive".into()));
    }
    let max_len = resolve_max_len(&ck.params, cfg.max_len)?;
    (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            generate(&ck.params, max_len, |logits| {
                draw(logits, cfg.temperature, &mut rng)
            })
        })
        .collect()
}

/// Deterministic arg-max decoding (the zero-temperature limit).
pub fn greedy(params: &ModelParams, max_len: Option<usize>) -> Result<SampledSequence, SampleError> {
    let max_len = resolve_max_len(params, max_len)?;
    generate(params, max_len, argmax)
}

fn generate(
    params: &ModelParams,
    max_len: usize,
    mut pick: impl FnMut(&[f64]) -> u32,
) -> Result<SampledSequence, SampleError> {
    let mut dec = IncrementalDecoder::new(params);
    let mut ids = vec![BOS];
    while ids.len() < max_len {
        let logits = dec.step(*ids.last().expect("non-empty"))?;
        let next = pick(&logits);
        ids.push(next);
        if next == EOS {
            return Ok(SampledSequence {
                tokens: TokenSequence { ids },
                truncated: false,
            });
        }
    }
    Ok(SampledSequence {
        tokens: TokenSequence { ids },
        truncated: true,
    })
}

fn argmax(logits: &[f64]) -> u32 {
    let mut best = 0;
    for (i, &v) in logits.iter().enumerate() {
        if v > logits[best] {
            best = i;
        }
    }
    best as u32
}

fn draw<R: Rng>(logits: &[f64], temperature: f64, rng: &mut R) -> u32 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logits
        .iter()
        .map(|&l| ((l - max) / temperature).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen::<f64>() * total;
    let mut last = 0;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last = i;
            if u < w {
                return i as u32;
            }
            u -= w;
        }
    }
    last as u32
}
