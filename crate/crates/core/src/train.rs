//! Optimization loop: Adam with a linearly decaying learning rate, gradient
//! clipping, length-bucketed shuffled batches and per-epoch augmentation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::augment::{augment_and_encode, AugmentConfig};
use crate::structure::Structure;
use crate::tokenizer::{encode, round_coords, TokenSequence, TokenizeError, Vocabulary};
use crate::transformer::{
    grad, Batch, Checkpoint, ModelConfig, ModelError, ModelParams, Mode, RngState,
};

/// Learning rate reached at the end of the schedule.
pub const LR_END: f64 = 9e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub lr_start: f64,
    pub lr_end: f64,
    pub total_steps: u64,
    pub seed: u64,
    pub augment: AugmentConfig,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip_norm: Option<f64>,
    /// Sort sequences of similar length into the same batch.
    pub bucket_by_length: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 16,
            lr_start: 1e-4,
            lr_end: LR_END,
            total_steps: 1000,
            seed: 0,
            augment: AugmentConfig::default(),
            clip_norm: Some(1.0),
            bucket_by_length: true,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if self.total_steps == 0 {
            return bad("total_steps must be at least 1");
        }
        if !(self.lr_end > 0.0 && self.lr_start >= self.lr_end) {
            return bad("learning rates must satisfy lr_start >= lr_end > 0");
        }
        if matches!(self.clip_norm, Some(c) if c <= 0.0 || !c.is_finite()) {
            return bad("clip_norm must be positive");
        }
        Ok(())
    }
}

/// Linear interpolation from `lr_start` at step 0 to `lr_end` at
/// `total_steps`, constant afterwards.
pub fn lr_schedule(step: u64, cfg: &TrainConfig) -> f64 {
    if step >= cfg.total_steps {
        return cfg.lr_end;
    }
    let frac = step as f64 / cfg.total_steps as f64;
    cfg.lr_start + (cfg.lr_end - cfg.lr_start) * frac
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("structure {index}: {source}")]
    Tokenize {
        index: usize,
        #[source]
        source: TokenizeError,
    },
    #[error("structure {index} encodes to {len} tokens, above the model context of {max}")]
    SequenceTooLong { index: usize, len: usize, max: usize },
    #[error("model vocabulary size {model} differs from the tokenizer's {vocab}")]
    VocabMismatch { model: usize, vocab: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("non-finite loss at step {step}")]
    NonFiniteLoss {
        step: u64,
        /// State before the failing update.
        last_good: Box<Checkpoint>,
    },
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn update(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            params[i] -= lr * mh / (vh.sqrt() + self.eps);
        }
    }
}

/// One optimizer step's record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: u64,
    pub epoch: u64,
    pub loss: f64,
    pub lr: f64,
    /// Gradient norm before clipping.
    pub grad_norm: f64,
    pub tokens: usize,
}

/// Drives training one step at a time.
pub struct Trainer {
    params: ModelParams,
    adam: Adam,
    cfg: TrainConfig,
    vocab: Vocabulary,
    structures: Vec<Structure>,
    base: Vec<TokenSequence>,
    rng: ChaCha8Rng,
    step: u64,
    epoch: u64,
    plan: Vec<Vec<usize>>,
    epoch_seqs: Vec<TokenSequence>,
    augmented: usize,
    fallbacks: usize,
}

impl Trainer {
    /// Rounds and encodes the corpus, and initializes the model from the seed.
    pub fn new(
        corpus: Vec<Structure>,
        vocab: Vocabulary,
        model_cfg: ModelConfig,
        cfg: TrainConfig,
    ) -> Result<Self, TrainError> {
        cfg.validate()?;
        model_cfg.validate()?;
        if corpus.is_empty() {
            return Err(TrainError::EmptyCorpus);
        }
        if model_cfg.vocab_size != vocab.len() {
            return Err(TrainError::VocabMismatch {
                model: model_cfg.vocab_size,
                vocab: vocab.len(),
            });
        }
        let structures: Vec<Structure> = corpus
            .iter()
            .map(|s| round_coords(s, vocab.precision()))
            .collect();
        let mut base = Vec::with_capacity(structures.len());
        for (index, s) in structures.iter().enumerate() {
            let seq = encode(s, &vocab).map_err(|source| TrainError::Tokenize { index, source })?;
            if seq.len() > model_cfg.max_seq_len {
                return Err(TrainError::SequenceTooLong {
                    index,
                    len: seq.len(),
                    max: model_cfg.max_seq_len,
                });
            }
            base.push(seq);
        }
        let params = ModelParams::init(model_cfg, cfg.seed)?;
        Ok(Trainer {
            adam: Adam::new(params.num_params()),
            params,
            cfg,
            vocab,
            structures,
            base,
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            step: 0,
            epoch: 0,
            plan: Vec::new(),
            epoch_seqs: Vec::new(),
            augmented: 0,
            fallbacks: 0,
        })
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn sequences(&self) -> &[TokenSequence] {
        &self.base
    }

    /// Augmentations drawn, and how many fell back to the original encoding.
    pub fn augment_counts(&self) -> (usize, usize) {
        (self.augmented, self.fallbacks)
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.cfg.total_steps
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            params: self.params.clone(),
            vocab_hash: self.vocab.hash(),
            step: self.step,
            rng: RngState {
                seed: self.cfg.seed,
                word_pos: self.rng.get_word_pos(),
            },
            moments: Some((self.adam.m.clone(), self.adam.v.clone())),
        }
    }

    fn start_epoch(&mut self) {
        let max_len = self.params.config.max_seq_len;
        self.epoch_seqs = self
            .structures
            .iter()
            .zip(&self.base)
            .map(|(s, base)| {
                let (seq, result) =
                    augment_and_encode(s, base, &self.vocab, &self.cfg.augment, &mut self.rng);
                match result {
                    crate::augment::AugmentResult::Augmented { .. } if seq.len() <= max_len => {
                        self.augmented += 1;
                        seq
                    }
                    crate::augment::AugmentResult::Disabled => seq,
                    _ => {
                        self.fallbacks += 1;
                        base.clone()
                    }
                }
            })
            .collect();

        let mut order: Vec<usize> = (0..self.epoch_seqs.len()).collect();
        order.shuffle(&mut self.rng);
        let bs = self.cfg.batch_size;
        if self.cfg.bucket_by_length {
            // Sort within windows of several batches so batches stay random
            // but padding stays small.
            for window in order.chunks_mut(bs * 8) {
                window.sort_by_key(|&i| self.epoch_seqs[i].len());
            }
        }
        let mut plan: Vec<Vec<usize>> = order.chunks(bs).map(<[usize]>::to_vec).collect();
        plan.shuffle(&mut self.rng);
        plan.reverse();
        self.plan = plan;
        self.epoch += 1;
    }

    /// Runs one optimizer update.
    pub fn step(&mut self) -> Result<StepLog, TrainError> {
        if self.plan.is_empty() {
            self.start_epoch();
        }
        let idx = self.plan.pop().expect("epoch plan is non-empty");
        let rows: Vec<&[u32]> = idx.iter().map(|&i| self.epoch_seqs[i].ids.as_slice()).collect();
        let batch = Batch::new(&rows)?;
        let tokens = batch.target_count();

        let failed = |t: &Trainer| TrainError::NonFiniteLoss {
            step: t.step,
            last_good: Box::new(t.checkpoint()),
        };
        let (loss, mut g) = match grad(&self.params, &batch, &mut Mode::Train(&mut self.rng)) {
            Ok(r) => r,
            Err(ModelError::NonFiniteGradient(_)) => return Err(failed(self)),
            Err(e) => return Err(e.into()),
        };
        if !loss.is_finite() {
            return Err(failed(self));
        }
        let grad_norm = g.l2_norm();
        if let Some(c) = self.cfg.clip_norm {
            if grad_norm > c {
                g.scale(c / grad_norm);
            }
        }
        let lr = lr_schedule(self.step, &self.cfg);
        let backup = (self.params.clone(), self.adam.clone());
        self.adam.update(self.params.as_mut_slice(), g.as_slice(), lr);
        if !self.params.as_slice().iter().all(|v| v.is_finite()) {
            (self.params, self.adam) = backup;
            return Err(failed(self));
        }
        let log = StepLog {
            step: self.step,
            epoch: self.epoch,
            loss,
            lr,
            grad_norm,
            tokens,
        };
        self.step += 1;
        Ok(log)
    }

    /// Runs until `total_steps`, calling `on_step` after every update.
    pub fn run(
        &mut self,
        mut on_step: impl FnMut(&Trainer, &StepLog) -> Result<(), TrainError>,
    ) -> Result<Vec<StepLog>, TrainError> {
        let mut logs = Vec::new();
        while !self.is_done() {
            let log = self.step()?;
            on_step(self, &log)?;
            logs.push(log);
        }
        Ok(logs)
    }
}

/// Trains from scratch and returns the final checkpoint and loss trajectory.
pub fn train(
    corpus: Vec<Structure>,
    vocab: Vocabulary,
    model_cfg: ModelConfig,
    cfg: TrainConfig,
) -> Result<(Checkpoint, Vec<StepLog>), TrainError> {
    let mut trainer = Trainer::new(corpus, vocab, model_cfg, cfg)?;
    let logs = trainer.run(|_, _| Ok(()))?;
    Ok((trainer.checkpoint(), logs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::Precision;
    use crate::element::Element;
    use crate::structure::{Atom, Molecule};
    use crate::tokenizer::{build_vocab, Scheme, SchemeKind};

    fn corpus() -> Vec<Structure> {
        let el = |s| Element::from_symbol(s).unwrap();
        (0..6)
            .map(|i| {
                let x = 1.0 + 0.1 * i as f64;
                Molecule::new(vec![
                    Atom { element: el("C"), position: [0.0, 0.0, 0.0] },
                    Atom { element: el("O"), position: [x, 0.0, 0.0] },
                ])
                .unwrap()
                .into()
            })
            .collect()
    }

    fn setup(steps: u64) -> (Vec<Structure>, Vocabulary, ModelConfig, TrainConfig) {
        let c = corpus();
        let vocab = build_vocab(&c, Scheme::new(SchemeKind::AtomCoord, Precision::new(1).unwrap())).unwrap();
        let mut m = ModelConfig::small(vocab.len(), 16);
        m.d_model = 16;
        m.d_ff = 32;
        let t = TrainConfig {
            batch_size: 4,
            lr_start: 1e-3,
            total_steps: steps,
            seed: 11,
            ..TrainConfig::default()
        };
        (c, vocab, m, t)
    }

    #[test]
    fn schedule_endpoints_and_midpoint() {
        let cfg = TrainConfig {
            lr_start: 1e-4,
            total_steps: 100,
            ..TrainConfig::default()
        };
        assert_eq!(lr_schedule(0, &cfg), 1e-4);
        assert!((lr_schedule(100, &cfg) - 9e-6).abs() < 1e-18);
        assert!((lr_schedule(50, &cfg) - (1e-4 + 9e-6) / 2.0).abs() < 1e-18);
        assert_eq!(lr_schedule(500, &cfg), lr_schedule(100, &cfg));
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut adam = Adam::new(2);
        let mut p = vec![1.0, -1.0];
        adam.update(&mut p, &[0.5, -2.0], 0.1);
        assert!((p[0] - 0.9).abs() < 1e-7);
        assert!((p[1] + 0.9).abs() < 1e-7);
    }

    #[test]
    fn rejects_bad_configs() {
        let (c, v, m, mut t) = setup(1);
        t.lr_end = 1.0;
        assert!(matches!(Trainer::new(c.clone(), v.clone(), m, t), Err(TrainError::Config(_))));
        let (_, _, mut m2, t2) = setup(1);
        m2.vocab_size += 1;
        assert!(matches!(Trainer::new(c, v, m2, t2), Err(TrainError::VocabMismatch { .. })));
    }

    #[test]
    fn same_seed_same_trajectory() {
        let (c, v, m, t) = setup(12);
        let (ck1, l1) = train(c.clone(), v.clone(), m, t).unwrap();
        let (ck2, l2) = train(c, v, m, t).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(ck1.to_bytes(), ck2.to_bytes());
        for log in &l1 {
            assert_eq!(log.lr, lr_schedule(log.step, &t));
        }
    }

    #[test]
    fn loss_goes_down() {
        let (c, v, m, t) = setup(60);
        let (_, logs) = train(c, v, m, t).unwrap();
        let head: f64 = logs[..10].iter().map(|l| l.loss).sum::<f64>() / 10.0;
        let tail: f64 = logs[50..].iter().map(|l| l.loss).sum::<f64>() / 10.0;
        assert!(tail < head, "{head} -> {tail}");
    }
}
