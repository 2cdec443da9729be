use super::linalg::{add_bias, gelu, gemm, layer_norm, softmax_in_place};
use super::params::*;
use super::{ModelError, ModelParams};
use crate::tokenizer::{BOS, PAD};

/// Single-sequence decoder that caches keys and values, so each step costs
/// one position instead of a full forward pass.
pub struct IncrementalDecoder<'a> {
    params: &'a ModelParams,
    keys: Vec<Vec<f64>>,
    values: Vec<Vec<f64>>,
    pos: usize,
}

impl<'a> IncrementalDecoder<'a> {
    pub fn new(params: &'a ModelParams) -> Self {
        let cfg = params.config;
        let cap = cfg.max_seq_len * cfg.d_model;
        IncrementalDecoder {
            params,
            keys: (0..cfg.n_layers).map(|_| Vec::with_capacity(cap)).collect(),
            values: (0..cfg.n_layers).map(|_| Vec::with_capacity(cap)).collect(),
            pos: 0,
        }
    }

    /// Tokens consumed so far.
    pub fn position(&self) -> usize {
        self.pos
    }

    /// Feeds one token and returns the next-token logits.
    pub fn step(&mut self, token: u32) -> Result<Vec<f64>, ModelError> {
        let p = self.params;
        let cfg = p.config;
        let (d, ff, v) = (cfg.d_model, cfg.d_ff, cfg.vocab_size);
        let (h, dh) = (cfg.n_heads, cfg.head_dim());
        if self.pos >= cfg.max_seq_len {
            return Err(ModelError::SequenceTooLong {
                len: self.pos + 1,
                max: cfg.max_seq_len,
            });
        }
        if token as usize >= v {
            return Err(ModelError::TokenOutOfRange { id: token, vocab_size: v });
        }
        let (wte, wpe) = (p.tensor(WTE), p.tensor(WPE));
        let t = token as usize;
        let mut x: Vec<f64> = (0..d).map(|i| wte[t * d + i] + wpe[self.pos * d + i]).collect();
        let scale = 1.0 / (dh as f64).sqrt();
        let steps = self.pos + 1;

        for l in 0..cfg.n_layers {
            let mut ln1 = vec![0.0; d];
            layer_norm(&x, p.block(l, LN1_GAIN), p.block(l, LN1_BIAS), &mut ln1);
            let mut qkv = vec![0.0; 3 * d];
            gemm(1, d, 3 * d, &ln1, false, p.block(l, W_QKV), false, 0.0, &mut qkv);
            add_bias(&mut qkv, p.block(l, B_QKV));
            self.keys[l].extend_from_slice(&qkv[d..2 * d]);
            self.values[l].extend_from_slice(&qkv[2 * d..]);
            let (ks, vs) = (&self.keys[l], &self.values[l]);

            let mut y = vec![0.0; d];
            let mut scores = vec![0.0; steps];
            for head in 0..h {
                let q = &qkv[head * dh..(head + 1) * dh];
                for (s, score) in scores.iter_mut().enumerate() {
                    let k = &ks[s * d + head * dh..s * d + (head + 1) * dh];
                    *score = scale * q.iter().zip(k).map(|(a, b)| a * b).sum::<f64>();
                }
                softmax_in_place(&mut scores);
                for (s, &w) in scores.iter().enumerate() {
                    let vrow = &vs[s * d + head * dh..s * d + (head + 1) * dh];
                    for i in 0..dh {
                        y[head * dh + i] += w * vrow[i];
                    }
                }
            }
            let mut proj = vec![0.0; d];
            gemm(1, d, d, &y, false, p.block(l, W_OUT), false, 0.0, &mut proj);
            add_bias(&mut proj, p.block(l, B_OUT));
            for (a, b) in x.iter_mut().zip(&proj) {
                *a += b;
            }

            let mut ln2 = vec![0.0; d];
            layer_norm(&x, p.block(l, LN2_GAIN), p.block(l, LN2_BIAS), &mut ln2);
            let mut fc = vec![0.0; ff];
            gemm(1, d, ff, &ln2, false, p.block(l, W_FC), false, 0.0, &mut fc);
            add_bias(&mut fc, p.block(l, B_FC));
            for u in &mut fc {
                *u = gelu(*u);
            }
            let mut out = vec![0.0; d];
            gemm(1, ff, d, &fc, false, p.block(l, W_PROJ), false, 0.0, &mut out);
            add_bias(&mut out, p.block(l, B_PROJ));
            for (a, b) in x.iter_mut().zip(&out) {
                *a += b;
            }
        }

        let gi = p.final_gain_index();
        let mut xf = vec![0.0; d];
        layer_norm(&x, p.tensor(gi), p.tensor(gi + 1), &mut xf);
        let mut logits = vec![0.0; v];
        gemm(1, d, v, &xf, false, wte, true, 0.0, &mut logits);
        logits[PAD as usize] = f64::NEG_INFINITY;
        logits[BOS as usize] = f64::NEG_INFINITY;
        self.pos += 1;
        Ok(logits)
    }
}
