use rand::{Rng, RngCore};

use super::linalg::{
    add_bias, col_sum_into, gelu, gelu_grad, gemm, layer_norm, layer_norm_backward,
    softmax_in_place, LnCache,
};
use super::params::*;
use super::{ModelConfig, ModelError};
use crate::tokenizer::{BOS, PAD};

/// Right-padded token rows of equal length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    ids: Vec<u32>,
    rows: usize,
    len: usize,
}

impl Batch {
    /// Pads every sequence with `<pad>` to the longest one.
    pub fn new<S: AsRef<[u32]>>(seqs: &[S]) -> Result<Self, ModelError> {
        let len = seqs.iter().map(|s| s.as_ref().len()).max().unwrap_or(0);
        if seqs.is_empty() || len == 0 {
            return Err(ModelError::InvalidBatch("batch is empty".into()));
        }
        let mut ids = Vec::with_capacity(seqs.len() * len);
        for s in seqs {
            let s = s.as_ref();
            if s[1..].contains(&BOS) {
                return Err(ModelError::InvalidBatch(
                    "<bos> may only start a sequence".into(),
                ));
            }
            ids.extend_from_slice(s);
            ids.extend(std::iter::repeat_n(PAD, len - s.len()));
        }
        Ok(Batch {
            ids,
            rows: seqs.len(),
            len,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, r: usize) -> &[u32] {
        &self.ids[r * self.len..(r + 1) * self.len]
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    /// Next-token target for every position; `<pad>` where there is none.
    pub fn targets(&self) -> Vec<u32> {
        let mut out = vec![PAD; self.ids.len()];
        for r in 0..self.rows {
            for t in 0..self.len - 1 {
                out[r * self.len + t] = self.ids[r * self.len + t + 1];
            }
        }
        out
    }

    /// Number of positions that contribute to the loss.
    pub fn target_count(&self) -> usize {
        self.targets().iter().filter(|&&t| t != PAD).count()
    }

    fn check(&self, cfg: &ModelConfig) -> Result<(), ModelError> {
        if self.len > cfg.max_seq_len {
            return Err(ModelError::SequenceTooLong {
                len: self.len,
                max: cfg.max_seq_len,
            });
        }
        if let Some(&id) = self.ids.iter().find(|&&id| id as usize >= cfg.vocab_size) {
            return Err(ModelError::TokenOutOfRange {
                id,
                vocab_size: cfg.vocab_size,
            });
        }
        Ok(())
    }
}

/// Pre-softmax scores, one row of `vocab_size` per (row, position).
#[derive(Debug, Clone, PartialEq)]
pub struct Logits {
    pub data: Vec<f64>,
    pub rows: usize,
    pub len: usize,
    pub vocab_size: usize,
}

impl Logits {
    pub fn at(&self, row: usize, pos: usize) -> &[f64] {
        let i = (row * self.len + pos) * self.vocab_size;
        &self.data[i..i + self.vocab_size]
    }
}

pub enum Mode<'a> {
    Eval,
    /// Dropout active, masks drawn from the given generator.
    Train(&'a mut dyn RngCore),
}

struct LayerTrace {
    ln1: LnCache,
    ln1_out: Vec<f64>,
    qkv: Vec<f64>,
    att: Vec<f64>,
    y: Vec<f64>,
    drop_attn: Option<Vec<f64>>,
    ln2: LnCache,
    ln2_out: Vec<f64>,
    fc: Vec<f64>,
    act: Vec<f64>,
    drop_mlp: Option<Vec<f64>>,
}

/// Activations saved by the forward pass for backpropagation.
pub struct Trace {
    rows: usize,
    len: usize,
    emb_drop: Option<Vec<f64>>,
    layers: Vec<LayerTrace>,
    lnf: LnCache,
    lnf_out: Vec<f64>,
}

impl Trace {
    /// Attention probabilities of one layer, laid out `[row][head][query][key]`.
    pub fn attention(&self, layer: usize) -> &[f64] {
        &self.layers[layer].att
    }
}

fn dropout_mask(n: usize, p: f64, mode: &mut Mode) -> Option<Vec<f64>> {
    match mode {
        Mode::Train(rng) if p > 0.0 => {
            let keep = 1.0 / (1.0 - p);
            Some(
                (0..n)
                    .map(|_| if rng.gen::<f64>() < p { 0.0 } else { keep })
                    .collect(),
            )
        }
        _ => None,
    }
}

fn apply_mask(x: &mut [f64], mask: &Option<Vec<f64>>) {
    if let Some(m) = mask {
        for (v, k) in x.iter_mut().zip(m) {
            *v *= k;
        }
    }
}

/// Causal multi-head attention over a packed `[q | k | v]` buffer.
fn attention_forward(
    qkv: &[f64],
    rows: usize,
    len: usize,
    cfg: &ModelConfig,
    att: &mut [f64],
    y: &mut [f64],
) {
    let (d, h, dh) = (cfg.d_model, cfg.n_heads, cfg.head_dim());
    let scale = 1.0 / (dh as f64).sqrt();
    for b in 0..rows {
        for head in 0..h {
            let base = (b * h + head) * len * len;
            for t in 0..len {
                let qo = (b * len + t) * 3 * d + head * dh;
                let scores = &mut att[base + t * len..base + (t + 1) * len];
                for s in 0..len {
                    scores[s] = if s > t {
                        f64::NEG_INFINITY
                    } else {
                        let ko = (b * len + s) * 3 * d + d + head * dh;
                        scale * (0..dh).map(|i| qkv[qo + i] * qkv[ko + i]).sum::<f64>()
                    };
                }
                softmax_in_place(scores);
                let yo = (b * len + t) * d + head * dh;
                for s in 0..=t {
                    let p = scores[s];
                    let vo = (b * len + s) * 3 * d + 2 * d + head * dh;
                    for i in 0..dh {
                        y[yo + i] += p * qkv[vo + i];
                    }
                }
            }
        }
    }
}

fn attention_backward(
    qkv: &[f64],
    att: &[f64],
    dy: &[f64],
    rows: usize,
    len: usize,
    cfg: &ModelConfig,
    dqkv: &mut [f64],
) {
    let (d, h, dh) = (cfg.d_model, cfg.n_heads, cfg.head_dim());
    let scale = 1.0 / (dh as f64).sqrt();
    let mut datt = vec![0.0; len];
    for b in 0..rows {
        for head in 0..h {
            let base = (b * h + head) * len * len;
            for t in 0..len {
                let p = &att[base + t * len..base + (t + 1) * len];
                let yo = (b * len + t) * d + head * dh;
                let qo = (b * len + t) * 3 * d + head * dh;
                let mut dot = 0.0;
                for s in 0..=t {
                    let vo = (b * len + s) * 3 * d + 2 * d + head * dh;
                    datt[s] = (0..dh).map(|i| dy[yo + i] * qkv[vo + i]).sum();
                    dot += p[s] * datt[s];
                    for i in 0..dh {
                        dqkv[vo + i] += p[s] * dy[yo + i];
                    }
                }
                for s in 0..=t {
                    let ds = scale * p[s] * (datt[s] - dot);
                    if ds == 0.0 {
                        continue;
                    }
                    let ko = (b * len + s) * 3 * d + d + head * dh;
                    for i in 0..dh {
                        dqkv[qo + i] += ds * qkv[ko + i];
                        dqkv[ko + i] += ds * qkv[qo + i];
                    }
                }
            }
        }
    }
}

/// Logits in evaluation mode.
pub fn forward(params: &ModelParams, batch: &Batch) -> Result<Logits, ModelError> {
    forward_traced(params, batch, &mut Mode::Eval).map(|(l, _)| l)
}

pub fn forward_traced(
    params: &ModelParams,
    batch: &Batch,
    mode: &mut Mode,
) -> Result<(Logits, Trace), ModelError> {
    let cfg = params.config;
    batch.check(&cfg)?;
    let (rows, len, d, ff, v) = (batch.rows, batch.len, cfg.d_model, cfg.d_ff, cfg.vocab_size);
    let n = rows * len;

    let wte = params.tensor(WTE);
    let wpe = params.tensor(WPE);
    let mut x = vec![0.0; n * d];
    for r in 0..rows {
        for t in 0..len {
            let id = batch.ids[r * len + t] as usize;
            let row = &mut x[(r * len + t) * d..(r * len + t + 1) * d];
            for i in 0..d {
                row[i] = wte[id * d + i] + wpe[t * d + i];
            }
        }
    }
    let emb_drop = dropout_mask(n * d, cfg.dropout, mode);
    apply_mask(&mut x, &emb_drop);

    let mut layers = Vec::with_capacity(cfg.n_layers);
    for l in 0..cfg.n_layers {
        let mut ln1_out = vec![0.0; n * d];
        let ln1 = layer_norm(&x, params.block(l, LN1_GAIN), params.block(l, LN1_BIAS), &mut ln1_out);
        let mut qkv = vec![0.0; n * 3 * d];
        gemm(n, d, 3 * d, &ln1_out, false, params.block(l, W_QKV), false, 0.0, &mut qkv);
        add_bias(&mut qkv, params.block(l, B_QKV));
        let mut att = vec![0.0; rows * cfg.n_heads * len * len];
        let mut y = vec![0.0; n * d];
        attention_forward(&qkv, rows, len, &cfg, &mut att, &mut y);
        let mut proj = vec![0.0; n * d];
        gemm(n, d, d, &y, false, params.block(l, W_OUT), false, 0.0, &mut proj);
        add_bias(&mut proj, params.block(l, B_OUT));
        let drop_attn = dropout_mask(n * d, cfg.dropout, mode);
        apply_mask(&mut proj, &drop_attn);
        for (a, b) in x.iter_mut().zip(&proj) {
            *a += b;
        }

        let mut ln2_out = vec![0.0; n * d];
        let ln2 = layer_norm(&x, params.block(l, LN2_GAIN), params.block(l, LN2_BIAS), &mut ln2_out);
        let mut fc = vec![0.0; n * ff];
        gemm(n, d, ff, &ln2_out, false, params.block(l, W_FC), false, 0.0, &mut fc);
        add_bias(&mut fc, params.block(l, B_FC));
        let act: Vec<f64> = fc.iter().map(|&u| gelu(u)).collect();
        let mut out = vec![0.0; n * d];
        gemm(n, ff, d, &act, false, params.block(l, W_PROJ), false, 0.0, &mut out);
        add_bias(&mut out, params.block(l, B_PROJ));
        let drop_mlp = dropout_mask(n * d, cfg.dropout, mode);
        apply_mask(&mut out, &drop_mlp);
        for (a, b) in x.iter_mut().zip(&out) {
            *a += b;
        }

        layers.push(LayerTrace {
            ln1,
            ln1_out,
            qkv,
            att,
            y,
            drop_attn,
            ln2,
            ln2_out,
            fc,
            act,
            drop_mlp,
        });
    }

    let gi = params.final_gain_index();
    let mut lnf_out = vec![0.0; n * d];
    let lnf = layer_norm(&x, params.tensor(gi), params.tensor(gi + 1), &mut lnf_out);
    let mut logits = vec![0.0; n * v];
    gemm(n, d, v, &lnf_out, false, wte, true, 0.0, &mut logits);
    for row in logits.chunks_exact_mut(v) {
        row[PAD as usize] = f64::NEG_INFINITY;
        row[BOS as usize] = f64::NEG_INFINITY;
    }

    Ok((
        Logits {
            data: logits,
            rows,
            len,
            vocab_size: v,
        },
        Trace {
            rows,
            len,
            emb_drop,
            layers,
            lnf,
            lnf_out,
        },
    ))
}

/// Mean next-token cross-entropy over non-pad targets, with its gradient
/// with respect to the logits.
pub fn cross_entropy(logits: &Logits, batch: &Batch) -> Result<(f64, Vec<f64>), ModelError> {
    let v = logits.vocab_size;
    let targets = batch.targets();
    let count = targets.iter().filter(|&&t| t != PAD).count();
    if count == 0 {
        return Err(ModelError::AllMasked);
    }
    let inv = 1.0 / count as f64;
    let mut total = 0.0;
    let mut dlogits = vec![0.0; logits.data.len()];
    for (i, &target) in targets.iter().enumerate() {
        if target == PAD {
            continue;
        }
        let row = &logits.data[i * v..(i + 1) * v];
        let drow = &mut dlogits[i * v..(i + 1) * v];
        drow.copy_from_slice(row);
        softmax_in_place(drow);
        total -= drow[target as usize].ln();
        drow[target as usize] -= 1.0;
        for g in drow.iter_mut() {
            *g *= inv;
        }
    }
    Ok((total * inv, dlogits))
}

/// Evaluation-mode loss.
pub fn loss(params: &ModelParams, batch: &Batch) -> Result<f64, ModelError> {
    let logits = forward(params, batch)?;
    cross_entropy(&logits, batch).map(|(l, _)| l)
}

/// Loss and its exact gradient with respect to every parameter.
pub fn grad(
    params: &ModelParams,
    batch: &Batch,
    mode: &mut Mode,
) -> Result<(f64, Gradients), ModelError> {
    grad_scaled(params, batch, mode, 1.0)
}

/// As [`grad`], with the loss (and gradient) multiplied by `scale`. Used to
/// combine micro-batches into one weighted mean.
pub fn grad_scaled(
    params: &ModelParams,
    batch: &Batch,
    mode: &mut Mode,
    scale: f64,
) -> Result<(f64, Gradients), ModelError> {
    let (logits, trace) = forward_traced(params, batch, mode)?;
    let (loss, mut dlogits) = cross_entropy(&logits, batch)?;
    if scale != 1.0 {
        for g in &mut dlogits {
            *g *= scale;
        }
    }
    let grads = backward(params, batch, &trace, &dlogits);
    grads.all_finite()?;
    Ok((loss * scale, grads))
}

fn backward(params: &ModelParams, batch: &Batch, tr: &Trace, dlogits: &[f64]) -> Gradients {
    let cfg = params.config;
    let (rows, len, d, ff, v) = (tr.rows, tr.len, cfg.d_model, cfg.d_ff, cfg.vocab_size);
    let n = rows * len;
    let mut g = params.zeros_like();
    let wte = params.tensor(WTE);

    // Tied output projection.
    let mut d_lnf_out = vec![0.0; n * d];
    gemm(n, v, d, dlogits, false, wte, false, 0.0, &mut d_lnf_out);
    gemm(v, n, d, dlogits, true, &tr.lnf_out, false, 1.0, g.tensor_mut(WTE));

    let gi = params.final_gain_index();
    let mut dx = vec![0.0; n * d];
    {
        let (mut dg, mut db) = (vec![0.0; d], vec![0.0; d]);
        layer_norm_backward(&tr.lnf, params.tensor(gi), &d_lnf_out, &mut dx, &mut dg, &mut db);
        g.tensor_mut(gi).copy_from_slice(&dg);
        g.tensor_mut(gi + 1).copy_from_slice(&db);
    }

    for l in (0..cfg.n_layers).rev() {
        let lt = &tr.layers[l];
        let idx = |w| params.block_index(l, w);

        // MLP branch.
        let mut d_out = dx.clone();
        apply_mask(&mut d_out, &lt.drop_mlp);
        gemm(ff, n, d, &lt.act, true, &d_out, false, 1.0, g.tensor_mut(idx(W_PROJ)));
        col_sum_into(&d_out, g.tensor_mut(idx(B_PROJ)));
        let mut d_act = vec![0.0; n * ff];
        gemm(n, d, ff, &d_out, false, params.block(l, W_PROJ), true, 0.0, &mut d_act);
        for (da, &u) in d_act.iter_mut().zip(&lt.fc) {
            *da *= gelu_grad(u);
        }
        gemm(d, n, ff, &lt.ln2_out, true, &d_act, false, 1.0, g.tensor_mut(idx(W_FC)));
        col_sum_into(&d_act, g.tensor_mut(idx(B_FC)));
        let mut d_ln2 = vec![0.0; n * d];
        gemm(n, ff, d, &d_act, false, params.block(l, W_FC), true, 0.0, &mut d_ln2);
        {
            let (mut dg, mut db) = (vec![0.0; d], vec![0.0; d]);
            layer_norm_backward(&lt.ln2, params.block(l, LN2_GAIN), &d_ln2, &mut dx, &mut dg, &mut db);
            g.tensor_mut(idx(LN2_GAIN)).copy_from_slice(&dg);
            g.tensor_mut(idx(LN2_BIAS)).copy_from_slice(&db);
        }

        // Attention branch.
        let mut d_proj = dx.clone();
        apply_mask(&mut d_proj, &lt.drop_attn);
        gemm(d, n, d, &lt.y, true, &d_proj, false, 1.0, g.tensor_mut(idx(W_OUT)));
        col_sum_into(&d_proj, g.tensor_mut(idx(B_OUT)));
        let mut dy = vec![0.0; n * d];
        gemm(n, d, d, &d_proj, false, params.block(l, W_OUT), true, 0.0, &mut dy);
        let mut dqkv = vec![0.0; n * 3 * d];
        attention_backward(&lt.qkv, &lt.att, &dy, rows, len, &cfg, &mut dqkv);
        gemm(d, n, 3 * d, &lt.ln1_out, true, &dqkv, false, 1.0, g.tensor_mut(idx(W_QKV)));
        col_sum_into(&dqkv, g.tensor_mut(idx(B_QKV)));
        let mut d_ln1 = vec![0.0; n * d];
        gemm(n, 3 * d, d, &dqkv, false, params.block(l, W_QKV), true, 0.0, &mut d_ln1);
        {
            let (mut dg, mut db) = (vec![0.0; d], vec![0.0; d]);
            layer_norm_backward(&lt.ln1, params.block(l, LN1_GAIN), &d_ln1, &mut dx, &mut dg, &mut db);
            g.tensor_mut(idx(LN1_GAIN)).copy_from_slice(&dg);
            g.tensor_mut(idx(LN1_BIAS)).copy_from_slice(&db);
        }
    }

    apply_mask(&mut dx, &tr.emb_drop);
    for r in 0..rows {
        for t in 0..len {
            let id = batch.ids[r * len + t] as usize;
            let src = &dx[(r * len + t) * d..(r * len + t + 1) * d];
            let wte_g = g.tensor_mut(WTE);
            for i in 0..d {
                wte_g[id * d + i] += src[i];
            }
            let wpe_g = g.tensor_mut(WPE);
            for i in 0..d {
                wpe_g[t * d + i] += src[i];
            }
        }
    }
    g
}
