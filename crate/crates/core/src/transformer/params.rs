use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    #[serde(skip)]
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn is_gain(&self) -> bool {
        self.name.ends_with(".gain")
    }

    fn is_bias(&self) -> bool {
        self.name.ends_with(".bias") || self.name.contains(".b_")
    }
}

/// Tensors per block, in layout order.
pub(crate) const BLOCK_TENSORS: usize = 12;
pub(crate) const LN1_GAIN: usize = 0;
pub(crate) const LN1_BIAS: usize = 1;
pub(crate) const W_QKV: usize = 2;
pub(crate) const B_QKV: usize = 3;
pub(crate) const W_OUT: usize = 4;
pub(crate) const B_OUT: usize = 5;
pub(crate) const LN2_GAIN: usize = 6;
pub(crate) const LN2_BIAS: usize = 7;
pub(crate) const W_FC: usize = 8;
pub(crate) const B_FC: usize = 9;
pub(crate) const W_PROJ: usize = 10;
pub(crate) const B_PROJ: usize = 11;

pub(crate) const WTE: usize = 0;
pub(crate) const WPE: usize = 1;

pub(crate) fn layout(cfg: &ModelConfig) -> Vec<TensorSpec> {
    let (d, ff) = (cfg.d_model, cfg.d_ff);
    let mut specs: Vec<(String, Vec<usize>)> = vec![
        ("wte".into(), vec![cfg.vocab_size, d]),
        ("wpe".into(), vec![cfg.max_seq_len, d]),
    ];
    for l in 0..cfg.n_layers {
        let p = |n: &str| format!("h{l}.{n}");
        specs.extend([
            (p("ln1.gain"), vec![d]),
            (p("ln1.bias"), vec![d]),
            (p("attn.w_qkv"), vec![d, 3 * d]),
            (p("attn.b_qkv"), vec![3 * d]),
            (p("attn.w_out"), vec![d, d]),
            (p("attn.b_out"), vec![d]),
            (p("ln2.gain"), vec![d]),
            (p("ln2.bias"), vec![d]),
            (p("mlp.w_fc"), vec![d, ff]),
            (p("mlp.b_fc"), vec![ff]),
            (p("mlp.w_proj"), vec![ff, d]),
            (p("mlp.b_proj"), vec![d]),
        ]);
    }
    specs.push(("lnf.gain".into(), vec![d]));
    specs.push(("lnf.bias".into(), vec![d]));

    let mut offset = 0;
    specs
        .into_iter()
        .map(|(name, shape)| {
            let spec = TensorSpec {
                name,
                shape,
                offset,
            };
            offset += spec.len();
            spec
        })
        .collect()
}

/// All model weights in one contiguous buffer, addressed through a named layout.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    layout: Vec<TensorSpec>,
    data: Vec<f64>,
}

/// Gradients share the parameter layout.
pub type Gradients = ModelParams;

impl ModelParams {
    pub fn zeros(config: ModelConfig) -> Result<Self, ModelError> {
        config.validate()?;
        let layout = layout(&config);
        let n = layout.iter().map(TensorSpec::len).sum();
        Ok(ModelParams {
            config,
            layout,
            data: vec![0.0; n],
        })
    }

    pub fn zeros_like(&self) -> Self {
        ModelParams {
            config: self.config,
            layout: self.layout.clone(),
            data: vec![0.0; self.data.len()],
        }
    }

    /// Weights ~ N(0, 0.02²), biases 0, layer-norm gains 1.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self, ModelError> {
        let mut params = ModelParams::zeros(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 0.02).expect("valid normal");
        for k in 0..params.layout.len() {
            let spec = params.layout[k].clone();
            let slice = &mut params.data[spec.offset..spec.offset + spec.len()];
            if spec.is_gain() {
                slice.fill(1.0);
            } else if spec.is_bias() {
                slice.fill(0.0);
            } else {
                for v in slice {
                    *v = normal.sample(&mut rng);
                }
            }
        }
        Ok(params)
    }

    /// Rebuilds parameters from a flat buffer in layout order.
    pub fn from_flat(config: ModelConfig, data: Vec<f64>) -> Result<Self, ModelError> {
        let mut params = ModelParams::zeros(config)?;
        if data.len() != params.data.len() {
            return Err(ModelError::BadCheckpoint(format!(
                "expected {} values, found {}",
                params.data.len(),
                data.len()
            )));
        }
        params.data = data;
        Ok(params)
    }

    pub fn layout(&self) -> &[TensorSpec] {
        &self.layout
    }

    pub fn num_params(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn tensor(&self, index: usize) -> &[f64] {
        let s = &self.layout[index];
        &self.data[s.offset..s.offset + s.len()]
    }

    pub fn tensor_mut(&mut self, index: usize) -> &mut [f64] {
        let s = &self.layout[index];
        &mut self.data[s.offset..s.offset + s.len()]
    }

    pub fn tensor_by_name(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .iter()
            .position(|s| s.name == name)
            .map(|i| self.tensor(i))
    }

    pub(crate) fn block_index(&self, layer: usize, which: usize) -> usize {
        2 + layer * BLOCK_TENSORS + which
    }

    pub(crate) fn block(&self, layer: usize, which: usize) -> &[f64] {
        self.tensor(self.block_index(layer, which))
    }

    pub(crate) fn final_gain_index(&self) -> usize {
        2 + self.config.n_layers * BLOCK_TENSORS
    }

    /// Name of the tensor containing flat index `i`.
    pub fn name_of(&self, i: usize) -> &str {
        self.layout
            .iter()
            .find(|s| i >= s.offset && i < s.offset + s.len())
            .map_or("?", |s| s.name.as_str())
    }

    pub fn l2_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.data {
            *v *= factor;
        }
    }

    pub fn all_finite(&self) -> Result<(), ModelError> {
        for s in &self.layout {
            if !self.data[s.offset..s.offset + s.len()].iter().all(|v| v.is_finite()) {
                return Err(ModelError::NonFiniteGradient(s.name.clone()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            n_layers: 2,
            d_model: 64,
            n_heads: 4,
            d_ff: 256,
            max_seq_len: 128,
            vocab_size: 100,
            dropout: 0.1,
        }
    }

    #[test]
    fn parameter_count_matches_shape_arithmetic() {
        let p = ModelParams::init(cfg(), 0).unwrap();
        let (v, d, t, ff) = (100, 64, 128, 256);
        let per_block = 2 * d + (d * 3 * d + 3 * d) + (d * d + d) + 2 * d + (d * ff + ff) + (ff * d + d);
        assert_eq!(p.num_params(), v * d + t * d + 2 * per_block + 2 * d);
        assert_eq!(p.num_params(), 114_688);
    }

    #[test]
    fn init_is_deterministic_and_structured() {
        let a = ModelParams::init(cfg(), 5).unwrap();
        let b = ModelParams::init(cfg(), 5).unwrap();
        let c = ModelParams::init(cfg(), 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        for spec in a.layout() {
            let t = a.tensor_by_name(&spec.name).unwrap();
            if spec.name.ends_with(".gain") {
                assert!(t.iter().all(|&v| v == 1.0), "{}", spec.name);
            } else if spec.name.ends_with(".bias") || spec.name.contains(".b_") {
                assert!(t.iter().all(|&v| v == 0.0), "{}", spec.name);
            }
        }
        let wte = a.tensor_by_name("wte").unwrap();
        let std = (wte.iter().map(|v| v * v).sum::<f64>() / wte.len() as f64).sqrt();
        assert!((std - 0.02).abs() < 0.002, "{std}");
    }

    #[test]
    fn rejects_bad_config() {
        let mut c = cfg();
        c.n_heads = 5;
        assert!(ModelParams::init(c, 0).is_err());
    }
}
