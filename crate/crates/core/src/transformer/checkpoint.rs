//! Binary checkpoint format.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "CHEMLMCK"
//! 8       4     format version, u32 little-endian
//! 12      4     header length H, u32 little-endian
//! 16      H     UTF-8 JSON header: config, vocab_hash, step, rng, tensors[{name, shape}]
//! 16+H    ...   per tensor, in header order: u64 LE element count, then that
//!               many f64 LE values
//! ```
//!
//! Optimizer moments, when present, follow the model tensors as
//! `adam.m` and `adam.v`.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError, ModelParams};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CHEMLMCK";
pub const CHECKPOINT_VERSION: u32 = 1;

/// Position of a ChaCha stream: seed plus word offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    #[serde(with = "u128_string")]
    pub word_pos: u128,
}

mod u128_string {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &u128, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<u128, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: ModelParams,
    pub vocab_hash: String,
    pub step: u64,
    pub rng: RngState,
    /// Adam first and second moments, for resuming.
    pub moments: Option<(Vec<f64>, Vec<f64>)>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    vocab_hash: String,
    step: u64,
    rng: RngState,
    tensors: Vec<TensorHeader>,
}

#[derive(Serialize, Deserialize)]
struct TensorHeader {
    name: String,
    shape: Vec<usize>,
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut tensors: Vec<TensorHeader> = self
            .params
            .layout()
            .iter()
            .map(|s| TensorHeader {
                name: s.name.clone(),
                shape: s.shape.clone(),
            })
            .collect();
        let mut chunks: Vec<&[f64]> = (0..tensors.len()).map(|i| self.params.tensor(i)).collect();
        if let Some((m, v)) = &self.moments {
            for (name, data) in [("adam.m", m), ("adam.v", v)] {
                tensors.push(TensorHeader {
                    name: name.into(),
                    shape: vec![data.len()],
                });
                chunks.push(data);
            }
        }
        let header = Header {
            config: self.params.config,
            vocab_hash: self.vocab_hash.clone(),
            step: self.step,
            rng: self.rng,
            tensors,
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let body: usize = chunks.iter().map(|c| 8 + 8 * c.len()).sum();
        let mut out = Vec::with_capacity(16 + json.len() + body);
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(json.len() as u32).to_le_bytes());
        out.extend_from_slice(&json);
        for c in chunks {
            out.extend_from_slice(&(c.len() as u64).to_le_bytes());
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelError> {
        let bad = |m: &str| ModelError::BadCheckpoint(m.to_string());
        let mut r = bytes;
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(|_| bad("truncated magic"))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("not a checkpoint file"));
        }
        let version = read_u32(&mut r).ok_or_else(|| bad("truncated version"))?;
        if version != CHECKPOINT_VERSION {
            return Err(ModelError::BadCheckpoint(format!(
                "unsupported format version {version}"
            )));
        }
        let hlen = read_u32(&mut r).ok_or_else(|| bad("truncated header length"))? as usize;
        if r.len() < hlen {
            return Err(bad("truncated header"));
        }
        let header: Header = serde_json::from_slice(&r[..hlen])
            .map_err(|e| ModelError::BadCheckpoint(format!("header: {e}")))?;
        r = &r[hlen..];

        let expected = ModelParams::zeros(header.config)?;
        let n_model = expected.layout().len();
        if header.tensors.len() != n_model && header.tensors.len() != n_model + 2 {
            return Err(bad("unexpected tensor count"));
        }
        let mut flat = Vec::with_capacity(expected.num_params());
        let mut extra = Vec::new();
        for (i, t) in header.tensors.iter().enumerate() {
            let count = read_u64(&mut r).ok_or_else(|| bad("truncated tensor length"))? as usize;
            let want: usize = t.shape.iter().product();
            if count != want {
                return Err(ModelError::BadCheckpoint(format!("tensor {} length mismatch", t.name)));
            }
            if i < n_model {
                let spec = &expected.layout()[i];
                if spec.name != t.name || spec.shape != t.shape {
                    return Err(ModelError::BadCheckpoint(format!(
                        "tensor {} does not match the configured layout",
                        t.name
                    )));
                }
            }
            if r.len() < 8 * count {
                return Err(bad("truncated tensor data"));
            }
            let values: Vec<f64> = r[..8 * count]
                .chunks_exact(8)
                .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
                .collect();
            r = &r[8 * count..];
            if i < n_model {
                flat.extend(values);
            } else {
                extra.push(values);
            }
        }
        if !r.is_empty() {
            return Err(bad("trailing bytes"));
        }
        let moments = match extra.len() {
            2 => {
                let v = extra.pop().expect("two entries");
                let m = extra.pop().expect("two entries");
                if m.len() != flat.len() || v.len() != flat.len() {
                    return Err(bad("optimizer moments do not match parameters"));
                }
                Some((m, v))
            }
            _ => None,
        };
        Ok(Checkpoint {
            params: ModelParams::from_flat(header.config, flat)?,
            vocab_hash: header.vocab_hash,
            step: header.step,
            rng: header.rng,
            moments,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Checkpoint::from_bytes(&std::fs::read(path)?)
    }
}

fn read_u32(r: &mut &[u8]) -> Option<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).ok()?;
    Some(u32::from_le_bytes(b))
}

fn read_u64(r: &mut &[u8]) -> Option<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).ok()?;
    Some(u64::from_le_bytes(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transformer::{forward, Batch};

    fn checkpoint(with_moments: bool) -> Checkpoint {
        let cfg = ModelConfig {
            n_layers: 1,
            d_model: 8,
            n_heads: 2,
            d_ff: 8,
            max_seq_len: 6,
            vocab_size: 7,
            dropout: 0.1,
        };
        let params = ModelParams::init(cfg, 4).unwrap();
        let n = params.num_params();
        Checkpoint {
            params,
            vocab_hash: "ab".repeat(32),
            step: 17,
            rng: RngState {
                seed: 3,
                word_pos: 1 << 70,
            },
            moments: with_moments.then(|| (vec![0.5; n], vec![0.25; n])),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        for m in [false, true] {
            let ck = checkpoint(m);
            let bytes = ck.to_bytes();
            assert_eq!(&bytes[..8], CHECKPOINT_MAGIC);
            let back = Checkpoint::from_bytes(&bytes).unwrap();
            assert_eq!(back, ck);
            assert_eq!(back.to_bytes(), bytes);
            let batch = Batch::new(&[vec![1u32, 3, 4, 2]]).unwrap();
            let a = forward(&ck.params, &batch).unwrap();
            let b = forward(&back.params, &batch).unwrap();
            assert!(a.data.iter().zip(&b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn rejects_corruption() {
        let bytes = checkpoint(false).to_bytes();
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(Checkpoint::from_bytes(&wrong_magic).is_err());
        assert!(Checkpoint::from_bytes(&bytes[..bytes.len() - 3]).is_err());
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(Checkpoint::from_bytes(&trailing).is_err());
        let mut version = bytes;
        version[8] = 9;
        assert!(Checkpoint::from_bytes(&version).is_err());
    }
}
