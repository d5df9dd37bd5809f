use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::TemporalError;

pub const WEIGHT_MAGIC: &[u8; 4] = b"UDMW";
pub const WEIGHT_VERSION: u32 = 1;

/// Widths and depths of the temporal stack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalConfig {
    pub input_dim: usize,
    pub hidden_size: usize,
    pub model_dim: usize,
    pub n_heads: usize,
    pub n_layers: usize,
    pub fused_dim: usize,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self {
            input_dim: 96,
            hidden_size: 256,
            model_dim: 256,
            n_heads: 8,
            n_layers: 6,
            fused_dim: 256,
        }
    }
}

const META_KEYS: [&str; 6] = [
    "meta.input_dim",
    "meta.hidden_size",
    "meta.model_dim",
    "meta.n_heads",
    "meta.n_layers",
    "meta.fused_dim",
];

impl TemporalConfig {
    fn values(&self) -> [usize; 6] {
        [
            self.input_dim,
            self.hidden_size,
            self.model_dim,
            self.n_heads,
            self.n_layers,
            self.fused_dim,
        ]
    }

    pub fn validate(&self) -> Result<(), TemporalError> {
        if self.values().contains(&0) {
            return Err(TemporalError::ShapeMismatch("all dimensions must be positive".into()));
        }
        if !self.model_dim.is_multiple_of(self.n_heads) {
            return Err(TemporalError::ShapeMismatch(format!(
                "model_dim {} not divisible by n_heads {}",
                self.model_dim, self.n_heads
            )));
        }
        Ok(())
    }

    /// Every tensor the stack needs, with its shape.
    pub fn expected_shapes(&self) -> Vec<(String, Vec<usize>)> {
        let (h, i, d, f) = (self.hidden_size, self.input_dim, self.model_dim, self.fused_dim);
        let mut out = Vec::new();
        for gate in ["i", "f", "g", "o"] {
            out.push((format!("lstm.{gate}.w_in"), vec![h, i]));
            out.push((format!("lstm.{gate}.w_rec"), vec![h, h]));
            out.push((format!("lstm.{gate}.bias"), vec![h]));
        }
        out.push(("global.in_proj.weight".into(), vec![d, i]));
        out.push(("global.in_proj.bias".into(), vec![d]));
        for l in 0..self.n_layers {
            let p = format!("global.layer{l}");
            for ln in ["ln1", "ln2"] {
                out.push((format!("{p}.{ln}.scale"), vec![d]));
                out.push((format!("{p}.{ln}.shift"), vec![d]));
            }
            for proj in ["q", "k", "v", "o"] {
                out.push((format!("{p}.attn.{proj}.weight"), vec![d, d]));
                out.push((format!("{p}.attn.{proj}.bias"), vec![d]));
            }
            out.push((format!("{p}.ff.w1"), vec![4 * d, d]));
            out.push((format!("{p}.ff.b1"), vec![4 * d]));
            out.push((format!("{p}.ff.w2"), vec![d, 4 * d]));
            out.push((format!("{p}.ff.b2"), vec![d]));
        }
        out.push(("global.ln_out.scale".into(), vec![d]));
        out.push(("global.ln_out.shift".into(), vec![d]));
        out.push(("fusion.weight".into(), vec![f, h + d]));
        out.push(("fusion.bias".into(), vec![f]));
        out.push(("open_set.centroid".into(), vec![f]));
        out.push(("open_set.scale".into(), vec![1]));
        out
    }
}

/// Row-major `f32` tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> Result<Self, TemporalError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(TemporalError::ShapeMismatch(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: Vec<usize>) -> Self {
        let n = shape.iter().product();
        Self { shape, data: vec![0.0; n] }
    }
}

/// Named tensors for the whole temporal stack, plus the configuration they
/// were built for.
///
/// File layout (little-endian): magic `UDMW`, `u32` version, `u32` record
/// count, then per record `u32` name length, UTF-8 name, `u32` rank, `rank`
/// `u32` dims and the row-major `f32` values. The configuration travels as
/// one-element `meta.*` records.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightBundle {
    config: TemporalConfig,
    tensors: BTreeMap<String, Tensor>,
}

impl WeightBundle {
    /// Validates that every expected tensor is present with the right shape
    /// and only finite values.
    pub fn new(config: TemporalConfig, tensors: BTreeMap<String, Tensor>) -> Result<Self, TemporalError> {
        config.validate()?;
        for (name, shape) in config.expected_shapes() {
            let t = tensors
                .get(&name)
                .ok_or_else(|| TemporalError::MissingTensor(name.clone()))?;
            if t.shape != shape {
                return Err(TemporalError::ShapeMismatch(format!(
                    "{name}: expected {shape:?}, got {:?}",
                    t.shape
                )));
            }
            if t.data.iter().any(|v| !v.is_finite()) {
                return Err(TemporalError::BadWeights(format!("{name} has non-finite values")));
            }
        }
        Ok(Self { config, tensors })
    }

    pub fn zeros(config: TemporalConfig) -> Result<Self, TemporalError> {
        let mut tensors: BTreeMap<String, Tensor> = config
            .expected_shapes()
            .into_iter()
            .map(|(n, s)| (n, Tensor::zeros(s)))
            .collect();
        tensors.get_mut("open_set.scale").expect("declared").data[0] = 1.0;
        Self::new(config, tensors)
    }

    /// Seeded demo weights: uniform in `±1/sqrt(fan_in)`, unit layer-norm
    /// scales, zero shifts and centroid.
    pub fn random(config: TemporalConfig, seed: u64) -> Result<Self, TemporalError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensors = BTreeMap::new();
        for (name, shape) in config.expected_shapes() {
            let n: usize = shape.iter().product();
            let data: Vec<f32> = if name.ends_with(".scale") {
                vec![1.0; n]
            } else if name.ends_with(".shift") || name == "open_set.centroid" {
                vec![0.0; n]
            } else {
                let fan_in = *shape.last().expect("rank >= 1") as f32;
                let a = 1.0 / fan_in.sqrt();
                (0..n).map(|_| rng.random_range(-a..a)).collect()
            };
            tensors.insert(name, Tensor { shape, data });
        }
        Self::new(config, tensors)
    }

    pub fn config(&self) -> &TemporalConfig {
        &self.config
    }

    pub fn get(&self, name: &str) -> Result<&Tensor, TemporalError> {
        self.tensors
            .get(name)
            .ok_or_else(|| TemporalError::MissingTensor(name.to_string()))
    }

    /// Replaces one tensor, keeping its declared shape.
    pub fn set(&mut self, name: &str, data: Vec<f32>) -> Result<(), TemporalError> {
        let t = self
            .tensors
            .get_mut(name)
            .ok_or_else(|| TemporalError::MissingTensor(name.to_string()))?;
        if t.data.len() != data.len() || data.iter().any(|v| !v.is_finite()) {
            return Err(TemporalError::ShapeMismatch(format!("{name}: bad replacement")));
        }
        t.data = data;
        Ok(())
    }

    pub fn matrix(&self, name: &str) -> Result<Array2<f64>, TemporalError> {
        let t = self.get(name)?;
        if t.shape.len() != 2 {
            return Err(TemporalError::ShapeMismatch(format!("{name} is not a matrix")));
        }
        Ok(Array2::from_shape_fn((t.shape[0], t.shape[1]), |(r, c)| {
            t.data[r * t.shape[1] + c] as f64
        }))
    }

    pub fn vector(&self, name: &str) -> Result<Array1<f64>, TemporalError> {
        let t = self.get(name)?;
        Ok(t.data.iter().map(|&v| v as f64).collect())
    }

    pub fn scalar(&self, name: &str) -> Result<f64, TemporalError> {
        Ok(self.get(name)?.data[0] as f64)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(WEIGHT_MAGIC);
        out.extend_from_slice(&WEIGHT_VERSION.to_le_bytes());
        let meta: Vec<(String, Tensor)> = META_KEYS
            .iter()
            .zip(self.config.values())
            .map(|(k, v)| (k.to_string(), Tensor { shape: vec![1], data: vec![v as f32] }))
            .collect();
        let count = (meta.len() + self.tensors.len()) as u32;
        out.extend_from_slice(&count.to_le_bytes());
        for (name, t) in meta.iter().map(|(n, t)| (n, t)).chain(self.tensors.iter()) {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, TemporalError> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != WEIGHT_MAGIC {
            return Err(TemporalError::BadWeights("bad magic".into()));
        }
        let version = r.u32()?;
        if version != WEIGHT_VERSION {
            return Err(TemporalError::BadWeights(format!("unsupported version {version}")));
        }
        let count = r.u32()?;
        let mut meta = BTreeMap::new();
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(len)?)
                .map_err(|_| TemporalError::BadWeights("tensor name is not UTF-8".into()))?
                .to_string();
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>, _>>()?;
            let n = shape.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).ok_or_else(|| {
                TemporalError::BadWeights(format!("{name}: shape overflows"))
            })?;
            let raw = r.take(n.checked_mul(4).ok_or_else(|| TemporalError::BadWeights("size overflow".into()))?)?;
            let data = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            let tensor = Tensor::new(shape, data)?;
            let dup = if name.starts_with("meta.") {
                meta.insert(name.clone(), tensor).is_some()
            } else {
                tensors.insert(name.clone(), tensor).is_some()
            };
            if dup {
                return Err(TemporalError::BadWeights(format!("duplicate tensor {name}")));
            }
        }
        if r.pos != bytes.len() {
            return Err(TemporalError::BadWeights("trailing bytes".into()));
        }
        let dim = |k: &str| -> Result<usize, TemporalError> {
            let t: &Tensor = meta.get(k).ok_or_else(|| TemporalError::MissingTensor(k.to_string()))?;
            let v = t.data.first().copied().unwrap_or(-1.0);
            if v < 0.0 || v.fract() != 0.0 {
                return Err(TemporalError::BadWeights(format!("{k} is not a count")));
            }
            Ok(v as usize)
        };
        let config = TemporalConfig {
            input_dim: dim(META_KEYS[0])?,
            hidden_size: dim(META_KEYS[1])?,
            model_dim: dim(META_KEYS[2])?,
            n_heads: dim(META_KEYS[3])?,
            n_layers: dim(META_KEYS[4])?,
            fused_dim: dim(META_KEYS[5])?,
        };
        Self::new(config, tensors)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemporalError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TemporalError> {
        std::fs::File::create(path)?.write_all(&self.to_bytes())?;
        Ok(())
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], TemporalError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| TemporalError::BadWeights("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, TemporalError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}
