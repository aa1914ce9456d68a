use std::fs;
use std::path::Path;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::graph::{Graph, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
}

/// Named trainable tensors, in registration order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParamStore {
    params: Vec<Param>,
}

/// Parameters bound as leaves of one graph, indexed by [`ParamId`].
pub struct Bound(Vec<Var>);

impl std::ops::Index<ParamId> for Bound {
    type Output = Var;

    fn index(&self, id: ParamId) -> &Var {
        &self.0[id.0]
    }
}

impl Bound {
    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.params.push(Param { name: name.into(), value });
        ParamId(self.params.len() - 1)
    }

    /// Uniform(-s, s) with `s = sqrt(1 / fan_in)`.
    pub fn add_uniform(&mut self, name: impl Into<String>, shape: Vec<usize>, fan_in: usize, rng: &mut Rng) -> ParamId {
        let s = (1.0 / fan_in as f64).sqrt();
        let numel = shape.iter().product();
        let data = (0..numel).map(|_| rng.random_range(-s..s)).collect();
        self.add(name, Tensor::new(shape, data).expect("shape matches"))
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.params[id.0].value
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.params[id.0].value
    }

    pub fn iter(&self) -> impl Iterator<Item = &Param> {
        self.params.iter()
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut Param> {
        self.params.iter_mut()
    }

    pub fn numel(&self) -> usize {
        self.params.iter().map(|p| p.value.numel()).sum()
    }

    pub fn bind(&self, g: &mut Graph) -> Bound {
        Bound(self.params.iter().map(|p| g.param(p.value.clone())).collect())
    }

    /// Gradients of every parameter after `g.backward`, zeros where none flowed.
    pub fn grads(&self, g: &Graph, bound: &Bound) -> Vec<Vec<f64>> {
        self.params
            .iter()
            .zip(bound.vars())
            .map(|(p, &v)| g.grad(v).map_or_else(|| vec![0.0; p.value.numel()], <[f64]>::to_vec))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ManifestEntry {
    name: String,
    shape: Vec<usize>,
    file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub seed: u64,
    pub hyperparameters: serde_json::Value,
    params: Vec<ManifestEntry>,
}

const FORMAT: &str = "topocl-checkpoint-v1";

/// Writes `manifest.json` plus one little-endian f64 blob per parameter into `dir`.
pub fn save_checkpoint(dir: &Path, store: &ParamStore, seed: u64, hyperparameters: serde_json::Value) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::new();
    for (i, p) in store.iter().enumerate() {
        let file = format!("{i:03}_{}.bin", p.name.replace(['/', '.'], "_"));
        let bytes: Vec<u8> = p.value.data().iter().flat_map(|v| v.to_le_bytes()).collect();
        let path = dir.join(&file);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        entries.push(ManifestEntry { name: p.name.clone(), shape: p.value.shape().to_vec(), file });
    }
    let manifest = Manifest { format: FORMAT.into(), seed, hyperparameters, params: entries };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| Error::io(&path, e))
}

/// Loads parameter values into `store`, which must have the same names and shapes.
pub fn load_checkpoint(dir: &Path, store: &mut ParamStore) -> Result<Manifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let manifest: Manifest = serde_json::from_str(&text)?;
    if manifest.format != FORMAT {
        return Err(Error::CheckpointMismatch(format!("unknown format {:?}", manifest.format)));
    }
    if manifest.params.len() != store.len() {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint has {} parameters, model has {}",
            manifest.params.len(),
            store.len()
        )));
    }
    for (entry, param) in manifest.params.iter().zip(store.iter_mut()) {
        if entry.name != param.name || entry.shape != param.value.shape() {
            return Err(Error::CheckpointMismatch(format!(
                "parameter {} {:?} does not match {} {:?}",
                entry.name,
                entry.shape,
                param.name,
                param.value.shape()
            )));
        }
        let blob_path = dir.join(&entry.file);
        let bytes = fs::read(&blob_path).map_err(|e| Error::io(&blob_path, e))?;
        if bytes.len() != param.value.numel() * 8 {
            return Err(Error::CheckpointMismatch(format!("blob {} has {} bytes", entry.file, bytes.len())));
        }
        for (dst, chunk) in param.value.data_mut().iter_mut().zip(bytes.chunks_exact(8)) {
            *dst = f64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
    }
    Ok(manifest)
}
