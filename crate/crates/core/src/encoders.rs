//! The temporal encoder, the diagram set encoder and the two projection heads.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Bound, Graph, ParamId, ParamStore, Tensor, Var};
use crate::rng::{self, Rng};
use crate::tda::TopoPointSet;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemporalConfig {
    pub hidden: usize,
    /// Residual blocks; block `l` uses dilation `2^l`.
    pub blocks: usize,
    pub kernel: usize,
    pub out_dim: usize,
    /// Probability of masking a timestamp during training.
    pub mask_prob: f64,
}

impl Default for TemporalConfig {
    fn default() -> Self {
        Self { hidden: 64, blocks: 10, kernel: 3, out_dim: 64, mask_prob: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Max,
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopoConfig {
    pub w1: usize,
    pub w2: usize,
    pub out_dim: usize,
}

impl Default for TopoConfig {
    fn default() -> Self {
        Self { w1: 64, w2: 128, out_dim: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProjConfig {
    pub dim: usize,
}

impl Default for ProjConfig {
    fn default() -> Self {
        Self { dim: 32 }
    }
}

#[derive(Debug, Clone, Copy)]
struct Dense {
    w: ParamId,
    b: ParamId,
}

impl Dense {
    fn new(store: &mut ParamStore, name: &str, fan_in: usize, fan_out: usize, rng: &mut Rng) -> Self {
        let w = store.add_uniform(format!("{name}.w"), vec![fan_in, fan_out], fan_in, rng);
        let b = store.add_uniform(format!("{name}.b"), vec![fan_out], fan_in, rng);
        Self { w, b }
    }

    fn forward(&self, g: &mut Graph, p: &Bound, x: Var) -> Result<Var> {
        g.linear(x, p[self.w], p[self.b])
    }

    fn ids(&self) -> [ParamId; 2] {
        [self.w, self.b]
    }
}

/// Input projection, optional timestamp masking, residual causal dilated
/// convolutions with ReLU, and a final linear map to the embedding width.
#[derive(Debug, Clone)]
pub struct TemporalEncoder {
    pub cfg: TemporalConfig,
    pub channels: usize,
    input: Dense,
    kernels: Vec<ParamId>,
    output: Dense,
}

impl TemporalEncoder {
    pub fn new(channels: usize, cfg: &TemporalConfig, store: &mut ParamStore, rng: &mut Rng) -> Self {
        let input = Dense::new(store, "time.input", channels, cfg.hidden, rng);
        let kernels = (0..cfg.blocks)
            .map(|l| {
                store.add_uniform(
                    format!("time.block{l}.kernel"),
                    vec![cfg.kernel, cfg.hidden, cfg.hidden],
                    cfg.kernel * cfg.hidden,
                    rng,
                )
            })
            .collect();
        let output = Dense::new(store, "time.output", cfg.hidden, cfg.out_dim, rng);
        Self { cfg: cfg.clone(), channels, input, kernels, output }
    }

    /// Per-timestamp embeddings `[T, out_dim]` of a time-major `[T, C]` series.
    ///
    /// `mask` (training only) zeroes whole timestamps after the input projection.
    pub fn encode(&self, g: &mut Graph, p: &Bound, series: &[f64], mask: Option<&[bool]>) -> Result<Var> {
        if series.is_empty() || !series.len().is_multiple_of(self.channels) {
            return Err(Error::ShapeMismatch {
                op: "temporal_encode",
                detail: format!("{} values for {} channels", series.len(), self.channels),
            });
        }
        let len = series.len() / self.channels;
        let x = g.constant(Tensor::matrix(len, self.channels, series.to_vec())?);
        let mut h = self.input.forward(g, p, x)?;
        if let Some(mask) = mask {
            h = g.mask_rows(h, mask)?;
        }
        for (l, &kernel) in self.kernels.iter().enumerate() {
            let conv = g.causal_conv1d(h, p[kernel], 1 << l)?;
            let act = g.relu(conv);
            h = g.add(h, act)?;
        }
        self.output.forward(g, p, h)
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.input.ids().to_vec();
        ids.extend(&self.kernels);
        ids.extend(self.output.ids());
        ids
    }
}

/// Bernoulli keep-mask over timestamps; `true` keeps the row.
pub fn sample_timestamp_mask(len: usize, mask_prob: f64, rng: &mut Rng) -> Vec<bool> {
    (0..len).map(|_| !rng.random_bool(mask_prob)).collect()
}

/// Shared per-point MLP (3 -> w1 -> w2 -> out, ReLU after each layer) and a
/// symmetric pooling over the unmasked rows.
#[derive(Debug, Clone)]
pub struct TopoEncoder {
    pub cfg: TopoConfig,
    layers: [Dense; 3],
}

impl TopoEncoder {
    pub fn new(cfg: &TopoConfig, store: &mut ParamStore, rng: &mut Rng) -> Self {
        let layers = [
            Dense::new(store, "topo.mlp0", 3, cfg.w1, rng),
            Dense::new(store, "topo.mlp1", cfg.w1, cfg.w2, rng),
            Dense::new(store, "topo.mlp2", cfg.w2, cfg.out_dim, rng),
        ];
        Self { cfg: cfg.clone(), layers }
    }

    pub fn encode(&self, g: &mut Graph, p: &Bound, set: &TopoPointSet, pooling: Pooling) -> Result<Var> {
        let x = g.constant(Tensor::matrix(set.capacity(), 3, set.flat_rows())?);
        let mut h = x;
        for layer in &self.layers {
            let z = layer.forward(g, p, h)?;
            h = g.relu(z);
        }
        match pooling {
            Pooling::Max => g.masked_max_over_set(h, &set.mask),
            Pooling::Mean => g.masked_mean_over_set(h, &set.mask),
        }
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        self.layers.iter().flat_map(Dense::ids).collect()
    }
}

/// linear -> ReLU -> linear into the shared latent space.
#[derive(Debug, Clone)]
pub struct ProjectionHead {
    first: Dense,
    second: Dense,
    pub dim: usize,
}

impl ProjectionHead {
    pub fn new(name: &str, input: usize, dim: usize, store: &mut ParamStore, rng: &mut Rng) -> Self {
        Self {
            first: Dense::new(store, &format!("{name}.0"), input, dim, rng),
            second: Dense::new(store, &format!("{name}.1"), dim, dim, rng),
            dim,
        }
    }

    pub fn forward(&self, g: &mut Graph, p: &Bound, v: Var) -> Result<Var> {
        let h = self.first.forward(g, p, v)?;
        let h = g.relu(h);
        self.second.forward(g, p, h)
    }

    pub fn param_ids(&self) -> Vec<ParamId> {
        [self.first.ids(), self.second.ids()].concat()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub temporal: TemporalConfig,
    pub topo: TopoConfig,
    pub proj: ProjConfig,
}

/// Both encoders, both heads, and the parameters they share a store with.
#[derive(Debug, Clone)]
pub struct TopoClModel {
    pub store: ParamStore,
    pub temporal: TemporalEncoder,
    pub topo: TopoEncoder,
    pub proj_time: ProjectionHead,
    pub proj_topo: ProjectionHead,
    pub pooling: Pooling,
}

impl TopoClModel {
    pub fn new(channels: usize, cfg: &ModelConfig, pooling: Pooling, seed: u64) -> Self {
        let mut rng = rng::stream(seed, 0x1417);
        let mut store = ParamStore::new();
        let temporal = TemporalEncoder::new(channels, &cfg.temporal, &mut store, &mut rng);
        let topo = TopoEncoder::new(&cfg.topo, &mut store, &mut rng);
        let proj_time = ProjectionHead::new("proj.time", cfg.temporal.out_dim, cfg.proj.dim, &mut store, &mut rng);
        let proj_topo = ProjectionHead::new("proj.topo", cfg.topo.out_dim, cfg.proj.dim, &mut store, &mut rng);
        Self { store, temporal, topo, proj_time, proj_topo, pooling }
    }

    pub fn temporal_encode(&self, g: &mut Graph, p: &Bound, series: &[f64], mask: Option<&[bool]>) -> Result<Var> {
        self.temporal.encode(g, p, series, mask)
    }

    pub fn topo_encode(&self, g: &mut Graph, p: &Bound, set: &TopoPointSet) -> Result<Var> {
        self.topo.encode(g, p, set, self.pooling)
    }

    /// Max over time of the sequence, then the time head.
    pub fn project_time(&self, g: &mut Graph, p: &Bound, r: Var) -> Result<Var> {
        let pooled = g.max_over_time(r)?;
        self.proj_time.forward(g, p, pooled)
    }

    pub fn project_topo(&self, g: &mut Graph, p: &Bound, h: Var) -> Result<Var> {
        self.proj_topo.forward(g, p, h)
    }

    /// Parameters of the topology branch (set encoder and its head).
    pub fn topo_param_ids(&self) -> Vec<ParamId> {
        let mut ids = self.topo.param_ids();
        ids.extend(self.proj_topo.param_ids());
        ids
    }

    /// Instance representation: unmasked full-series encoding, max-pooled over time.
    pub fn represent(&self, series: &[f64]) -> Result<Vec<f64>> {
        let mut g = Graph::new();
        let p = self.store.bind(&mut g);
        let r = self.temporal.encode(&mut g, &p, series, None)?;
        let pooled = g.max_over_time(r)?;
        Ok(g.value(pooled).data().to_vec())
    }
}
