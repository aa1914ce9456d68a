use serde::{Deserialize, Serialize};

use super::embed::{delay_embed, pairwise_distances};
use super::reduction::PersistencePair;
use super::rips::rips_persistence;
use crate::data::TimeSeriesInstance;
use crate::error::Result;

/// Settings for turning a series into a diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhParams {
    /// Delay-embedding dimension.
    pub m: usize,
    /// Delay; `None` means `max(1, T / 16)` of the (possibly subsampled) series.
    pub gamma: Option<usize>,
    /// Rips truncation; `None` runs the full filtration.
    pub max_eps: Option<f64>,
    /// Longer series are subsampled to this many evenly spaced timestamps.
    pub max_len: usize,
}

impl Default for PhParams {
    fn default() -> Self {
        Self { m: 2, gamma: None, max_eps: None, max_len: 512 }
    }
}

impl PhParams {
    pub fn delay_for(&self, len: usize) -> usize {
        self.gamma.unwrap_or((len / 16).max(1))
    }
}

/// Union of per-channel H0/H1 diagrams.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistenceDiagram {
    pub pairs: Vec<PersistencePair>,
    /// Channel of origin, parallel to `pairs`.
    pub channels: Vec<usize>,
}

impl PersistenceDiagram {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Keeps only pairs whose homology dimension is allowed.
    pub fn filter_dims(&self, keep_h0: bool, keep_h1: bool) -> Self {
        let keep = |p: &PersistencePair| (p.dim == 0 && keep_h0) || (p.dim == 1 && keep_h1);
        let (pairs, channels) = self
            .pairs
            .iter()
            .zip(&self.channels)
            .filter(|(p, _)| keep(p))
            .map(|(p, c)| (*p, *c))
            .unzip();
        Self { pairs, channels }
    }
}

fn evenly_subsample(series: &[f64], max_len: usize) -> Vec<f64> {
    if series.len() <= max_len || max_len < 2 {
        return series.to_vec();
    }
    let last = (series.len() - 1) as f64;
    (0..max_len)
        .map(|i| series[((i as f64) * last / (max_len - 1) as f64).round() as usize])
        .collect()
}

/// H0/H1 pairs of one channel with essential classes closed at the cloud diameter
/// and zero-persistence pairs removed.
pub fn channel_diagram(series: &[f64], params: &PhParams) -> Result<Vec<PersistencePair>> {
    let series = evenly_subsample(series, params.max_len);
    let cloud = delay_embed(&series, params.m, params.delay_for(series.len()))?;
    let d = pairwise_distances(&cloud);
    let diameter = d.max();
    let pairs = rips_persistence(&d, params.max_eps.unwrap_or(diameter))
        .into_iter()
        .map(|mut p| {
            if p.is_essential() {
                p.death = diameter;
            }
            p
        })
        .filter(|p| p.death > p.birth)
        .collect();
    Ok(pairs)
}

/// Composite diagram of an instance: the union of its channel diagrams.
pub fn diagram_for_instance(x: &TimeSeriesInstance, params: &PhParams) -> Result<PersistenceDiagram> {
    let mut dgm = PersistenceDiagram::default();
    for c in 0..x.channels() {
        for pair in channel_diagram(&x.channel(c), params)? {
            dgm.pairs.push(pair);
            dgm.channels.push(c);
        }
    }
    Ok(dgm)
}

/// Fixed-capacity set of lifted diagram points `(birth, death, death - birth)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoPointSet {
    pub rows: Vec<[f64; 3]>,
    /// `true` marks a real feature.
    pub mask: Vec<bool>,
    /// Homology dimension of each real row; bookkeeping only, never fed to the encoder.
    pub dims: Vec<Option<usize>>,
}

impl TopoPointSet {
    pub fn capacity(&self) -> usize {
        self.rows.len()
    }

    pub fn active(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn flat_rows(&self) -> Vec<f64> {
        self.rows.iter().flatten().copied().collect()
    }

    /// Masks and zeroes the rows of dropped homology dimensions in place;
    /// every other row keeps its slot and value.
    pub fn restrict_dims(&self, keep_h0: bool, keep_h1: bool) -> Self {
        let mut out = self.clone();
        for slot in 0..out.rows.len() {
            let drop = match out.dims[slot] {
                Some(0) => !keep_h0,
                Some(1) => !keep_h1,
                _ => false,
            };
            if drop {
                out.rows[slot] = [0.0; 3];
                out.mask[slot] = false;
                out.dims[slot] = None;
            }
        }
        out
    }
}

/// Lifts diagram points with `(a, b) -> (a, b, b - a)`, keeping the `capacity` most
/// persistent ones (ties: smaller birth first, then H0 before H1).
pub fn diagram_to_point_set(dgm: &PersistenceDiagram, capacity: usize) -> TopoPointSet {
    assert!(capacity >= 1, "point set capacity must be positive");
    let mut order: Vec<&PersistencePair> = dgm.pairs.iter().collect();
    order.sort_by(|a, b| {
        b.persistence()
            .total_cmp(&a.persistence())
            .then(a.birth.total_cmp(&b.birth))
            .then(a.dim.cmp(&b.dim))
    });
    let mut set = TopoPointSet {
        rows: vec![[0.0; 3]; capacity],
        mask: vec![false; capacity],
        dims: vec![None; capacity],
    };
    for (slot, pair) in order.into_iter().take(capacity).enumerate() {
        set.rows[slot] = [pair.birth, pair.death, pair.death - pair.birth];
        set.mask[slot] = true;
        set.dims[slot] = Some(pair.dim);
    }
    set
}
