//! Hierarchical temporal/instance contrast and the cross-modal alignment loss.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{Graph, Var};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LossConfig {
    /// Weight of the cross-modal term.
    pub alpha: f64,
    /// Temperature of the cross-modal similarities.
    pub tau: f64,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self { alpha: 0.5, tau: 0.1 }
    }
}

fn check_pairs(op: &'static str, r: &[Var], r2: &[Var], g: &Graph) -> Result<(usize, usize)> {
    if r.is_empty() || r.len() != r2.len() {
        return Err(Error::ShapeMismatch { op, detail: format!("{} vs {} views", r.len(), r2.len()) });
    }
    let shape = g.value(r[0]).shape().to_vec();
    if shape.len() != 2 {
        return Err(Error::ShapeMismatch { op, detail: format!("expected [T, F], got {shape:?}") });
    }
    for v in r.iter().chain(r2) {
        if g.value(*v).shape() != shape.as_slice() {
            return Err(Error::ShapeMismatch {
                op,
                detail: format!("{:?} vs {:?}", g.value(*v).shape(), shape),
            });
        }
    }
    Ok((r.len(), shape[0]))
}

/// Logits `[a bᵀ | a aᵀ]` with target `i` and self-similarity `n + i` excluded.
fn paired_xent(g: &mut Graph, a: Var, b: Var) -> Result<Var> {
    let n = g.value(a).rows();
    let cross = g.matmul_nt(a, b)?;
    let own = g.matmul_nt(a, a)?;
    let logits = g.concat_cols(cross, own)?;
    let targets: Vec<usize> = (0..n).collect();
    let excluded: Vec<Option<usize>> = (0..n).map(|i| Some(n + i)).collect();
    g.softmax_xent(logits, &targets, &excluded)
}

/// Mean over instances and timestamps of the temporal contrast: within an
/// instance, the same timestamp in the other view is the positive.
pub fn temporal_contrast(g: &mut Graph, r: &[Var], r2: &[Var]) -> Result<Var> {
    let (b, t) = check_pairs("temporal_contrast", r, r2, g)?;
    let mut total: Option<Var> = None;
    for (&a, &p) in r.iter().zip(r2) {
        let l = paired_xent(g, a, p)?;
        total = Some(match total {
            Some(acc) => g.add(acc, l)?,
            None => l,
        });
    }
    Ok(g.scale(total.expect("non-empty batch"), 1.0 / (b * t) as f64))
}

/// Mean over timestamps and instances of the instance contrast: at each
/// timestamp, the same instance in the other view is the positive.
pub fn instance_contrast(g: &mut Graph, r: &[Var], r2: &[Var]) -> Result<Var> {
    let (b, t) = check_pairs("instance_contrast", r, r2, g)?;
    let mut total: Option<Var> = None;
    for step in 0..t {
        let a_rows: Vec<(Var, usize)> = r.iter().map(|&v| (v, step)).collect();
        let b_rows: Vec<(Var, usize)> = r2.iter().map(|&v| (v, step)).collect();
        let a = g.gather_rows(&a_rows)?;
        let p = g.gather_rows(&b_rows)?;
        let l = paired_xent(g, a, p)?;
        total = Some(match total {
            Some(acc) => g.add(acc, l)?,
            None => l,
        });
    }
    Ok(g.scale(total.expect("non-empty sequence"), 1.0 / (b * t) as f64))
}

/// Temporal plus instance contrast at one resolution.
pub fn time_loss_level(g: &mut Graph, r: &[Var], r2: &[Var]) -> Result<Var> {
    let temporal = temporal_contrast(g, r, r2)?;
    let instance = instance_contrast(g, r, r2)?;
    g.add(temporal, instance)
}

/// Number of resolutions visited for a sequence of length `len`.
pub fn hierarchy_levels(len: usize) -> usize {
    let mut levels = 1;
    let mut t = len;
    while t > 1 {
        t = t.div_ceil(2);
        levels += 1;
    }
    levels
}

/// Mean of [`time_loss_level`] over resolutions, halving time by max-pooling
/// (kernel 2, tail kept) until one timestamp remains.
pub fn hierarchical_time_loss(g: &mut Graph, r: &[Var], r2: &[Var]) -> Result<Var> {
    let (_, mut t) = check_pairs("hierarchical_time_loss", r, r2, g)?;
    let mut r = r.to_vec();
    let mut r2 = r2.to_vec();
    let mut total = time_loss_level(g, &r, &r2)?;
    let mut levels = 1usize;
    while t > 1 {
        for v in r.iter_mut().chain(r2.iter_mut()) {
            *v = g.max_pool_time(*v)?;
        }
        t = t.div_ceil(2);
        let l = time_loss_level(g, &r, &r2)?;
        total = g.add(total, l)?;
        levels += 1;
    }
    Ok(g.scale(total, 1.0 / levels as f64))
}

/// Symmetric InfoNCE between the averaged time embeddings `(z + z2)/2` and
/// the topological embeddings `y`, cosine similarity over `tau`.
/// Returns the sum of both directions divided by `2B`.
pub fn cross_modal_loss(g: &mut Graph, z: &[Var], z2: &[Var], y: &[Var], tau: f64) -> Result<Var> {
    let b = z.len();
    if b == 0 || z2.len() != b || y.len() != b {
        return Err(Error::ShapeMismatch {
            op: "cross_modal_loss",
            detail: format!("{} / {} / {} embeddings", z.len(), z2.len(), y.len()),
        });
    }
    if tau.is_nan() || tau <= 0.0 {
        return Err(Error::Config(format!("tau must be positive, got {tau}")));
    }
    let rows = |vs: &[Var]| vs.iter().map(|&v| (v, 0)).collect::<Vec<_>>();
    let za = g.gather_rows(&rows(z))?;
    let zb = g.gather_rows(&rows(z2))?;
    let zy = g.gather_rows(&rows(y))?;
    let sum = g.add(za, zb)?;
    let avg = g.scale(sum, 0.5);
    let zn = g.l2_normalize_rows(avg, "time embedding")?;
    let yn = g.l2_normalize_rows(zy, "topological embedding")?;
    let zs = g.scale(zn, 1.0 / tau.sqrt());
    let ys = g.scale(yn, 1.0 / tau.sqrt());
    let forward = paired_xent(g, zs, ys)?;
    let backward = paired_xent(g, ys, zs)?;
    let both = g.add(forward, backward)?;
    Ok(g.scale(both, 1.0 / (2 * b) as f64))
}

/// Embeddings of one batch feeding [`total_loss`].
#[derive(Debug, Clone, Default)]
pub struct BatchEmbeddings {
    /// Overlap-restricted per-timestamp embeddings of both views.
    pub r: Vec<Var>,
    pub r2: Vec<Var>,
    /// Projected time embeddings of both views and projected topological embeddings.
    pub z: Vec<Var>,
    pub z2: Vec<Var>,
    pub y: Vec<Var>,
}

#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub total: Var,
    pub time: Var,
    pub cross: Option<Var>,
}

/// `time + alpha * cross`; the cross term is skipped when `y` is empty.
pub fn total_loss(g: &mut Graph, batch: &BatchEmbeddings, cfg: &LossConfig) -> Result<LossTerms> {
    let time = hierarchical_time_loss(g, &batch.r, &batch.r2)?;
    if batch.y.is_empty() {
        return Ok(LossTerms { total: time, time, cross: None });
    }
    let cross = cross_modal_loss(g, &batch.z, &batch.z2, &batch.y, cfg.tau)?;
    let weighted = g.scale(cross, cfg.alpha);
    let total = g.add(time, weighted)?;
    Ok(LossTerms { total, time, cross: Some(cross) })
}
