//! Training loop, representation extraction and the probe-based evaluations.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augment::random_crop_plan;
use crate::config::RunConfig;
use crate::data::{linear_probe, Dataset, ProbeResult, TimeSeriesInstance};
use crate::encoders::{sample_timestamp_mask, TopoClModel};
use crate::error::{Error, Result};
use crate::losses::{cross_modal_loss, hierarchical_time_loss};
use crate::nn::{Adam, Graph};
use crate::rng;
use crate::tda::cache::CachedDiagram;
use crate::tda::{diagram_for_instance, diagram_to_point_set, PersistenceDiagram, TopoPointSet};

const TRAIN_STREAM: u64 = 1;
const AUGMENT_STREAM: u64 = 2;

/// Batch-mean losses of one epoch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub total: f64,
    pub time: f64,
    pub cross: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutput {
    pub model: TopoClModel,
    pub curve: Vec<EpochLoss>,
}

/// Diagrams of `instances`, computed in parallel; order follows the input.
pub fn compute_diagrams(instances: &[&TimeSeriesInstance], cfg: &RunConfig) -> Result<Vec<CachedDiagram>> {
    let params = cfg.tda.ph_params();
    instances
        .par_iter()
        .map(|x| Ok(CachedDiagram { id: x.id, diagram: diagram_for_instance(x, &params)? }))
        .collect()
}

/// Padded point sets for `instances`, honoring the `no_h0` / `no_h1` ablations.
pub fn point_sets(
    instances: &[TimeSeriesInstance],
    diagrams: &HashMap<u64, PersistenceDiagram>,
    cfg: &RunConfig,
) -> Result<Vec<TopoPointSet>> {
    instances
        .iter()
        .map(|x| {
            let dgm = diagrams
                .get(&x.id)
                .ok_or_else(|| Error::InvalidData(format!("no diagram for instance {}", x.id)))?;
            Ok(diagram_to_point_set(dgm, cfg.tda.capacity).restrict_dims(!cfg.ablation.no_h0, !cfg.ablation.no_h1))
        })
        .collect()
}

pub fn diagram_map(records: Vec<CachedDiagram>) -> HashMap<u64, PersistenceDiagram> {
    records.into_iter().map(|r| (r.id, r.diagram)).collect()
}

/// Fresh model for `cfg` on series with `channels` channels.
pub fn init_model(cfg: &RunConfig, channels: usize) -> TopoClModel {
    TopoClModel::new(channels, &cfg.model_config(), cfg.pooling(), cfg.seed)
}

/// Trains a fresh model on `train`; `sets[i]` is the point set of `train[i]`.
pub fn train(cfg: &RunConfig, train: &[TimeSeriesInstance], sets: &[TopoPointSet]) -> Result<TrainOutput> {
    cfg.validate()?;
    let first = train.first().ok_or_else(|| Error::InvalidData("empty training set".into()))?;
    if sets.len() != train.len() {
        return Err(Error::InvalidData(format!("{} point sets for {} instances", sets.len(), train.len())));
    }
    let len = first.len();
    if train.iter().any(|x| x.len() != len || x.channels() != first.channels()) {
        return Err(Error::InvalidData("training series differ in shape".into()));
    }
    let mut model = init_model(cfg, first.channels());
    let mut adam = Adam::new(cfg.lr, &model.store);
    let mut rng = rng::stream(cfg.seed, TRAIN_STREAM);
    let mut aug_rng = rng::stream(cfg.seed, AUGMENT_STREAM);
    let alpha = cfg.effective_alpha();
    let use_cross = alpha > 0.0;
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut curve = Vec::with_capacity(cfg.epochs);

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut sum_total, mut sum_time, mut sum_cross, mut batches) = (0.0, 0.0, 0.0, 0usize);
        for (step, batch) in order.chunks(cfg.batch_size).enumerate() {
            let plan = random_crop_plan(len, batch.len(), &mut rng)?;
            let mut g = Graph::new();
            let p = model.store.bind(&mut g);
            let (mut r, mut r2, mut z, mut z2, mut y) = (vec![], vec![], vec![], vec![], vec![]);
            for (&i, w) in batch.iter().zip(&plan) {
                let x = &train[i];
                let second = cfg.augment.apply(x, &mut aug_rng)?;
                let a = x.slice(w.view_a.start, w.view_a.end);
                let b = second.slice(w.view_b.start, w.view_b.end);
                let mask_a = sample_timestamp_mask(w.view_a.len(), cfg.temporal.mask_prob, &mut rng);
                let mask_b = sample_timestamp_mask(w.view_b.len(), cfg.temporal.mask_prob, &mut rng);
                let ra = model.temporal_encode(&mut g, &p, &a, Some(&mask_a))?;
                let rb = model.temporal_encode(&mut g, &p, &b, Some(&mask_b))?;
                let (oa, ob) = (w.overlap_in_a(), w.overlap_in_b());
                let ra = g.slice_rows(ra, oa.start, oa.end)?;
                let rb = g.slice_rows(rb, ob.start, ob.end)?;
                if use_cross {
                    z.push(model.project_time(&mut g, &p, ra)?);
                    z2.push(model.project_time(&mut g, &p, rb)?);
                    let h = model.topo_encode(&mut g, &p, &sets[i])?;
                    y.push(model.project_topo(&mut g, &p, h)?);
                }
                r.push(ra);
                r2.push(rb);
            }
            let time = hierarchical_time_loss(&mut g, &r, &r2)?;
            let cross = if use_cross { Some(cross_modal_loss(&mut g, &z, &z2, &y, cfg.loss.tau)?) } else { None };
            let total = match cross {
                Some(c) => {
                    let weighted = g.scale(c, alpha);
                    if cfg.ablation.no_time_loss {
                        weighted
                    } else {
                        g.add(time, weighted)?
                    }
                }
                None => time,
            };
            let value = g.value(total).item();
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    step,
                    detail: format!(
                        "time loss {}, cross loss {:?}",
                        g.value(time).item(),
                        cross.map(|c| g.value(c).item())
                    ),
                });
            }
            g.backward(total)?;
            let grads = model.store.grads(&g, &p);
            adam.step(&mut model.store, &grads);
            sum_total += value;
            sum_time += g.value(time).item();
            sum_cross += cross.map_or(0.0, |c| g.value(c).item());
            batches += 1;
        }
        let n = batches as f64;
        curve.push(EpochLoss {
            epoch,
            total: sum_total / n,
            time: sum_time / n,
            cross: use_cross.then_some(sum_cross / n),
        });
    }
    Ok(TrainOutput { model, curve })
}

/// Max-pooled full-series representations, one row per instance.
pub fn encode_all(model: &TopoClModel, instances: &[TimeSeriesInstance]) -> Result<Vec<Vec<f64>>> {
    instances.par_iter().map(|x| model.represent(x.values())).collect()
}

fn labels(instances: &[TimeSeriesInstance]) -> Result<Vec<usize>> {
    instances
        .iter()
        .map(|x| x.label.ok_or_else(|| Error::InvalidData(format!("instance {} has no label", x.id))))
        .collect()
}

/// Linear probe on frozen representations of `train` and `test`.
pub fn probe_model(model: &TopoClModel, train: &[TimeSeriesInstance], test: &[TimeSeriesInstance], cfg: &RunConfig) -> Result<ProbeResult> {
    let train_x = encode_all(model, train)?;
    let test_x = encode_all(model, test)?;
    linear_probe(&train_x, &labels(train)?, &test_x, &labels(test)?, &cfg.probe)
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub probe: ProbeResult,
    pub output: TrainOutput,
}

/// Trains on `ds.train` and probes on `ds.test`.
pub fn train_and_probe(cfg: &RunConfig, ds: &Dataset, diagrams: &HashMap<u64, PersistenceDiagram>) -> Result<Evaluation> {
    let sets = point_sets(&ds.train, diagrams, cfg)?;
    let output = train(cfg, &ds.train, &sets)?;
    let probe = probe_model(&output.model, &ds.train, &ds.test, cfg)?;
    Ok(Evaluation { probe, output })
}
