//! Commands behind the `topocl` binary. Each command reads a [`RunConfig`],
//! writes its artifacts under `out_dir`, and returns a short report.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use topocl::data::{subsample_fraction, write_metrics};
use topocl::nn::{load_checkpoint, save_checkpoint};
use topocl::tda::cache::{read_cache, write_cache, write_json_dump, CachedDiagram};
use topocl::train::{compute_diagrams, diagram_map, encode_all, init_model, point_sets, probe_model, train, train_and_probe};
use topocl::{Dataset, Error, MetricRecord, PersistenceDiagram, Result, Robustness, RunConfig, TimeSeriesInstance};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |e| Error::Io { path: path.to_path_buf(), source: e.into() }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, text).map_err(io_err(path))
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DumpReport {
    pub instances: usize,
    pub cache_hits: usize,
    pub computed: usize,
    /// The cache file existed but failed validation and was rebuilt.
    pub recovered_corrupt: bool,
}

/// Diagrams for every instance of `ds`, served from the cache where possible.
pub fn ensure_diagrams(cfg: &RunConfig, ds: &Dataset) -> Result<(HashMap<u64, PersistenceDiagram>, DumpReport)> {
    let path = cfg.cache_path();
    let key = cfg.diagram_key();
    let mut cached: HashMap<u64, PersistenceDiagram> = HashMap::new();
    let mut report = DumpReport { instances: ds.len(), ..DumpReport::default() };
    if path.exists() {
        match read_cache(&path) {
            Ok((k, records)) if k == key => cached = diagram_map(records),
            Ok(_) => {}
            Err(Error::CorruptCache { msg, .. }) => {
                eprintln!("warning: diagram cache {} is corrupt ({msg}); recomputing", path.display());
                report.recovered_corrupt = true;
            }
            Err(e) => return Err(e),
        }
    }
    let missing: Vec<&TimeSeriesInstance> = ds.instances().filter(|x| !cached.contains_key(&x.id)).collect();
    report.cache_hits = ds.len() - missing.len();
    report.computed = missing.len();
    if !missing.is_empty() || report.recovered_corrupt {
        for rec in compute_diagrams(&missing, cfg)? {
            cached.insert(rec.id, rec.diagram);
        }
        let records = ordered_records(ds, &cached);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(io_err(dir))?;
        }
        write_cache(&path, key, &records)?;
    }
    Ok((cached, report))
}

fn ordered_records(ds: &Dataset, map: &HashMap<u64, PersistenceDiagram>) -> Vec<CachedDiagram> {
    ds.instances().map(|x| CachedDiagram { id: x.id, diagram: map[&x.id].clone() }).collect()
}

/// `ph-dump`: fills the diagram cache and writes `diagrams.json`.
pub fn cmd_ph_dump(cfg: &RunConfig) -> Result<DumpReport> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let (map, report) = ensure_diagrams(cfg, &ds)?;
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    write_json_dump(&cfg.out_dir.join("diagrams.json"), &ordered_records(&ds, &map))?;
    Ok(report)
}

fn hyperparameters(cfg: &RunConfig, channels: usize) -> serde_json::Value {
    serde_json::json!({ "channels": channels, "model": cfg.model_config(), "pooling": cfg.pooling() })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrainReport {
    pub checkpoint: PathBuf,
    pub epochs: usize,
    pub initial_loss: Option<f64>,
    pub final_loss: Option<f64>,
}

/// `train`: writes `checkpoint/`, `loss_curve.jsonl` and `config.json`.
pub fn cmd_train(cfg: &RunConfig) -> Result<TrainReport> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let (diagrams, _) = ensure_diagrams(cfg, &ds)?;
    let sets = point_sets(&ds.train, &diagrams, cfg)?;
    let out = train(cfg, &ds.train, &sets)?;
    let dir = &cfg.out_dir;
    let checkpoint = dir.join("checkpoint");
    save_checkpoint(&checkpoint, &out.model.store, cfg.seed, hyperparameters(cfg, ds.channels()))?;
    let mut curve = String::new();
    for e in &out.curve {
        curve.push_str(&serde_json::to_string(e)?);
        curve.push('\n');
    }
    write_file(&dir.join("loss_curve.jsonl"), &curve)?;
    write_file(&dir.join("config.json"), &cfg.to_json())?;
    Ok(TrainReport {
        checkpoint,
        epochs: out.curve.len(),
        initial_loss: out.curve.first().map(|e| e.total),
        final_loss: out.curve.last().map(|e| e.total),
    })
}

fn load_model(cfg: &RunConfig, ds: &Dataset, checkpoint: &Path) -> Result<topocl::TopoClModel> {
    let mut model = init_model(cfg, ds.channels());
    let manifest = load_checkpoint(checkpoint, &mut model.store)?;
    if manifest.hyperparameters != hyperparameters(cfg, ds.channels()) {
        return Err(Error::CheckpointMismatch(format!(
            "checkpoint was trained with {}, config asks for {}",
            manifest.hyperparameters,
            hyperparameters(cfg, ds.channels())
        )));
    }
    Ok(model)
}

#[derive(Debug, Clone, Serialize)]
pub struct EncodeReport {
    pub rows: usize,
    pub dim: usize,
    pub path: PathBuf,
}

/// `encode`: writes `representations.csv` (train rows, then test rows, one
/// per instance, no header) and `representations_index.csv` (id, split, label).
pub fn cmd_encode(cfg: &RunConfig, checkpoint: &Path) -> Result<EncodeReport> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let model = load_model(cfg, &ds, checkpoint)?;
    fs::create_dir_all(&cfg.out_dir).map_err(io_err(&cfg.out_dir))?;
    let path = cfg.out_dir.join("representations.csv");
    let index_path = cfg.out_dir.join("representations_index.csv");
    let mut matrix = csv::WriterBuilder::new().has_headers(false).from_path(&path).map_err(csv_err(&path))?;
    let mut index = csv::Writer::from_path(&index_path).map_err(csv_err(&index_path))?;
    index.write_record(["id", "split", "label"]).map_err(csv_err(&index_path))?;
    let mut rows = 0;
    for (split, part) in [("train", &ds.train), ("test", &ds.test)] {
        for (x, rep) in part.iter().zip(encode_all(&model, part)?) {
            matrix.serialize(&rep).map_err(csv_err(&path))?;
            let label = x.label.map(|l| l.to_string()).unwrap_or_default();
            index.write_record([x.id.to_string(), split.to_string(), label]).map_err(csv_err(&index_path))?;
            rows += 1;
        }
    }
    matrix.flush().map_err(io_err(&path))?;
    index.flush().map_err(io_err(&index_path))?;
    Ok(EncodeReport { rows, dim: cfg.temporal.out_dim, path })
}

fn record(cfg: &RunConfig, task: &str, metric: &str, value: f64) -> MetricRecord {
    MetricRecord {
        run_id: cfg.run_id(task),
        task: task.to_string(),
        config_hash: cfg.config_hash(),
        seed: cfg.seed,
        metric: metric.to_string(),
        value,
    }
}

fn finish(cfg: &RunConfig, records: Vec<MetricRecord>) -> Result<Vec<MetricRecord>> {
    write_metrics(&cfg.out_dir, &records)?;
    Ok(records)
}

/// `probe`: trains (or loads `checkpoint`) and reports linear-probe accuracy.
pub fn cmd_probe(cfg: &RunConfig, checkpoint: Option<&Path>) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let result = match checkpoint {
        Some(dir) => probe_model(&load_model(cfg, &ds, dir)?, &ds.train, &ds.test, cfg)?,
        None => {
            let (diagrams, _) = ensure_diagrams(cfg, &ds)?;
            train_and_probe(cfg, &ds, &diagrams)?.probe
        }
    };
    finish(cfg, vec![record(cfg, "probe", "accuracy", result.accuracy), record(cfg, "probe", "penalty", result.penalty)])
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn seeded(cfg: &RunConfig, seed: u64) -> RunConfig {
    let mut c = cfg.clone();
    c.seed = seed;
    c.study.seeds.clear();
    c
}

/// Trains and probes each variant for every study seed, recording per-seed
/// accuracy and the mean under `task`.
fn sweep(base: &RunConfig, variants: Vec<(String, RunConfig, Option<f64>)>, ds: &Dataset, diagrams: &HashMap<u64, PersistenceDiagram>) -> Result<Vec<MetricRecord>> {
    let mut records = Vec::new();
    for (task, variant, fraction) in variants {
        let mut accs = Vec::new();
        for seed in base.study_seeds() {
            let cfg = seeded(&variant, seed);
            let data = match fraction {
                Some(f) => subsample_fraction(ds, f, seed)?,
                None => ds.clone(),
            };
            let acc = train_and_probe(&cfg, &data, diagrams)?.probe.accuracy;
            eprintln!("{task} seed {seed}: accuracy {acc:.4}");
            records.push(record(&cfg, &task, "accuracy", acc));
            accs.push(acc);
        }
        records.push(record(&variant, &task, "mean_accuracy", mean(&accs)));
    }
    Ok(records)
}

/// `robustness`: one run per distortion applied to the second view.
pub fn cmd_robustness(cfg: &RunConfig) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let (diagrams, _) = ensure_diagrams(cfg, &ds)?;
    let variants = Robustness::ALL
        .iter()
        .map(|&t| {
            let mut c = cfg.clone();
            c.augment.robustness = t;
            (format!("robustness:{}", t.name()), c, None)
        })
        .collect();
    finish(cfg, sweep(cfg, variants, &ds, &diagrams)?)
}

/// `limited`: each training fraction, with and without the cross-modal term.
pub fn cmd_limited(cfg: &RunConfig) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let (diagrams, _) = ensure_diagrams(cfg, &ds)?;
    let mut variants = Vec::new();
    for &f in &cfg.study.fractions {
        for no_cross in [false, true] {
            let mut c = cfg.clone();
            c.ablation.no_cross = no_cross;
            let name = if no_cross { "no_cross" } else { "full" };
            variants.push((format!("limited:{name}:{f}"), c, Some(f)));
        }
    }
    finish(cfg, sweep(cfg, variants, &ds, &diagrams)?)
}

/// Configurations of the ablation study, keyed by name.
pub fn ablation_variants(cfg: &RunConfig) -> Vec<(&'static str, RunConfig)> {
    let base = {
        let mut c = cfg.clone();
        c.ablation = Default::default();
        c
    };
    let with = |f: fn(&mut RunConfig)| {
        let mut c = base.clone();
        f(&mut c);
        c
    };
    vec![
        ("full", base.clone()),
        ("no_cross", with(|c| c.ablation.no_cross = true)),
        ("no_h0", with(|c| c.ablation.no_h0 = true)),
        ("no_h1", with(|c| c.ablation.no_h1 = true)),
        ("avgpool_topo", with(|c| c.ablation.avgpool_topo = true)),
        ("no_time_loss", with(|c| c.ablation.no_time_loss = true)),
    ]
}

/// `ablate`: every ablation variant.
pub fn cmd_ablate(cfg: &RunConfig) -> Result<Vec<MetricRecord>> {
    cfg.validate()?;
    let ds = cfg.load_dataset()?;
    let (diagrams, _) = ensure_diagrams(cfg, &ds)?;
    let variants = ablation_variants(cfg)
        .into_iter()
        .map(|(name, c)| (format!("ablate:{name}"), c, None))
        .collect();
    finish(cfg, sweep(cfg, variants, &ds, &diagrams)?)
}

/// Prints `value` as pretty JSON on stdout.
pub fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{}", serde_json::to_string_pretty(value)?).map_err(|source| Error::Io { path: "<stdout>".into(), source })
}
