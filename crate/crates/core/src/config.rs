//! Run configuration shared by every command.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::augment::AugmentConfig;
use crate::data::{self, zscore_normalize, Dataset, ProbeConfig};
use crate::encoders::{ModelConfig, Pooling, ProjConfig, TemporalConfig, TopoConfig};
use crate::error::{Error, Result};
use crate::losses::LossConfig;
use crate::tda::PhParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TdaConfig {
    pub m: usize,
    pub gamma: Option<usize>,
    pub max_eps: Option<f64>,
    pub max_len: usize,
    /// Rows of the padded diagram point set.
    pub capacity: usize,
}

impl Default for TdaConfig {
    fn default() -> Self {
        let p = PhParams::default();
        Self { m: p.m, gamma: p.gamma, max_eps: p.max_eps, max_len: p.max_len, capacity: 64 }
    }
}

impl TdaConfig {
    pub fn ph_params(&self) -> PhParams {
        PhParams { m: self.m, gamma: self.gamma, max_eps: self.max_eps, max_len: self.max_len }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// Drop the cross-modal term (alpha = 0) and skip the topology branch.
    pub no_cross: bool,
    pub no_h0: bool,
    pub no_h1: bool,
    /// Mean instead of max over the diagram point set.
    pub avgpool_topo: bool,
    /// Train on the weighted cross-modal term alone.
    pub no_time_loss: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    /// Seeds of the multi-seed studies; empty means just the run seed.
    pub seeds: Vec<u64>,
    /// Training-set fractions of the limited-data study.
    pub fractions: Vec<f64>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            seeds: Vec::new(),
            fractions: vec![0.01, 0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// `synth:n_per_class=..,len=..,seed=..`, `uea:<prefix>`, or a UCR prefix
    /// (`ucr:<prefix>` or a bare path) naming `<prefix>_TRAIN.tsv` / `_TEST.tsv`.
    pub dataset: String,
    pub seed: u64,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub temporal: TemporalConfig,
    pub topo: TopoConfig,
    pub proj: ProjConfig,
    pub loss: LossConfig,
    pub tda: TdaConfig,
    pub augment: AugmentConfig,
    pub ablation: Ablation,
    pub probe: ProbeConfig,
    pub study: StudyConfig,
    pub out_dir: PathBuf,
    /// Diagram cache file; defaults to `<out_dir>/diagrams.bin`.
    pub ph_cache: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dataset: "synth:n_per_class=100,len=128,seed=42".into(),
            seed: 42,
            epochs: 50,
            batch_size: 8,
            lr: 1e-3,
            temporal: TemporalConfig::default(),
            topo: TopoConfig::default(),
            proj: ProjConfig::default(),
            loss: LossConfig::default(),
            tda: TdaConfig::default(),
            augment: AugmentConfig::default(),
            ablation: Ablation::default(),
            probe: ProbeConfig::default(),
            study: StudyConfig::default(),
            out_dir: PathBuf::from("runs"),
            ph_cache: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Synth { n_per_class: usize, len: usize, seed: u64 },
    Ucr(PathBuf),
    Uea(PathBuf),
}

impl DatasetSpec {
    pub fn parse(spec: &str) -> Result<Self> {
        if let Some(rest) = spec.strip_prefix("synth:") {
            let (mut n, mut len, mut seed) = (100usize, 128usize, 42u64);
            for kv in rest.split(',').filter(|s| !s.is_empty()) {
                let (k, v) = kv
                    .split_once('=')
                    .ok_or_else(|| Error::Config(format!("bad synth option {kv:?}")))?;
                let bad = |_| Error::Config(format!("bad value for {k}: {v:?}"));
                match k.trim() {
                    "n_per_class" => n = v.trim().parse().map_err(bad)?,
                    "len" => len = v.trim().parse().map_err(bad)?,
                    "seed" => seed = v.trim().parse().map_err(bad)?,
                    other => return Err(Error::Config(format!("unknown synth option {other:?}"))),
                }
            }
            Ok(Self::Synth { n_per_class: n, len, seed })
        } else if let Some(rest) = spec.strip_prefix("uea:") {
            Ok(Self::Uea(rest.into()))
        } else if let Some(rest) = spec.strip_prefix("ucr:") {
            Ok(Self::Ucr(rest.into()))
        } else if spec.is_empty() {
            Err(Error::Config("empty dataset spec".into()))
        } else {
            Ok(Self::Ucr(spec.into()))
        }
    }

    /// Loads the raw (unnormalized) dataset.
    pub fn load(&self) -> Result<Dataset> {
        match self {
            Self::Synth { n_per_class, len, seed } => data::synth_generate(*n_per_class, *len, *seed),
            Self::Ucr(p) => data::load_ucr_tsv(p),
            Self::Uea(p) => data::load_uea_tsv(p),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        DatasetSpec::parse(&self.dataset)?;
        let checks = [
            (self.batch_size >= 1, "batch_size must be at least 1"),
            (self.lr > 0.0 && self.lr.is_finite(), "lr must be positive"),
            (self.temporal.hidden >= 1 && self.temporal.out_dim >= 1, "temporal widths must be positive"),
            (self.temporal.kernel >= 1, "temporal.kernel must be positive"),
            ((0.0..1.0).contains(&self.temporal.mask_prob), "temporal.mask_prob must lie in [0, 1)"),
            (self.topo.w1 >= 1 && self.topo.w2 >= 1 && self.topo.out_dim >= 1, "topo widths must be positive"),
            (self.proj.dim >= 1, "proj.dim must be positive"),
            (self.loss.tau > 0.0, "loss.tau must be positive"),
            (self.loss.alpha >= 0.0 && self.loss.alpha.is_finite(), "loss.alpha must be non-negative"),
            (self.tda.m >= 1 && self.tda.capacity >= 1 && self.tda.max_len >= 2, "invalid tda settings"),
            (self.tda.gamma != Some(0), "tda.gamma must be positive"),
            (self.augment.sigma >= 0.0, "augment.sigma must be non-negative"),
            (self.augment.segments >= 1, "augment.segments must be positive"),
            (
                self.study.fractions.iter().all(|f| *f > 0.0 && *f <= 1.0),
                "study.fractions must lie in (0, 1]",
            ),
            (!(self.ablation.no_cross && self.ablation.no_time_loss), "no_cross and no_time_loss leave no loss"),
            (!(self.ablation.no_h0 && self.ablation.no_h1) || self.ablation.no_cross, "no_h0 and no_h1 leave no diagram"),
        ];
        match checks.iter().find(|(ok, _)| !ok) {
            Some((_, msg)) => Err(Error::Config((*msg).into())),
            None => Ok(()),
        }
    }

    pub fn model_config(&self) -> ModelConfig {
        ModelConfig { temporal: self.temporal.clone(), topo: self.topo.clone(), proj: self.proj.clone() }
    }

    pub fn pooling(&self) -> Pooling {
        if self.ablation.avgpool_topo {
            Pooling::Mean
        } else {
            Pooling::Max
        }
    }

    /// Cross-modal weight after ablations.
    pub fn effective_alpha(&self) -> f64 {
        if self.ablation.no_cross {
            0.0
        } else {
            self.loss.alpha
        }
    }

    /// Loads the dataset and z-normalizes it with training statistics.
    pub fn load_dataset(&self) -> Result<Dataset> {
        let raw = DatasetSpec::parse(&self.dataset)?.load()?;
        Ok(zscore_normalize(&raw))
    }

    /// Hex SHA-256 of the canonical JSON of every result-affecting field.
    pub fn config_hash(&self) -> String {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("out_dir");
            obj.remove("ph_cache");
        }
        hex::encode(Sha256::digest(v.to_string().as_bytes()))
    }

    /// Fingerprint of the settings that determine the diagrams.
    pub fn diagram_key(&self) -> u64 {
        let text = serde_json::json!({ "dataset": self.dataset, "tda": self.tda.ph_params() }).to_string();
        let digest = Sha256::digest(text.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
    }

    pub fn run_id(&self, task: &str) -> String {
        format!("{task}-{}-s{}", &self.config_hash()[..12], self.seed)
    }

    pub fn study_seeds(&self) -> Vec<u64> {
        if self.study.seeds.is_empty() {
            vec![self.seed]
        } else {
            self.study.seeds.clone()
        }
    }

    pub fn cache_path(&self) -> PathBuf {
        self.ph_cache.clone().unwrap_or_else(|| self.out_dir.join("diagrams.bin"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn json_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.ablation.no_h1 = true;
        cfg.tda.gamma = Some(3);
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.config_hash(), cfg.config_hash());
    }

    #[test]
    fn partial_json_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"epochs": 3, "loss": {"alpha": 0.25}}"#).unwrap();
        assert_eq!(cfg.epochs, 3);
        assert_eq!(cfg.loss.alpha, 0.25);
        assert_eq!(cfg.loss.tau, 0.1);
        assert_eq!(cfg.batch_size, 8);
    }

    #[test]
    fn unknown_keys_are_config_errors() {
        let err = RunConfig::from_json(r#"{"epoch": 3}"#).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn hash_tracks_results_not_paths() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.out_dir = "elsewhere".into();
        assert_eq!(a.config_hash(), b.config_hash());
        b.ablation.no_cross = true;
        assert_ne!(a.config_hash(), b.config_hash());
        let mut c = a.clone();
        c.seed = 7;
        assert_ne!(a.config_hash(), c.config_hash());
    }

    #[test]
    fn dataset_specs() {
        assert_eq!(
            DatasetSpec::parse("synth:n_per_class=5,len=40,seed=1").unwrap(),
            DatasetSpec::Synth { n_per_class: 5, len: 40, seed: 1 }
        );
        assert_eq!(DatasetSpec::parse("data/Coffee").unwrap(), DatasetSpec::Ucr("data/Coffee".into()));
        assert_eq!(DatasetSpec::parse("uea:x/Y").unwrap(), DatasetSpec::Uea("x/Y".into()));
        assert!(DatasetSpec::parse("synth:n=5").is_err());
        assert!(DatasetSpec::parse("synth:len=abc").is_err());
    }

    #[test]
    fn validation() {
        assert!(RunConfig::default().validate().is_ok());
        let mut cfg = RunConfig::default();
        cfg.batch_size = 0;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
