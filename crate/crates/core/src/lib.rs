//! Contrastive representation learning for time series, pairing a dilated
//! causal temporal encoder with a set encoder over persistence diagrams.

pub mod augment;
pub mod config;
pub mod data;
pub mod encoders;
pub mod error;
pub mod losses;
pub mod nn;
pub mod rng;
pub mod tda;
pub mod train;

pub use error::{Error, ErrorKind, Result};

pub use augment::{random_crop_pair, AugmentConfig, CropPair, Robustness};
pub use config::{Ablation, DatasetSpec, RunConfig, StudyConfig, TdaConfig};
pub use data::{Dataset, MetricRecord, ProbeConfig, ProbeResult, TimeSeriesInstance};
pub use encoders::{ModelConfig, Pooling, TopoClModel};
pub use losses::LossConfig;
pub use tda::{PersistenceDiagram, PersistencePair, PhParams, TopoPointSet};
pub use train::{EpochLoss, Evaluation, TrainOutput};
