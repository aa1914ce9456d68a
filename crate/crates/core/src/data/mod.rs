//! Datasets, loaders, the linear probe and metric logs.

pub mod instance;
pub mod metrics;
pub mod probe;
pub mod synth;
pub mod ucr;

pub use instance::{zscore_normalize, Dataset, NormStats, TimeSeriesInstance};
pub use metrics::{read_metrics, write_metrics, MetricRecord};
pub use probe::{linear_probe, ProbeConfig, ProbeResult};
pub use synth::{subsample_fraction, synth_generate};
pub use ucr::{load_uea_tsv, load_ucr_tsv, write_ucr_tsv};
