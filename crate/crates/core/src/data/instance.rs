use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One sample: `len` timestamps of `channels` variables, stored time-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesInstance {
    pub id: u64,
    pub label: Option<usize>,
    len: usize,
    channels: usize,
    values: Vec<f64>,
}

impl TimeSeriesInstance {
    pub fn new(id: u64, label: Option<usize>, len: usize, channels: usize, values: Vec<f64>) -> Result<Self> {
        if channels == 0 || values.len() != len * channels {
            return Err(Error::ShapeMismatch {
                op: "TimeSeriesInstance::new",
                detail: format!("{} values for {len} x {channels}", values.len()),
            });
        }
        if len < 2 {
            return Err(Error::SeriesTooShort { len, required: 2 });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "instance {id}: non-finite value at t={}, c={}",
                pos / channels,
                pos % channels
            )));
        }
        Ok(Self { id, label, len, channels, values })
    }

    /// Builds a univariate instance.
    pub fn univariate(id: u64, label: Option<usize>, values: Vec<f64>) -> Result<Self> {
        let len = values.len();
        Self::new(id, label, len, 1, values)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn at(&self, t: usize, c: usize) -> f64 {
        self.values[t * self.channels + c]
    }

    pub fn channel(&self, c: usize) -> Vec<f64> {
        self.values.iter().skip(c).step_by(self.channels).copied().collect()
    }

    /// Raw values of timestamps `start..end`, time-major.
    pub fn slice(&self, start: usize, end: usize) -> Vec<f64> {
        self.values[start * self.channels..end * self.channels].to_vec()
    }

    /// Same shape, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), self.values.len());
        Self { values, ..self.clone() }
    }
}

/// Per-channel affine statistics fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<TimeSeriesInstance>,
    pub test: Vec<TimeSeriesInstance>,
    pub n_classes: usize,
    pub norm: Option<NormStats>,
}

impl Dataset {
    pub fn channels(&self) -> usize {
        self.train.first().or(self.test.first()).map_or(0, |x| x.channels())
    }

    pub fn series_len(&self) -> usize {
        self.train.first().or(self.test.first()).map_or(0, |x| x.len())
    }

    pub fn instances(&self) -> impl Iterator<Item = &TimeSeriesInstance> {
        self.train.iter().chain(&self.test)
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Checks shape consistency, label range and split disjointness.
    pub fn validate(&self) -> Result<()> {
        let (len, channels) = (self.series_len(), self.channels());
        let mut ids = std::collections::HashSet::new();
        for x in self.instances() {
            if x.len() != len || x.channels() != channels {
                return Err(Error::InvalidData(format!(
                    "instance {} has shape {}x{}, expected {len}x{channels}",
                    x.id,
                    x.len(),
                    x.channels()
                )));
            }
            if let Some(l) = x.label {
                if l >= self.n_classes {
                    return Err(Error::InvalidData(format!("label {l} out of range for instance {}", x.id)));
                }
            }
            if !ids.insert(x.id) {
                return Err(Error::InvalidData(format!("duplicate instance id {}", x.id)));
            }
        }
        Ok(())
    }
}

/// Per-channel z-score using training statistics only; zero-variance channels are only centered.
pub fn zscore_normalize(ds: &Dataset) -> Dataset {
    let c = ds.channels();
    let mut sum = vec![0.0; c];
    let mut count = 0usize;
    for x in &ds.train {
        for t in 0..x.len() {
            for (k, s) in sum.iter_mut().enumerate() {
                *s += x.at(t, k);
            }
        }
        count += x.len();
    }
    let n = count.max(1) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let mut sq = vec![0.0; c];
    for x in &ds.train {
        for t in 0..x.len() {
            for (k, s) in sq.iter_mut().enumerate() {
                let d = x.at(t, k) - mean[k];
                *s += d * d;
            }
        }
    }
    let std: Vec<f64> = sq.iter().map(|s| (s / n).sqrt()).collect();
    let apply = |x: &TimeSeriesInstance| {
        let values = x
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let k = i % c;
                let centered = v - mean[k];
                if std[k] > 0.0 {
                    centered / std[k]
                } else {
                    centered
                }
            })
            .collect();
        x.with_values(values)
    };
    Dataset {
        name: ds.name.clone(),
        train: ds.train.iter().map(apply).collect(),
        test: ds.test.iter().map(apply).collect(),
        n_classes: ds.n_classes,
        norm: Some(NormStats { mean, std }),
    }
}
