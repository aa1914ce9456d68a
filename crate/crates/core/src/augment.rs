//! Overlapping crop pairs for the two training views and the distortion
//! transforms of the robustness study.

use std::ops::Range;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::TimeSeriesInstance;
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CropWindows {
    pub view_a: Range<usize>,
    pub view_b: Range<usize>,
    pub overlap: Range<usize>,
}

impl CropWindows {
    /// Overlap expressed in view-a local indices.
    pub fn overlap_in_a(&self) -> Range<usize> {
        self.overlap.start - self.view_a.start..self.overlap.end - self.view_a.start
    }

    /// Overlap expressed in view-b local indices.
    pub fn overlap_in_b(&self) -> Range<usize> {
        self.overlap.start - self.view_b.start..self.overlap.end - self.view_b.start
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CropPair {
    pub windows: CropWindows,
    /// Time-major values of each view.
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Crop windows for a batch of series of length `len`.
///
/// All members share one overlap length and relative layout and differ by a
/// per-instance offset, so the overlap-restricted sequences can be stacked.
pub fn random_crop_plan(len: usize, batch: usize, rng: &mut Rng) -> Result<Vec<CropWindows>> {
    if len < 2 {
        return Err(Error::SeriesTooShort { len, required: 2 });
    }
    let crop_len = rng.random_range(2..=len);
    let left = rng.random_range(0..=len - crop_len);
    let right = left + crop_len;
    let outer_left = rng.random_range(0..=left);
    let outer_right = rng.random_range(right..=len);
    Ok((0..batch)
        .map(|_| {
            let lo = -(outer_left as i64);
            let hi = (len - outer_right) as i64;
            let off = rng.random_range(lo..=hi);
            let at = |i: usize| (i as i64 + off) as usize;
            CropWindows {
                view_a: at(outer_left)..at(right),
                view_b: at(left)..at(outer_right),
                overlap: at(left)..at(right),
            }
        })
        .collect())
}

pub fn random_crop_pair(x: &TimeSeriesInstance, rng: &mut Rng) -> Result<CropPair> {
    let windows = random_crop_plan(x.len(), 1, rng)?.remove(0);
    Ok(CropPair {
        a: x.slice(windows.view_a.start, windows.view_a.end),
        b: x.slice(windows.view_b.start, windows.view_b.end),
        windows,
    })
}

fn normal(sigma: f64) -> Result<Normal<f64>> {
    Normal::new(0.0, sigma).map_err(|e| Error::Config(format!("sigma {sigma}: {e}")))
}

/// Adds i.i.d. `N(0, sigma²)` noise to every value.
pub fn jitter(x: &TimeSeriesInstance, sigma: f64, rng: &mut Rng) -> Result<TimeSeriesInstance> {
    let n = normal(sigma)?;
    Ok(x.with_values(x.values().iter().map(|v| v + n.sample(rng)).collect()))
}

fn per_channel(x: &TimeSeriesInstance, f: impl Fn(f64, f64) -> f64, draws: Vec<f64>) -> TimeSeriesInstance {
    let c = x.channels();
    x.with_values(x.values().iter().enumerate().map(|(i, &v)| f(v, draws[i % c])).collect())
}

/// Multiplies each channel by one factor drawn from `N(1, sigma²)`.
pub fn scale(x: &TimeSeriesInstance, sigma: f64, rng: &mut Rng) -> Result<TimeSeriesInstance> {
    let n = normal(sigma)?;
    let draws = (0..x.channels()).map(|_| 1.0 + n.sample(rng)).collect();
    Ok(per_channel(x, |v, s| v * s, draws))
}

/// Adds one offset drawn from `N(0, sigma²)` to each channel.
pub fn shift(x: &TimeSeriesInstance, sigma: f64, rng: &mut Rng) -> Result<TimeSeriesInstance> {
    let n = normal(sigma)?;
    let draws = (0..x.channels()).map(|_| n.sample(rng)).collect();
    Ok(per_channel(x, |v, s| v + s, draws))
}

/// Splits time into `segments` contiguous pieces and concatenates them in a
/// shuffled order.
pub fn segment_permute(x: &TimeSeriesInstance, segments: usize, rng: &mut Rng) -> Result<TimeSeriesInstance> {
    let len = x.len();
    if segments == 0 || segments > len {
        return Err(Error::Config(format!("{segments} segments for length {len}")));
    }
    let bounds: Vec<usize> = (0..=segments).map(|i| i * len / segments).collect();
    let mut order: Vec<usize> = (0..segments).collect();
    order.shuffle(rng);
    let values = order.iter().flat_map(|&s| x.slice(bounds[s], bounds[s + 1])).collect();
    Ok(x.with_values(values))
}

pub fn flip(x: &TimeSeriesInstance) -> TimeSeriesInstance {
    x.with_values(x.values().iter().map(|v| -v).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Robustness {
    #[default]
    None,
    Jitter,
    Scale,
    Shift,
    Permute,
    Flip,
}

impl Robustness {
    pub const ALL: [Robustness; 6] = [Self::None, Self::Jitter, Self::Scale, Self::Shift, Self::Permute, Self::Flip];

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Jitter => "jitter",
            Self::Scale => "scale",
            Self::Shift => "shift",
            Self::Permute => "permute",
            Self::Flip => "flip",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AugmentConfig {
    pub robustness: Robustness,
    pub sigma: f64,
    pub segments: usize,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self { robustness: Robustness::None, sigma: 0.1, segments: 5 }
    }
}

impl AugmentConfig {
    /// Applies the configured distortion; `None` returns the series unchanged.
    pub fn apply(&self, x: &TimeSeriesInstance, rng: &mut Rng) -> Result<TimeSeriesInstance> {
        match self.robustness {
            Robustness::None => Ok(x.clone()),
            Robustness::Jitter => jitter(x, self.sigma, rng),
            Robustness::Scale => scale(x, self.sigma, rng),
            Robustness::Shift => shift(x, self.sigma, rng),
            Robustness::Permute => segment_permute(x, self.segments.min(x.len()), rng),
            Robustness::Flip => Ok(flip(x)),
        }
    }
}
