//! Inputs shared by the benchmarks.

use topocl::TimeSeriesInstance;

/// Noisy sine with `len` samples; deterministic.
pub fn sine(len: usize) -> Vec<f64> {
    (0..len).map(|t| (t as f64 * 0.2).sin() + 0.05 * ((t * 7919 % 97) as f64 / 97.0 - 0.5)).collect()
}

pub fn instance(len: usize) -> TimeSeriesInstance {
    TimeSeriesInstance::univariate(0, Some(0), sine(len)).expect("valid series")
}
