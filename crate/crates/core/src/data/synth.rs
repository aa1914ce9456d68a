use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use super::instance::{Dataset, TimeSeriesInstance};
use crate::error::{Error, Result};
use crate::rng;

/// Two-class desk-scale set: noisy sinusoids (class 0) against white noise (class 1).
///
/// Each class is split in half, the larger half going to train.
pub fn synth_generate(n_per_class: usize, len: usize, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 || len < 32 {
        return Err(Error::Config(format!(
            "synthetic data needs n_per_class >= 1 and length >= 32 (got {n_per_class}, {len})"
        )));
    }
    let mut rng = rng::seeded(seed);
    let small = Normal::new(0.0, 0.1).expect("valid sigma");
    let unit = Normal::new(0.0, 1.0).expect("valid sigma");
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in 0..2usize {
        for k in 0..n_per_class {
            let values: Vec<f64> = if class == 0 {
                let freq = rng.random_range(3..=6) as f64;
                let phase = rng.random_range(0.0..2.0 * PI);
                (0..len)
                    .map(|t| (2.0 * PI * freq * t as f64 / len as f64 + phase).sin() + small.sample(&mut rng))
                    .collect()
            } else {
                (0..len).map(|_| unit.sample(&mut rng)).collect()
            };
            let split = if k < n_per_class.div_ceil(2) { &mut train } else { &mut test };
            split.push((class, values));
        }
    }
    train.shuffle(&mut rng);
    test.shuffle(&mut rng);
    let n_train = train.len() as u64;
    let build = |rows: Vec<(usize, Vec<f64>)>, first: u64| {
        rows.into_iter()
            .enumerate()
            .map(|(i, (label, values))| TimeSeriesInstance::univariate(first + i as u64, Some(label), values))
            .collect::<Result<Vec<_>>>()
    };
    Ok(Dataset {
        name: format!("synth-{n_per_class}x{len}-s{seed}"),
        train: build(train, 0)?,
        test: build(test, n_train)?,
        n_classes: 2,
        norm: None,
    })
}

/// Stratified subsample of the training split; every class keeps at least one instance.
pub fn subsample_fraction(ds: &Dataset, fraction: f64, seed: u64) -> Result<Dataset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::Config(format!("fraction must be in (0, 1], got {fraction}")));
    }
    if fraction == 1.0 {
        return Ok(ds.clone());
    }
    let mut rng = rng::seeded(seed);
    let mut keep = vec![false; ds.train.len()];
    let mut by_class: std::collections::BTreeMap<Option<usize>, Vec<usize>> = Default::default();
    for (i, x) in ds.train.iter().enumerate() {
        by_class.entry(x.label).or_default().push(i);
    }
    for members in by_class.values_mut() {
        let k = ((fraction * members.len() as f64).floor() as usize).max(1);
        members.shuffle(&mut rng);
        for &i in &members[..k] {
            keep[i] = true;
        }
    }
    let train = ds.train.iter().zip(&keep).filter(|(_, &k)| k).map(|(x, _)| x.clone()).collect();
    Ok(Dataset { train, ..ds.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_stratified() {
        let a = synth_generate(10, 64, 7).unwrap();
        let b = synth_generate(10, 64, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.train.len(), 10);
        assert_eq!(a.test.len(), 10);
        for split in [&a.train, &a.test] {
            assert_eq!(split.iter().filter(|x| x.label == Some(0)).count(), 5);
        }
        a.validate().unwrap();
        assert_ne!(a, synth_generate(10, 64, 8).unwrap());
    }

    #[test]
    fn rejects_short_series() {
        assert!(synth_generate(4, 16, 0).is_err());
    }

    #[test]
    fn subsample_rules() {
        let ds = synth_generate(20, 32, 1).unwrap();
        assert_eq!(subsample_fraction(&ds, 1.0, 3).unwrap(), ds);
        let tiny = subsample_fraction(&ds, 0.01, 3).unwrap();
        assert_eq!(tiny.train.len(), 2);
        assert_eq!(tiny.test, ds.test);
        let labels: std::collections::BTreeSet<_> = tiny.train.iter().map(|x| x.label).collect();
        assert_eq!(labels.len(), 2);
        assert_eq!(subsample_fraction(&ds, 0.3, 9).unwrap(), subsample_fraction(&ds, 0.3, 9).unwrap());
        assert_eq!(subsample_fraction(&ds, 0.3, 9).unwrap().train.len(), 6);
        assert!(subsample_fraction(&ds, 0.0, 1).is_err());
    }
}
