//! Frozen-representation classifier: L2-regularised multinomial logistic regression.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub penalties: Vec<f64>,
    pub iterations: usize,
    pub val_fraction: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            penalties: vec![1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2],
            iterations: 500,
            val_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub accuracy: f64,
    pub penalty: f64,
}

struct Standardizer {
    mean: Vec<f64>,
    scale: Vec<f64>,
}

impl Standardizer {
    fn fit(x: &[Vec<f64>]) -> Self {
        let f = x[0].len();
        let n = x.len() as f64;
        let mut mean = vec![0.0; f];
        for row in x {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v / n;
            }
        }
        let mut var = vec![0.0; f];
        for row in x {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m) * (v - m) / n;
            }
        }
        let scale = var.iter().map(|v| if *v > 0.0 { 1.0 / v.sqrt() } else { 0.0 }).collect();
        Self { mean, scale }
    }

    fn apply(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter()
            .map(|row| row.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) * s).collect())
            .collect()
    }
}

struct Softmax {
    weights: Vec<f64>, // [features, classes]
    bias: Vec<f64>,
    classes: usize,
}

impl Softmax {
    fn logits(&self, row: &[f64]) -> Vec<f64> {
        let mut out = self.bias.clone();
        for (i, v) in row.iter().enumerate() {
            if *v != 0.0 {
                for (k, o) in out.iter_mut().enumerate() {
                    *o += v * self.weights[i * self.classes + k];
                }
            }
        }
        out
    }

    fn predict(&self, row: &[f64]) -> usize {
        let logits = self.logits(row);
        let mut best = 0;
        for k in 1..logits.len() {
            if logits[k] > logits[best] {
                best = k;
            }
        }
        best
    }
}

/// Largest eigenvalue of X^T X / n by power iteration.
fn gram_spectral_norm(x: &[Vec<f64>]) -> f64 {
    let f = x[0].len();
    let n = x.len() as f64;
    let mut v = vec![1.0 / (f as f64).sqrt(); f];
    let mut lambda = 0.0;
    for _ in 0..50 {
        let mut next = vec![0.0; f];
        for row in x {
            let dot: f64 = row.iter().zip(&v).map(|(a, b)| a * b).sum();
            for (o, a) in next.iter_mut().zip(row) {
                *o += dot * a / n;
            }
        }
        let norm = next.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        lambda = norm;
        v = next.into_iter().map(|a| a / norm).collect();
    }
    lambda
}

fn fit(x: &[Vec<f64>], y: &[usize], classes: usize, penalty: f64, iterations: usize) -> Softmax {
    let f = x[0].len();
    let n = x.len() as f64;
    let mut model = Softmax { weights: vec![0.0; f * classes], bias: vec![0.0; classes], classes };
    // 1/L step for the softmax cross-entropy (curvature <= 1/2 of the Gram spectrum)
    let lr = 1.0 / (0.5 * gram_spectral_norm(x) + penalty + 0.5);
    for _ in 0..iterations {
        let mut gw = vec![0.0; f * classes];
        let mut gb = vec![0.0; classes];
        for (row, &label) in x.iter().zip(y) {
            let logits = model.logits(row);
            let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exp: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
            let z: f64 = exp.iter().sum();
            for k in 0..classes {
                let g = (exp[k] / z - if k == label { 1.0 } else { 0.0 }) / n;
                gb[k] += g;
                for (i, v) in row.iter().enumerate() {
                    gw[i * classes + k] += g * v;
                }
            }
        }
        for (w, g) in model.weights.iter_mut().zip(&gw) {
            *w -= lr * (g + penalty * *w);
        }
        for (b, g) in model.bias.iter_mut().zip(&gb) {
            *b -= lr * g;
        }
    }
    model
}

fn accuracy(model: &Softmax, x: &[Vec<f64>], y: &[usize]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let hits = x.iter().zip(y).filter(|(row, &label)| model.predict(row) == label).count();
    hits as f64 / x.len() as f64
}

/// Deterministic stratified holdout: every `stride`-th member of each class.
/// `None` when some class is too small to appear on both sides.
fn holdout(y: &[usize], classes: usize, fraction: f64) -> Option<(Vec<usize>, Vec<usize>)> {
    let mut fit_idx = Vec::new();
    let mut val_idx = Vec::new();
    for k in 0..classes {
        let members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == k).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < 2 {
            return None;
        }
        let n_val = ((fraction * members.len() as f64).round() as usize).clamp(1, members.len() - 1);
        let stride = members.len() as f64 / n_val as f64;
        let picks: Vec<usize> = (0..n_val).map(|j| members[(j as f64 * stride) as usize]).collect();
        for &i in &members {
            if picks.contains(&i) {
                val_idx.push(i);
            } else {
                fit_idx.push(i);
            }
        }
    }
    Some((fit_idx, val_idx))
}

fn select<T: Clone>(v: &[T], idx: &[usize]) -> Vec<T> {
    idx.iter().map(|&i| v[i].clone()).collect()
}

/// Fits on train, picks the penalty on a stratified validation split, refits on all
/// of train, and reports test accuracy.
pub fn linear_probe(
    train_x: &[Vec<f64>],
    train_y: &[usize],
    test_x: &[Vec<f64>],
    test_y: &[usize],
    cfg: &ProbeConfig,
) -> Result<ProbeResult> {
    if train_x.is_empty() || train_x.len() != train_y.len() || test_x.len() != test_y.len() {
        return Err(Error::ShapeMismatch {
            op: "linear_probe",
            detail: format!("{} train rows / {} labels, {} test rows / {} labels", train_x.len(), train_y.len(), test_x.len(), test_y.len()),
        });
    }
    let distinct: std::collections::BTreeSet<usize> = train_y.iter().copied().collect();
    if distinct.len() < 2 {
        return Err(Error::SingleClass);
    }
    let classes = train_y.iter().chain(test_y).max().map_or(0, |m| m + 1);
    let scaler = Standardizer::fit(train_x);
    let train = scaler.apply(train_x);
    let test = scaler.apply(test_x);

    let (fit_idx, val_idx) = holdout(train_y, classes, cfg.val_fraction)
        .unwrap_or_else(|| ((0..train.len()).collect(), (0..train.len()).collect()));
    let (fx, fy) = (select(&train, &fit_idx), select(train_y, &fit_idx));
    let (vx, vy) = (select(&train, &val_idx), select(train_y, &val_idx));

    let mut best = (f64::NEG_INFINITY, cfg.penalties.first().copied().unwrap_or(1.0));
    for &penalty in &cfg.penalties {
        let acc = accuracy(&fit(&fx, &fy, classes, penalty, cfg.iterations), &vx, &vy);
        // ties go to the stronger penalty
        if acc >= best.0 {
            best = (acc, penalty);
        }
    }
    let model = fit(&train, train_y, classes, best.1, cfg.iterations);
    Ok(ProbeResult { accuracy: accuracy(&model, &test, test_y), penalty: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::Rng as _;

    fn blobs(n: usize, gap: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
        let mut rng = crate::rng::seeded(seed);
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let label = i % 2;
            let center = if label == 0 { -gap } else { gap };
            x.push(vec![center + rng.random_range(-0.5..0.5), rng.random_range(-1.0..1.0)]);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn separable_is_perfect() {
        let (x, y) = blobs(40, 2.0, 1);
        let (tx, ty) = blobs(40, 2.0, 2);
        let r = linear_probe(&x, &y, &tx, &ty, &ProbeConfig::default()).unwrap();
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn shuffled_labels_are_chance() {
        let mut rng = crate::rng::seeded(5);
        let x: Vec<Vec<f64>> = (0..400).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut y: Vec<usize> = (0..400).map(|i| i % 2).collect();
        y.shuffle(&mut rng);
        let r = linear_probe(&x[..200], &y[..200], &x[200..], &y[200..], &ProbeConfig::default()).unwrap();
        assert!((r.accuracy - 0.5).abs() <= 0.1, "accuracy {}", r.accuracy);
    }

    #[test]
    fn identical_reps_give_majority_rate() {
        let x = vec![vec![1.0, 2.0]; 10];
        let y = vec![0, 1, 1, 1, 0, 1, 1, 0, 1, 1];
        let tx = vec![vec![1.0, 2.0]; 4];
        let ty = vec![1, 0, 0, 1];
        let r = linear_probe(&x, &y, &tx, &ty, &ProbeConfig::default()).unwrap();
        assert_eq!(r.accuracy, 0.5);
        let ty = vec![1, 1, 1, 0];
        assert_eq!(linear_probe(&x, &y, &tx, &ty, &ProbeConfig::default()).unwrap().accuracy, 0.75);
    }

    #[test]
    fn single_class_is_an_error() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(linear_probe(&x, &[1, 1], &x, &[1, 0], &ProbeConfig::default()), Err(Error::SingleClass)));
    }

    #[test]
    fn tiny_train_falls_back_to_full_fit() {
        let x = vec![vec![-1.0], vec![1.0]];
        let r = linear_probe(&x, &[0, 1], &[vec![-2.0], vec![3.0]], &[0, 1], &ProbeConfig::default()).unwrap();
        assert_eq!(r.accuracy, 1.0);
    }
}
